#pragma once

#include "degcz/config.hpp"
#include "degcz/weight_algebra.hpp"

#include <string>
#include <vector>

namespace degcz {

// Named analytic weight families. Keys are read below `prefix` (e.g. "weight.family").
//   constant         value, dim
//   rank-one-radial  theta (or eps with the plain theta formula), dim
//   power-radial     alpha, theta (defaults from eps: alpha = -eps/2 and the degenerate theta), dim
//   power-isotropic  alpha: |x|^alpha I
//   log-normal       amplitude, modes, seed, dim: exp of a smooth random symmetric field
//   example          variant, n, eps: the weight of the exact solutions
std::vector<std::string> weight_registry_names();
WeightField make_weight(const Config& cfg, const std::string& prefix = "weight");

WeightField rank_one_radial_weight(int dim, double theta);
WeightField power_radial_weight(int dim, double alpha, double theta);
WeightField power_isotropic_weight(int dim, double alpha);
WeightField log_normal_weight(int dim, double amplitude, int modes, std::uint64_t seed);

}  // namespace degcz
