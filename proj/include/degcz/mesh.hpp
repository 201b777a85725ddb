#pragma once

#include "degcz/core.hpp"
#include "degcz/quadrature.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace degcz {

using Point2 = Eigen::Vector2d;

// Subdomain: boundary is the topological boundary of the cell set.
enum class GeometryKind { UnitDisk, UnitSquare, Annulus, Subdomain };

struct MeshGeometry {
    GeometryKind kind = GeometryKind::UnitDisk;
    double r_inner = 0.0;
    double r_outer = 1.0;
    // whether a ball lies inside the closed domain
    bool contains(const Ball& b, double slack = 1e-12) const;
    bool on_boundary(const Point2& x, double tol = 1e-9) const;
    std::string describe() const;
};

class Mesh {
public:
    Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> cells, std::vector<bool> boundary,
         MeshGeometry geometry, int refinement_level = 0);

    int dim() const { return 2; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    const std::vector<Point2>& vertices() const { return vertices_; }
    const Point2& vertex(int i) const { return vertices_[i]; }
    const std::vector<std::array<int, 3>>& cells() const { return cells_; }
    const std::array<int, 3>& cell(int c) const { return cells_[c]; }
    const std::vector<bool>& boundary() const { return boundary_; }
    bool is_boundary(int v) const { return boundary_[v]; }
    const MeshGeometry& geometry() const { return geometry_; }
    int refinement_level() const { return level_; }

    double area(int c) const { return area_[c]; }
    const Point2& barycenter(int c) const { return bary_[c]; }
    // gradients of the three hat functions on cell c (columns)
    const Eigen::Matrix<double, 2, 3>& hat_gradients(int c) const { return grads_[c]; }
    double diameter(int c) const { return diam_[c]; }
    double max_diameter() const;
    double total_area() const;
    // area of the vertex patch
    const std::vector<double>& patch_area() const { return patch_; }

private:
    std::vector<Point2> vertices_;
    std::vector<std::array<int, 3>> cells_;
    std::vector<bool> boundary_;
    MeshGeometry geometry_;
    int level_;
    std::vector<double> area_;
    std::vector<Point2> bary_;
    std::vector<Eigen::Matrix<double, 2, 3>> grads_;
    std::vector<double> diam_;
    std::vector<double> patch_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr unit_square_mesh(int n);

// Polar mesh of the unit disk with rings r_k = q^k down to inner_radius, then a fan to the center.
struct GradedDiskOptions {
    int segments = 16;
    double ratio = 0.7;
    double inner_radius = 1e-2;
    double radius = 1.0;
    int level = 0;
};
MeshPtr graded_disk_mesh(const GradedDiskOptions& opt);
// Doubles the angular resolution, halves the log ring spacing, shrinks the innermost radius by 4.
GradedDiskOptions refine_graded(const GradedDiskOptions& opt, int levels = 1);

MeshPtr annulus_mesh(double r_inner, double r_outer, int rings, int segments);

// Red refinement; new boundary vertices are projected onto the curved boundary.
MeshPtr refine_uniform(const Mesh& mesh);

// Cells flagged in keep, renumbered; boundary = the topological boundary of the kept set.
MeshPtr submesh(const Mesh& mesh, const std::vector<bool>& keep_cell, std::vector<int>* vertex_map = nullptr);

// Quadrature over region ∩ mesh. Cells inside use the edge-midpoint rule (exact for quadratics); cut cells
// are split into 4^depth pieces kept by barycenter membership.
struct RegionSample {
    int cell = 0;
    Point2 x;
    double weight = 0.0;
};
std::vector<RegionSample> region_rule(const Mesh& mesh, const Ball& region, int depth = 3);
double region_area(const std::vector<RegionSample>& rule);

void write_mesh_csv(const Mesh& mesh, const std::string& vertices_path, const std::string& cells_path);
MeshPtr read_mesh_csv(const std::string& vertices_path, const std::string& cells_path, MeshGeometry geometry);

}  // namespace degcz
