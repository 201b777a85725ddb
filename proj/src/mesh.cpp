#include "degcz/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace degcz {

bool MeshGeometry::contains(const Ball& b, double slack) const {
    if (b.dim() != 2) return false;
    const double cx = b.center(0), cy = b.center(1), r = b.radius;
    const double tol = slack * std::max(1.0, r_outer);
    switch (kind) {
        case GeometryKind::UnitDisk:
            return b.center.norm() + r <= r_outer + tol;
        case GeometryKind::UnitSquare:
            return cx - r >= -tol && cx + r <= 1.0 + tol && cy - r >= -tol && cy + r <= 1.0 + tol;
        case GeometryKind::Annulus:
            return b.center.norm() + r <= r_outer + tol && b.center.norm() - r >= r_inner - tol;
        case GeometryKind::Subdomain:
            return false;
    }
    return false;
}

bool MeshGeometry::on_boundary(const Point2& x, double tol) const {
    switch (kind) {
        case GeometryKind::UnitDisk:
            return std::abs(x.norm() - r_outer) <= tol * r_outer;
        case GeometryKind::UnitSquare:
            return std::abs(x(0)) <= tol || std::abs(x(0) - 1.0) <= tol || std::abs(x(1)) <= tol ||
                   std::abs(x(1) - 1.0) <= tol;
        case GeometryKind::Annulus:
            return std::abs(x.norm() - r_outer) <= tol * r_outer || std::abs(x.norm() - r_inner) <= tol * r_outer;
        case GeometryKind::Subdomain:
            return true;
    }
    return false;
}

std::string MeshGeometry::describe() const {
    std::ostringstream out;
    switch (kind) {
        case GeometryKind::UnitDisk: out << "disk(r=" << r_outer << ")"; break;
        case GeometryKind::UnitSquare: out << "unit-square"; break;
        case GeometryKind::Annulus: out << "annulus(" << r_inner << "," << r_outer << ")"; break;
        case GeometryKind::Subdomain: out << "subdomain"; break;
    }
    return out.str();
}

namespace {

using Edge = std::pair<int, int>;
Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

Mesh::Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> cells, std::vector<bool> boundary,
           MeshGeometry geometry, int refinement_level)
    : vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      boundary_(std::move(boundary)),
      geometry_(geometry),
      level_(refinement_level) {
    const int nv = num_vertices();
    if (nv < 3 || cells_.empty()) throw GeometryError("mesh: needs at least one triangle");
    if (static_cast<int>(boundary_.size()) != nv) throw GeometryError("mesh: boundary flag count mismatch");
    area_.resize(cells_.size());
    bary_.resize(cells_.size());
    grads_.resize(cells_.size());
    diam_.resize(cells_.size());
    patch_.assign(nv, 0.0);
    std::map<Edge, int> edge_count;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        auto& t = cells_[c];
        for (int v : t) {
            if (v < 0 || v >= nv) throw GeometryError("mesh: cell references a missing vertex");
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw GeometryError("mesh: repeated vertex in a cell");
        Point2 e1 = vertices_[t[1]] - vertices_[t[0]];
        Point2 e2 = vertices_[t[2]] - vertices_[t[0]];
        double det = e1(0) * e2(1) - e1(1) * e2(0);
        if (det < 0.0) {
            std::swap(t[1], t[2]);
            std::swap(e1, e2);
            det = -det;
        }
        double longest = std::max({e1.norm(), e2.norm(), (e2 - e1).norm()});
        // shape test relative to the cell size, so deeply graded meshes are admissible
        if (!(0.5 * det > 1e-14 * longest * longest)) {
            std::ostringstream msg;
            msg << "mesh: degenerate cell " << c << " (area " << 0.5 * det << ")";
            throw GeometryError(msg.str());
        }
        area_[c] = 0.5 * det;
        diam_[c] = longest;
        bary_[c] = (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
        Eigen::Matrix2d jt;
        jt << e1(0), e1(1), e2(0), e2(1);
        Eigen::Matrix2d inv = jt.inverse();
        Eigen::Matrix<double, 2, 3> g;
        g.col(1) = inv.col(0);
        g.col(2) = inv.col(1);
        g.col(0) = -g.col(1) - g.col(2);
        grads_[c] = g;
        for (int v : t) patch_[v] += area_[c];
        for (int k = 0; k < 3; ++k) edge_count[make_edge(t[k], t[(k + 1) % 3])]++;
    }
    std::vector<bool> topo(nv, false);
    for (const auto& [e, count] : edge_count) {
        if (count > 2) throw GeometryError("mesh: non-conforming edge shared by more than two cells");
        if (count == 1) topo[e.first] = topo[e.second] = true;
    }
    for (int v = 0; v < nv; ++v) {
        if (patch_[v] == 0.0) throw GeometryError("mesh: vertex not used by any cell");
        if (topo[v] != boundary_[v]) throw GeometryError("mesh: boundary flags disagree with the cell topology");
        if (boundary_[v] && !geometry_.on_boundary(vertices_[v], 1e-8)) {
            throw GeometryError("mesh: boundary vertex off the declared geometry");
        }
    }
}

double Mesh::max_diameter() const { return *std::max_element(diam_.begin(), diam_.end()); }

double Mesh::total_area() const {
    double a = 0.0;
    for (double x : area_) a += x;
    return a;
}

MeshPtr unit_square_mesh(int n) {
    if (n < 1) throw GeometryError("unit_square_mesh: n must be positive");
    std::vector<Point2> verts;
    std::vector<bool> bnd;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
            bnd.push_back(i == 0 || j == 0 || i == n || j == n);
        }
    }
    std::vector<std::array<int, 3>> cells;
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    MeshGeometry g;
    g.kind = GeometryKind::UnitSquare;
    return std::make_shared<Mesh>(std::move(verts), std::move(cells), std::move(bnd), g, 0);
}

namespace {

// rings[k] holds the vertex ids of ring k, offset by half a segment on odd rings
void connect_rings(const std::vector<int>& outer, const std::vector<int>& inner, bool inner_shifted_forward,
                   std::vector<std::array<int, 3>>& cells) {
    const int n = static_cast<int>(outer.size());
    for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n;
        if (inner_shifted_forward) {
            cells.push_back({outer[j], inner[j], outer[jn]});
            cells.push_back({inner[j], inner[jn], outer[jn]});
        } else {
            cells.push_back({outer[j], inner[jn], outer[jn]});
            cells.push_back({inner[j], inner[jn], outer[j]});
        }
    }
}

}  // namespace

MeshPtr graded_disk_mesh(const GradedDiskOptions& opt) {
    if (opt.segments < 4 || opt.segments % 2 != 0) throw GeometryError("graded disk: segments must be even and >= 4");
    if (!(opt.ratio > 0.0 && opt.ratio < 1.0)) throw GeometryError("graded disk: ratio must lie in (0, 1)");
    if (!(opt.inner_radius > 0.0 && opt.inner_radius < opt.radius)) {
        throw GeometryError("graded disk: inner radius must lie in (0, radius)");
    }
    const int n = opt.segments;
    const int rings = std::max(1, static_cast<int>(std::lround(std::log(opt.inner_radius / opt.radius) / std::log(opt.ratio))));
    const double q = std::pow(opt.inner_radius / opt.radius, 1.0 / rings);
    const double dphi = 2.0 * std::numbers::pi / n;
    std::vector<Point2> verts;
    std::vector<bool> bnd;
    std::vector<std::vector<int>> ring_ids(rings + 1);
    for (int k = 0; k <= rings; ++k) {
        double r = k == 0 ? opt.radius : opt.radius * std::pow(q, k);
        double off = (k % 2) * 0.5;
        for (int j = 0; j < n; ++j) {
            double phi = (j + off) * dphi;
            ring_ids[k].push_back(static_cast<int>(verts.size()));
            verts.emplace_back(r * std::cos(phi), r * std::sin(phi));
            bnd.push_back(k == 0);
        }
    }
    const int center = static_cast<int>(verts.size());
    verts.emplace_back(0.0, 0.0);
    bnd.push_back(false);
    std::vector<std::array<int, 3>> cells;
    for (int k = 0; k < rings; ++k) connect_rings(ring_ids[k], ring_ids[k + 1], k % 2 == 0, cells);
    const auto& last = ring_ids[rings];
    for (int j = 0; j < n; ++j) cells.push_back({center, last[j], last[(j + 1) % n]});
    MeshGeometry g;
    g.kind = GeometryKind::UnitDisk;
    g.r_outer = opt.radius;
    return std::make_shared<Mesh>(std::move(verts), std::move(cells), std::move(bnd), g, opt.level);
}

GradedDiskOptions refine_graded(const GradedDiskOptions& opt, int levels) {
    GradedDiskOptions out = opt;
    for (int l = 0; l < levels; ++l) {
        out.segments *= 2;
        out.ratio = std::sqrt(out.ratio);
        out.inner_radius /= 4.0;
        out.level += 1;
    }
    return out;
}

MeshPtr annulus_mesh(double r_inner, double r_outer, int rings, int segments) {
    if (!(r_inner > 0.0 && r_inner < r_outer)) throw GeometryError("annulus: need 0 < r_inner < r_outer");
    if (rings < 1 || segments < 4 || segments % 2 != 0) throw GeometryError("annulus: bad resolution");
    const double dphi = 2.0 * std::numbers::pi / segments;
    std::vector<Point2> verts;
    std::vector<bool> bnd;
    std::vector<std::vector<int>> ids(rings + 1);
    for (int k = 0; k <= rings; ++k) {
        double r = k == 0 ? r_outer : (k == rings ? r_inner : r_outer * std::pow(r_inner / r_outer, double(k) / rings));
        double off = (k % 2) * 0.5;
        for (int j = 0; j < segments; ++j) {
            ids[k].push_back(static_cast<int>(verts.size()));
            verts.emplace_back(r * std::cos((j + off) * dphi), r * std::sin((j + off) * dphi));
            bnd.push_back(k == 0 || k == rings);
        }
    }
    std::vector<std::array<int, 3>> cells;
    for (int k = 0; k < rings; ++k) connect_rings(ids[k], ids[k + 1], k % 2 == 0, cells);
    MeshGeometry g;
    g.kind = GeometryKind::Annulus;
    g.r_inner = r_inner;
    g.r_outer = r_outer;
    return std::make_shared<Mesh>(std::move(verts), std::move(cells), std::move(bnd), g, 0);
}

MeshPtr refine_uniform(const Mesh& mesh) {
    std::vector<Point2> verts = mesh.vertices();
    std::vector<bool> bnd = mesh.boundary();
    std::map<Edge, int> mid;
    std::map<Edge, int> count;
    for (const auto& t : mesh.cells()) {
        for (int k = 0; k < 3; ++k) count[make_edge(t[k], t[(k + 1) % 3])]++;
    }
    const MeshGeometry& g = mesh.geometry();
    auto midpoint = [&](int a, int b) {
        Edge e = make_edge(a, b);
        auto it = mid.find(e);
        if (it != mid.end()) return it->second;
        Point2 m = 0.5 * (verts[a] + verts[b]);
        bool on_bnd = count[e] == 1;
        if (on_bnd && (g.kind == GeometryKind::UnitDisk || g.kind == GeometryKind::Annulus)) {
            double target = g.r_outer;
            if (g.kind == GeometryKind::Annulus &&
                std::abs(verts[a].norm() - g.r_inner) < std::abs(verts[a].norm() - g.r_outer)) {
                target = g.r_inner;
            }
            m *= target / m.norm();
        }
        int id = static_cast<int>(verts.size());
        verts.push_back(m);
        bnd.push_back(on_bnd);
        mid[e] = id;
        return id;
    };
    std::vector<std::array<int, 3>> cells;
    cells.reserve(4 * mesh.num_cells());
    for (const auto& t : mesh.cells()) {
        int a = t[0], b = t[1], c = t[2];
        int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
        cells.push_back({a, ab, ca});
        cells.push_back({ab, b, bc});
        cells.push_back({ca, bc, c});
        cells.push_back({ab, bc, ca});
    }
    return std::make_shared<Mesh>(std::move(verts), std::move(cells), std::move(bnd), g, mesh.refinement_level() + 1);
}

MeshPtr submesh(const Mesh& mesh, const std::vector<bool>& keep_cell, std::vector<int>* vertex_map) {
    if (static_cast<int>(keep_cell.size()) != mesh.num_cells()) throw GeometryError("submesh: flag count mismatch");
    std::vector<int> map(mesh.num_vertices(), -1);
    std::vector<Point2> verts;
    std::vector<std::array<int, 3>> cells;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        if (!keep_cell[c]) continue;
        std::array<int, 3> t{};
        for (int k = 0; k < 3; ++k) {
            int v = mesh.cell(c)[k];
            if (map[v] < 0) {
                map[v] = static_cast<int>(verts.size());
                verts.push_back(mesh.vertex(v));
            }
            t[k] = map[v];
        }
        cells.push_back(t);
    }
    if (cells.empty()) throw GeometryError("submesh: no cells selected");
    std::map<Edge, int> count;
    for (const auto& t : cells) {
        for (int k = 0; k < 3; ++k) count[make_edge(t[k], t[(k + 1) % 3])]++;
    }
    std::vector<bool> bnd(verts.size(), false);
    for (const auto& [e, n] : count) {
        if (n == 1) bnd[e.first] = bnd[e.second] = true;
    }
    if (vertex_map) *vertex_map = map;
    MeshGeometry g;
    g.kind = GeometryKind::Subdomain;
    return std::make_shared<Mesh>(std::move(verts), std::move(cells), std::move(bnd), g, mesh.refinement_level());
}

namespace {

void split_cell(const Point2& a, const Point2& b, const Point2& c, int depth, double weight, const Ball& region,
                int cell, std::vector<RegionSample>& out) {
    if (depth == 0) {
        Point2 x = (a + b + c) / 3.0;
        if ((x - region.center).norm() <= region.radius) out.push_back({cell, x, weight});
        return;
    }
    Point2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    split_cell(a, ab, ca, depth - 1, 0.25 * weight, region, cell, out);
    split_cell(ab, b, bc, depth - 1, 0.25 * weight, region, cell, out);
    split_cell(ca, bc, c, depth - 1, 0.25 * weight, region, cell, out);
    split_cell(ab, bc, ca, depth - 1, 0.25 * weight, region, cell, out);
}

}  // namespace

std::vector<RegionSample> region_rule(const Mesh& mesh, const Ball& region, int depth) {
    if (region.dim() != 2) throw InvalidInput("region_rule: planar balls only");
    if (depth < 0) throw InvalidInput("region_rule: depth must be nonnegative");
    std::vector<RegionSample> out;
    const Point2 c = region.center;
    const double r = region.radius;
    for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto& t = mesh.cell(k);
        const Point2& a = mesh.vertex(t[0]);
        const Point2& b = mesh.vertex(t[1]);
        const Point2& d = mesh.vertex(t[2]);
        double far = (mesh.barycenter(k) - c).norm();
        if (far > r + mesh.diameter(k)) continue;
        bool inside = (a - c).norm() <= r && (b - c).norm() <= r && (d - c).norm() <= r;
        if (inside) {
            double w = mesh.area(k) / 3.0;
            out.push_back({k, 0.5 * (a + b), w});
            out.push_back({k, 0.5 * (b + d), w});
            out.push_back({k, 0.5 * (d + a), w});
        } else {
            split_cell(a, b, d, depth, mesh.area(k), region, k, out);
        }
    }
    return out;
}

double region_area(const std::vector<RegionSample>& rule) {
    double a = 0.0;
    for (const auto& s : rule) a += s.weight;
    return a;
}

void write_mesh_csv(const Mesh& mesh, const std::string& vertices_path, const std::string& cells_path) {
    std::ofstream v(vertices_path);
    if (!v) throw InvalidInput("cannot write " + vertices_path);
    v.precision(17);
    v << "id,x,y,boundary\n";
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        v << i << "," << mesh.vertex(i)(0) << "," << mesh.vertex(i)(1) << "," << (mesh.is_boundary(i) ? 1 : 0) << "\n";
    }
    std::ofstream c(cells_path);
    if (!c) throw InvalidInput("cannot write " + cells_path);
    c << "id,v0,v1,v2\n";
    for (int i = 0; i < mesh.num_cells(); ++i) {
        const auto& t = mesh.cell(i);
        c << i << "," << t[0] << "," << t[1] << "," << t[2] << "\n";
    }
}

namespace {
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        rows.push_back(fields);
    }
    return rows;
}
}  // namespace

MeshPtr read_mesh_csv(const std::string& vertices_path, const std::string& cells_path, MeshGeometry geometry) {
    std::vector<Point2> verts;
    std::vector<bool> bnd;
    for (const auto& r : read_csv_rows(vertices_path)) {
        if (r.size() < 4) throw GeometryError("mesh csv: vertex row needs id,x,y,boundary");
        verts.emplace_back(std::stod(r[1]), std::stod(r[2]));
        bnd.push_back(std::stoi(r[3]) != 0);
    }
    std::vector<std::array<int, 3>> cells;
    for (const auto& r : read_csv_rows(cells_path)) {
        if (r.size() < 4) throw GeometryError("mesh csv: cell row needs id,v0,v1,v2");
        cells.push_back({std::stoi(r[1]), std::stoi(r[2]), std::stoi(r[3])});
    }
    return std::make_shared<Mesh>(std::move(verts), std::move(cells), std::move(bnd), geometry, 0);
}

}  // namespace degcz
