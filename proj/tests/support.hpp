#ifndef VEMADAPT_TESTS_SUPPORT_HPP
#define VEMADAPT_TESTS_SUPPORT_HPP

#include "vemadapt/bench.hpp"
#include "vemadapt/mesh.hpp"
#include "vemadapt/mesh_gen.hpp"

#include <string>
#include <vector>

namespace vemadapt::test {

inline BoundarySegment segment(Point2 a, Point2 b, BoundaryTag tag, std::optional<double> ux = {},
                               std::optional<double> uy = {}) {
    BoundarySegment s;
    s.a = a;
    s.b = b;
    s.tag = tag;
    s.value = {ux, uy};
    return s;
}

// Unit square clamped on every side.
inline DomainSpec unit_square() { return build_patch_test().domain; }

inline DomainSpec rectangle(double w, double h) {
    return DomainSpec::from_segments({
        segment({0, 0}, {w, 0}, BoundaryTag::DirichletXY, 0.0, 0.0),
        segment({w, 0}, {w, h}, BoundaryTag::Free),
        segment({w, h}, {0, h}, BoundaryTag::Free),
        segment({0, h}, {0, 0}, BoundaryTag::Free),
    });
}

inline PolyMesh make_mesh(std::vector<Point2> nodes, std::vector<std::vector<Index>> elements, DomainSpec domain) {
    PolyMesh m;
    m.nodes = std::move(nodes);
    m.elements = std::move(elements);
    m.domain = std::move(domain);
    return m;
}

inline PolyMesh single_square() { return make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}}, unit_square()); }

// nx x nx structured mesh of the unit square.
inline PolyMesh square_grid(Index nx) { return generate_mesh(unit_square(), nx * nx, MeshType::Structured, 0); }

inline bool has_violation(const std::vector<Violation>& v, const std::string& name) {
    for (const auto& x : v)
        if (x.invariant == name) return true;
    return false;
}

inline std::string describe(const std::vector<Violation>& v) {
    std::string s;
    for (const auto& x : v) s += x.invariant + ": " + x.detail + "\n";
    return s;
}

inline double relative_area_error(const PolyMesh& m) {
    return std::abs(total_area(m) - m.domain.area()) / m.domain.area();
}

inline Index find_node(const PolyMesh& m, const Point2& p, double tol = 1e-9) {
    for (Index v = 0; v < m.num_nodes(); ++v)
        if ((m.nodes[static_cast<std::size_t>(v)] - p).norm() < tol) return v;
    return -1;
}

}  // namespace vemadapt::test

#endif  // VEMADAPT_TESTS_SUPPORT_HPP
