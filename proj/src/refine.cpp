#include "vemadapt/refine.hpp"

#include "vemadapt/geometry.hpp"
#include "vemadapt/mesh_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vemadapt {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct LocalNode {
    Point2 p;
    Index id = -1;  ///< existing global id, -1 for new nodes
    int edge = -1;  ///< parent sub-edge the new node lies on
    double t = 0.0;
};

struct Plan {
    std::vector<LocalNode> nodes;
    std::vector<std::vector<int>> children;
};

// Vertices where the boundary turns; hanging nodes are not corners.
std::vector<std::size_t> corners(const std::vector<Point2>& poly, double tol) {
    const std::size_t n = poly.size();
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < n; ++k) {
        const Point2& prev = poly[(k + n - 1) % n];
        const Point2& next = poly[(k + 1) % n];
        if (std::abs(geom::orient<double>(prev, poly[k], next)) > tol * (next - prev).norm()) out.push_back(k);
    }
    return out;
}

// Midpoints between the centroid and each corner; on a rectangle these are
// the centres of its 2 x 2 subdivision.
std::vector<Point2> structured_seeds(const std::vector<Point2>& poly, double tol) {
    const Point2 c = geom::centroid<double>(poly);
    std::vector<Point2> seeds;
    for (std::size_t k : corners(poly, tol)) {
        const Point2 s = 0.5 * (c + poly[k]);
        if (geom::point_in_polygon<double>(s, poly) && geom::distance_to_boundary<double>(s, poly) > tol) seeds.push_back(s);
    }
    return seeds;
}

std::vector<Point2> random_seeds(const std::vector<Point2>& poly, std::size_t n, std::uint64_t seed) {
    Point2 lo = poly.front();
    Point2 hi = poly.front();
    for (const auto& p : poly) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());
    const double margin = 1e-3 * geom::diameter<double>(poly);
    std::vector<Point2> seeds;
    for (std::size_t attempts = 0; seeds.size() < n && attempts < 1000 * n; ++attempts) {
        const Point2 p(ux(rng), uy(rng));
        if (geom::point_in_polygon<double>(p, poly) && geom::distance_to_boundary<double>(p, poly) > margin) seeds.push_back(p);
    }
    return seeds;
}

Plan build_plan(const std::vector<Index>& cyc, const std::vector<Point2>& poly, const std::vector<std::vector<Point2>>& cells,
                double tol) {
    Plan plan;
    const std::size_t n = cyc.size();
    for (std::size_t k = 0; k < n; ++k) plan.nodes.push_back({poly[k], cyc[k], -1, 0.0});
    for (const auto& cell : cells) {
        if (cell.size() < 3) continue;
        std::vector<int> child;
        for (const auto& q : cell) {
            int found = -1;
            for (std::size_t i = 0; i < plan.nodes.size(); ++i)
                if ((plan.nodes[i].p - q).norm() <= tol) {
                    found = static_cast<int>(i);
                    break;
                }
            if (found < 0) {
                LocalNode ln{q, -1, -1, 0.0};
                for (std::size_t k = 0; k < n; ++k)
                    if (geom::on_segment_interior<double>(q, poly[k], poly[(k + 1) % n], tol)) {
                        ln.edge = static_cast<int>(k);
                        ln.t = geom::project_param<double>(q, poly[k], poly[(k + 1) % n]);
                        // Sit exactly on the parent edge.
                        ln.p = poly[k] + ln.t * (poly[(k + 1) % n] - poly[k]);
                        break;
                    }
                found = static_cast<int>(plan.nodes.size());
                plan.nodes.push_back(ln);
            }
            if (child.empty() || child.back() != found) child.push_back(found);
        }
        while (child.size() > 1 && child.front() == child.back()) child.pop_back();
        plan.children.push_back(std::move(child));
    }
    // Cells may meet in T-junctions where one cell keeps a vertex another
    // lacks; make every child list every local node on its edges.
    for (auto& child : plan.children) {
        std::vector<int> out;
        for (std::size_t k = 0; k < child.size(); ++k) {
            const int a = child[k];
            const int b = child[(k + 1) % child.size()];
            out.push_back(a);
            std::vector<std::pair<double, int>> on;
            for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
                const int c = static_cast<int>(i);
                if (c == a || c == b) continue;
                if (geom::on_segment_interior<double>(plan.nodes[i].p, plan.nodes[static_cast<std::size_t>(a)].p,
                                                      plan.nodes[static_cast<std::size_t>(b)].p, tol))
                    on.emplace_back(geom::project_param<double>(plan.nodes[i].p, plan.nodes[static_cast<std::size_t>(a)].p,
                                                                plan.nodes[static_cast<std::size_t>(b)].p),
                                    c);
            }
            std::sort(on.begin(), on.end());
            for (const auto& [t, c] : on)
                if (std::find(child.begin(), child.end(), c) == child.end() && std::find(out.begin(), out.end(), c) == out.end())
                    out.push_back(c);
        }
        child = std::move(out);
    }
    return plan;
}

std::vector<Point2> child_polygon(const Plan& plan, const std::vector<int>& child) {
    std::vector<Point2> poly;
    poly.reserve(child.size());
    for (int i : child) poly.push_back(plan.nodes[static_cast<std::size_t>(i)].p);
    return poly;
}

std::string validate(const Plan& plan, double parent_area, double tol) {
    if (plan.children.size() < 2) return "tessellation produced fewer than two children";
    double sum = 0.0;
    for (const auto& child : plan.children) {
        if (child.size() < 3) return "degenerate child";
        const auto poly = child_polygon(plan, child);
        const double a = geom::signed_area<double>(poly);
        if (!(a >= 1e-12 * parent_area)) return "child area below 1e-12 of the parent";
        if (!geom::is_simple<double>(poly, tol)) return "child polygon is not simple";
        sum += a;
    }
    if (std::abs(sum - parent_area) > 1e-9 * parent_area) return "children do not cover the parent";
    return {};
}

void snap_boundary_nodes(Plan& plan, const std::vector<Point2>& poly) {
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::pair<double, std::size_t>> on;
        for (std::size_t i = 0; i < plan.nodes.size(); ++i)
            if (plan.nodes[i].id < 0 && plan.nodes[i].edge == static_cast<int>(k)) on.emplace_back(plan.nodes[i].t, i);
        std::sort(on.begin(), on.end());
        const double m = static_cast<double>(on.size());
        for (std::size_t j = 0; j < on.size(); ++j) {
            auto& ln = plan.nodes[on[j].second];
            ln.t = (static_cast<double>(j) + 1.0) / (m + 1.0);
            ln.p = poly[k] + ln.t * (poly[(k + 1) % n] - poly[k]);
        }
    }
}

// Finds the element other than `self` whose cycle runs b -> a.
Index twin_owner(const PolyMesh& mesh, const NodeIncidence& inc, Index self, Index a, Index b, std::size_t& pos) {
    for (Index f : inc.of(a)) {
        if (f == self) continue;
        const auto& cyc = mesh.elements[static_cast<std::size_t>(f)];
        for (std::size_t k = 0; k < cyc.size(); ++k)
            if (cyc[k] == b && cyc[(k + 1) % cyc.size()] == a) {
                pos = k;
                return f;
            }
    }
    return -1;
}

}  // namespace

RefineResult refine_element(PolyMesh& mesh, Index elem, MeshType mode, std::uint64_t rng_seed) {
    NodeIncidence inc(mesh);
    return refine_element(mesh, inc, elem, mode, rng_seed);
}

Index refine_gain(const PolyMesh& mesh, Index elem, MeshType mode) {
    const std::vector<Point2> poly = mesh.polygon(elem);
    const double tol = mesh.merge_tolerance();
    const std::size_t n = mode == MeshType::Structured ? structured_seeds(poly, tol).size() : corners(poly, tol).size();
    return n < 2 ? 0 : static_cast<Index>(n) - 1;
}

RefineResult refine_element(PolyMesh& mesh, NodeIncidence& inc, Index elem, MeshType mode, std::uint64_t rng_seed) {
    RefineResult res;
    if (elem < 0 || elem >= mesh.num_elements()) throw PreconditionError("element id " + std::to_string(elem) + " out of range");
    const std::vector<Index> cyc = mesh.elements[static_cast<std::size_t>(elem)];
    if (cyc.size() < 3) {
        res.reason = "element is deleted";
        return res;
    }
    const std::vector<Point2> poly = mesh.polygon(elem);
    const double parent_area = geom::signed_area<double>(poly);
    const double tol = mesh.merge_tolerance();

    Plan plan;
    const int attempts = mode == MeshType::Structured ? 1 : 4;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::vector<Point2> seeds;
        if (mode == MeshType::Structured) {
            seeds = structured_seeds(poly, tol);
        } else {
            const std::uint64_t s = splitmix(rng_seed ^ splitmix(static_cast<std::uint64_t>(elem) * 4 + static_cast<std::uint64_t>(attempt)));
            seeds = random_seeds(poly, corners(poly, tol).size(), s);
            seeds = lloyd_in_region(poly, seeds, kRefineLloydIter, kRefineLloydTol, tol);
        }
        if (seeds.size() < 2) {
            res.reason = "fewer than two seeds fit inside the element";
            continue;
        }
        plan = build_plan(cyc, poly, clipped_voronoi_cells(poly, seeds, tol), tol);
        res.reason = validate(plan, parent_area, tol);
        if (!res.reason.empty()) continue;
        if (mode == MeshType::Voronoi) {
            Plan snapped = plan;
            snap_boundary_nodes(snapped, poly);
            if (validate(snapped, parent_area, tol).empty()) plan = std::move(snapped);
        }
        break;
    }
    if (!res.reason.empty()) return res;

    // Commit.
    std::vector<Index> gid(plan.nodes.size());
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
        if (plan.nodes[i].id >= 0) {
            gid[i] = plan.nodes[i].id;
        } else {
            gid[i] = mesh.num_nodes();
            mesh.nodes.push_back(plan.nodes[i].p);
        }
    }
    inc.ensure_nodes(mesh.num_nodes());

    const std::size_t n = cyc.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::pair<double, Index>> on;
        for (std::size_t i = 0; i < plan.nodes.size(); ++i)
            if (plan.nodes[i].id < 0 && plan.nodes[i].edge == static_cast<int>(k)) on.emplace_back(plan.nodes[i].t, gid[i]);
        if (on.empty()) continue;
        std::sort(on.begin(), on.end());
        const Index a = cyc[k];
        const Index b = cyc[(k + 1) % n];
        std::size_t pos = 0;
        const Index f = twin_owner(mesh, inc, elem, a, b, pos);
        if (f < 0) continue;
        auto& fc = mesh.elements[static_cast<std::size_t>(f)];
        std::vector<Index> ins;
        for (auto it = on.rbegin(); it != on.rend(); ++it) ins.push_back(it->second);
        fc.insert(fc.begin() + static_cast<std::ptrdiff_t>(pos + 1), ins.begin(), ins.end());
        inc.add(f, ins);
    }

    inc.remove(elem, cyc);
    for (std::size_t c = 0; c < plan.children.size(); ++c) {
        std::vector<Index> g;
        g.reserve(plan.children[c].size());
        for (int i : plan.children[c]) g.push_back(gid[static_cast<std::size_t>(i)]);
        Index id = elem;
        if (c == 0) {
            mesh.elements[static_cast<std::size_t>(elem)] = g;
        } else {
            id = mesh.num_elements();
            mesh.elements.push_back(g);
        }
        inc.add(id, g);
        res.children.push_back(id);
    }
    res.ok = true;
    return res;
}

RefineBatchResult refine_batch(PolyMesh& mesh, std::vector<Index> elems, MeshType mode, std::uint64_t rng_seed) {
    NodeIncidence inc(mesh);
    return refine_batch(mesh, inc, std::move(elems), mode, rng_seed);
}

RefineBatchResult refine_batch(PolyMesh& mesh, NodeIncidence& inc, std::vector<Index> elems, MeshType mode,
                               std::uint64_t rng_seed) {
    std::sort(elems.begin(), elems.end());
    if (std::adjacent_find(elems.begin(), elems.end()) != elems.end()) throw PreconditionError("refine list has duplicates");
    RefineBatchResult out;
    for (Index e : elems) {
        if (e < 0 || e >= mesh.num_elements() || mesh.elements[static_cast<std::size_t>(e)].empty()) continue;
        auto r = refine_element(mesh, inc, e, mode, rng_seed);
        if (r.ok) {
            ++out.refined;
            out.new_elements.insert(out.new_elements.end(), r.children.begin(), r.children.end());
        } else {
            ++out.failed;
        }
    }
    return out;
}

}  // namespace vemadapt
