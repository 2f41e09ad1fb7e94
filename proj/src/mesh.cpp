#include "vemadapt/mesh.hpp"

#include "vemadapt/geometry.hpp"
#include "vemadapt/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace vemadapt {

const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::DirichletX: return "DirichletX";
        case BoundaryTag::DirichletY: return "DirichletY";
        case BoundaryTag::DirichletXY: return "DirichletXY";
        case BoundaryTag::Neumann: return "Neumann";
        case BoundaryTag::Free: return "Free";
    }
    return "Free";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
    if (s == "DirichletX") return BoundaryTag::DirichletX;
    if (s == "DirichletY") return BoundaryTag::DirichletY;
    if (s == "DirichletXY") return BoundaryTag::DirichletXY;
    if (s == "Neumann") return BoundaryTag::Neumann;
    if (s == "Free") return BoundaryTag::Free;
    throw ParseError("unknown boundary tag '" + s + "'");
}

bool BoundarySegment::constrains(int component) const {
    switch (tag) {
        case BoundaryTag::DirichletX: return component == 0;
        case BoundaryTag::DirichletY: return component == 1;
        case BoundaryTag::DirichletXY: return true;
        default: return false;
    }
}

DomainSpec DomainSpec::from_segments(std::vector<BoundarySegment> segments) {
    DomainSpec d;
    d.outline.reserve(segments.size());
    for (const auto& s : segments) d.outline.push_back(s.a);
    d.segments = std::move(segments);
    return d;
}

double DomainSpec::area() const { return geom::signed_area<double>(outline); }

double DomainSpec::diameter() const { return geom::diameter<double>(outline); }

Point2 DomainSpec::bbox_min() const {
    Point2 lo = outline.front();
    for (const auto& p : outline) lo = lo.cwiseMin(p);
    return lo;
}

Point2 DomainSpec::bbox_max() const {
    Point2 hi = outline.front();
    for (const auto& p : outline) hi = hi.cwiseMax(p);
    return hi;
}

bool DomainSpec::contains(const Point2& p) const { return geom::point_in_polygon<double>(p, outline); }

double DomainSpec::distance_to_boundary(const Point2& p) const {
    return geom::distance_to_boundary<double>(p, std::span<const Point2>(outline));
}

void DomainSpec::validate() const {
    if (outline.size() < 3) throw PreconditionError("domain outline needs at least 3 vertices");
    if (!(area() > 0.0)) throw PreconditionError("domain outline must be counter-clockwise with positive area");
    const double tol = 1e-12 * diameter();
    if (!geom::is_simple<double>(outline, tol)) throw PreconditionError("domain outline is not simple");
    if (segments.size() != outline.size()) throw PreconditionError("segments must partition the outline");
    bool dirichlet = false;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto& s = segments[k];
        const auto& next = segments[(k + 1) % segments.size()];
        if ((s.b - next.a).norm() > tol || (s.a - outline[k]).norm() > tol)
            throw PreconditionError("boundary segment " + std::to_string(k) + " does not chain into the next one");
        for (int c = 0; c < 2; ++c)
            if (s.constrains(c) && !s.value[static_cast<std::size_t>(c)])
                throw PreconditionError("boundary segment " + std::to_string(k) + " lacks a prescribed value");
        dirichlet = dirichlet || s.constrains(0) || s.constrains(1);
    }
    if (!dirichlet) throw PreconditionError("the Dirichlet boundary is empty");
}

double PolyMesh::merge_tolerance() const {
    if (domain.outline.size() >= 3) return 1e-9 * domain.diameter();
    if (nodes.empty()) return 1e-9;
    Point2 lo = nodes.front();
    Point2 hi = nodes.front();
    for (const auto& p : nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return 1e-9 * std::max((hi - lo).norm(), 1e-300);
}

std::vector<Point2> PolyMesh::polygon(Index elem) const {
    const auto& cyc = elements[static_cast<std::size_t>(elem)];
    std::vector<Point2> out;
    out.reserve(cyc.size());
    for (Index v : cyc) out.push_back(nodes[static_cast<std::size_t>(v)]);
    return out;
}

namespace {

void require_polygon(const PolyMesh& mesh, Index elem) {
    if (elem < 0 || elem >= mesh.num_elements()) throw PreconditionError("element id " + std::to_string(elem) + " out of range");
    if (mesh.elements[static_cast<std::size_t>(elem)].size() < 3)
        throw TopologyError("element " + std::to_string(elem) + " has fewer than 3 vertices");
}

std::int64_t edge_key(Index a, Index b, Index n) { return a * n + b; }

}  // namespace

double element_area(const PolyMesh& mesh, Index elem) {
    require_polygon(mesh, elem);
    return geom::signed_area<double>(mesh.polygon(elem));
}

Point2 element_centroid(const PolyMesh& mesh, Index elem) {
    require_polygon(mesh, elem);
    const auto poly = mesh.polygon(elem);
    if (!(geom::signed_area<double>(poly) > 0.0))
        throw TopologyError("element " + std::to_string(elem) + " has non-positive area");
    return geom::centroid<double>(poly);
}

double element_diameter(const PolyMesh& mesh, Index elem) {
    require_polygon(mesh, elem);
    return geom::diameter<double>(mesh.polygon(elem));
}

double total_area(const PolyMesh& mesh) {
    double a = 0.0;
    for (Index e = 0; e < mesh.num_elements(); ++e)
        if (mesh.elements[static_cast<std::size_t>(e)].size() >= 3) a += element_area(mesh, e);
    return a;
}

std::vector<Index> node_patch(const PolyMesh& mesh, Index node) {
    std::vector<Index> out;
    for (Index e = 0; e < mesh.num_elements(); ++e) {
        const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        if (std::find(cyc.begin(), cyc.end(), node) != cyc.end()) out.push_back(e);
    }
    return out;
}

void NodeIncidence::rebuild(const PolyMesh& mesh) {
    table_.assign(mesh.nodes.size(), {});
    for (Index e = 0; e < mesh.num_elements(); ++e) add(e, mesh.elements[static_cast<std::size_t>(e)]);
}

void NodeIncidence::ensure_nodes(Index n) {
    if (static_cast<std::size_t>(n) > table_.size()) table_.resize(static_cast<std::size_t>(n));
}

void NodeIncidence::add(Index elem, const std::vector<Index>& cycle) {
    for (Index v : cycle) {
        ensure_nodes(v + 1);
        auto& list = table_[static_cast<std::size_t>(v)];
        auto it = std::lower_bound(list.begin(), list.end(), elem);
        if (it == list.end() || *it != elem) list.insert(it, elem);
    }
}

void NodeIncidence::remove(Index elem, const std::vector<Index>& cycle) {
    for (Index v : cycle) {
        auto& list = table_[static_cast<std::size_t>(v)];
        auto it = std::lower_bound(list.begin(), list.end(), elem);
        if (it != list.end() && *it == elem) list.erase(it);
    }
}

std::vector<Index> element_neighbors(const PolyMesh& mesh, const NodeIncidence& inc, Index elem) {
    std::vector<Index> out;
    for (Index v : mesh.elements[static_cast<std::size_t>(elem)])
        for (Index e : inc.of(v))
            if (e != elem) out.push_back(e);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Violation> check_conformity(const PolyMesh& mesh) {
    std::vector<Violation> out;
    auto report = [&](std::string inv, std::vector<Index> ids, std::string detail) {
        out.push_back({std::move(inv), std::move(ids), std::move(detail)});
    };
    const Index n_nodes = mesh.num_nodes();
    const double tol = mesh.merge_tolerance();

    if (mesh.elements.empty()) report("non-empty", {}, "mesh has no elements");

    for (Index v = 0; v < n_nodes; ++v) {
        const auto& p = mesh.nodes[static_cast<std::size_t>(v)];
        if (!std::isfinite(p.x()) || !std::isfinite(p.y())) report("finite-coordinates", {v}, "node has non-finite coordinates");
    }

    std::vector<char> used(static_cast<std::size_t>(n_nodes), 0);
    bool cycles_ok = true;
    for (Index e = 0; e < mesh.num_elements(); ++e) {
        const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        if (cyc.size() < 3) {
            report("element-size", {e}, "element has " + std::to_string(cyc.size()) + " vertices");
            cycles_ok = false;
            continue;
        }
        bool range_ok = true;
        for (Index v : cyc)
            if (v < 0 || v >= n_nodes) range_ok = false;
        if (!range_ok) {
            report("node-range", {e}, "element references a missing node");
            cycles_ok = false;
            continue;
        }
        std::vector<Index> sorted = cyc;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            report("element-repeat", {e}, "element repeats a vertex");
            cycles_ok = false;
        }
        for (Index v : cyc) used[static_cast<std::size_t>(v)] = 1;
        const auto poly = mesh.polygon(e);
        const double a = geom::signed_area<double>(poly);
        if (!(a > 0.0)) report("orientation", {e}, "signed area " + std::to_string(a) + " is not positive");
        if (!geom::is_simple<double>(poly, tol)) report("simplicity", {e}, "element cycle is not simple");
    }

    if (n_nodes > 0) {
        Point2 lo = mesh.nodes.front();
        Point2 hi = mesh.nodes.front();
        for (const auto& p : mesh.nodes) {
            if (!std::isfinite(p.x()) || !std::isfinite(p.y())) continue;
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        SpatialGrid grid(lo, hi, static_cast<std::size_t>(n_nodes));
        for (Index v = 0; v < n_nodes; ++v) grid.insert(v, mesh.nodes[static_cast<std::size_t>(v)]);
        for (Index v = 0; v < n_nodes; ++v) {
            grid.for_each_within(mesh.nodes[static_cast<std::size_t>(v)], tol, [&](Index w) {
                if (w > v) report("duplicate-node", {v, w}, "nodes closer than the merge tolerance");
            });
        }

        if (cycles_ok) {
            for (Index e = 0; e < mesh.num_elements(); ++e) {
                const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
                for (std::size_t k = 0; k < cyc.size(); ++k) {
                    const Index a = cyc[k];
                    const Index b = cyc[(k + 1) % cyc.size()];
                    const Point2& pa = mesh.nodes[static_cast<std::size_t>(a)];
                    const Point2& pb = mesh.nodes[static_cast<std::size_t>(b)];
                    const Point2 pad = Point2::Constant(tol);
                    grid.for_each_in_box(pa.cwiseMin(pb) - pad, pa.cwiseMax(pb) + pad, [&](Index c) {
                        if (c == a || c == b || !used[static_cast<std::size_t>(c)]) return;
                        if (geom::on_segment_interior<double>(mesh.nodes[static_cast<std::size_t>(c)], pa, pb, tol))
                            report("hanging-node", {e, c}, "node lies on an element edge but is not a vertex of it");
                    });
                }
            }
        }
    }

    if (cycles_ok) {
        std::unordered_map<std::int64_t, Index> directed;
        directed.reserve(mesh.elements.size() * 8);
        for (Index e = 0; e < mesh.num_elements(); ++e) {
            const auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
            for (std::size_t k = 0; k < cyc.size(); ++k) {
                const Index a = cyc[k];
                const Index b = cyc[(k + 1) % cyc.size()];
                auto [it, fresh] = directed.emplace(edge_key(a, b, n_nodes), e);
                if (!fresh) report("edge-multiplicity", {it->second, e}, "directed edge used by two elements");
            }
        }
        const bool have_domain = mesh.domain.outline.size() >= 3;
        for (const auto& [key, e] : directed) {
            const Index a = key / n_nodes;
            const Index b = key % n_nodes;
            if (directed.count(edge_key(b, a, n_nodes))) continue;
            if (!have_domain) continue;
            const Point2& pa = mesh.nodes[static_cast<std::size_t>(a)];
            const Point2& pb = mesh.nodes[static_cast<std::size_t>(b)];
            const Point2 mid = 0.5 * (pa + pb);
            const auto& dom = mesh.domain;
            if (dom.distance_to_boundary(pa) > tol || dom.distance_to_boundary(pb) > tol || dom.distance_to_boundary(mid) > tol)
                report("unpaired-edge", {e, a, b}, "edge has no twin and does not lie on the domain outline");
        }
    }

    if (mesh.domain.outline.size() >= 3 && cycles_ok) {
        const double dom = mesh.domain.area();
        const double sum = total_area(mesh);
        if (std::abs(sum - dom) > 1e-9 * dom) {
            std::ostringstream ss;
            ss.precision(17);
            ss << "element areas sum to " << sum << ", domain area is " << dom;
            report("coverage", {}, ss.str());
        }
    }
    return out;
}

CompactMaps compact(PolyMesh& mesh) {
    CompactMaps maps;
    maps.elem_map.assign(mesh.elements.size(), -1);
    maps.node_map.assign(mesh.nodes.size(), -1);
    std::vector<std::vector<Index>> elems;
    elems.reserve(mesh.elements.size());
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        if (mesh.elements[e].empty()) continue;
        maps.elem_map[e] = static_cast<Index>(elems.size());
        elems.push_back(std::move(mesh.elements[e]));
    }
    std::vector<char> used(mesh.nodes.size(), 0);
    for (const auto& cyc : elems)
        for (Index v : cyc) used[static_cast<std::size_t>(v)] = 1;
    std::vector<Point2> nodes;
    nodes.reserve(mesh.nodes.size());
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        if (!used[v]) continue;
        maps.node_map[v] = static_cast<Index>(nodes.size());
        nodes.push_back(mesh.nodes[v]);
    }
    for (auto& cyc : elems)
        for (Index& v : cyc) v = maps.node_map[static_cast<std::size_t>(v)];
    mesh.nodes = std::move(nodes);
    mesh.elements = std::move(elems);
    return maps;
}

namespace {

void dedupe_cycle(std::vector<Index>& cyc) {
    std::vector<Index> out;
    out.reserve(cyc.size());
    for (Index v : cyc)
        if (out.empty() || out.back() != v) out.push_back(v);
    while (out.size() > 1 && out.front() == out.back()) out.pop_back();
    cyc = std::move(out);
}

std::vector<Index> with_edge_nodes(const PolyMesh& mesh, const std::vector<Index>& cyc, const std::vector<Index>& candidates,
                                   double tol) {
    std::vector<Index> out;
    out.reserve(cyc.size() + 4);
    for (std::size_t k = 0; k < cyc.size(); ++k) {
        const Index a = cyc[k];
        const Index b = cyc[(k + 1) % cyc.size()];
        const Point2& pa = mesh.nodes[static_cast<std::size_t>(a)];
        const Point2& pb = mesh.nodes[static_cast<std::size_t>(b)];
        out.push_back(a);
        std::vector<std::pair<double, Index>> on;
        for (Index c : candidates) {
            if (c == a || c == b) continue;
            const Point2& pc = mesh.nodes[static_cast<std::size_t>(c)];
            if (geom::on_segment_interior<double>(pc, pa, pb, tol)) on.emplace_back(geom::project_param<double>(pc, pa, pb), c);
        }
        std::sort(on.begin(), on.end());
        for (const auto& [t, c] : on)
            if (std::find(cyc.begin(), cyc.end(), c) == cyc.end() && std::find(out.begin(), out.end(), c) == out.end())
                out.push_back(c);
    }
    return out;
}

}  // namespace

void insert_hanging_nodes(PolyMesh& mesh, const std::vector<Index>& elems, const std::vector<Index>& candidates) {
    const double tol = mesh.merge_tolerance();
    for (Index e : elems) {
        auto& cyc = mesh.elements[static_cast<std::size_t>(e)];
        if (cyc.size() < 3) continue;
        cyc = with_edge_nodes(mesh, cyc, candidates, tol);
    }
}

void weld_and_conform(PolyMesh& mesh) {
    const double tol = mesh.merge_tolerance();
    const Index n = mesh.num_nodes();
    if (n == 0) return;
    Point2 lo = mesh.nodes.front();
    Point2 hi = mesh.nodes.front();
    for (const auto& p : mesh.nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    SpatialGrid grid(lo, hi, static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v) grid.insert(v, mesh.nodes[static_cast<std::size_t>(v)]);

    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index v) {
        while (parent[static_cast<std::size_t>(v)] != v) {
            parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
            v = parent[static_cast<std::size_t>(v)];
        }
        return v;
    };
    for (Index v = 0; v < n; ++v) {
        grid.for_each_within(mesh.nodes[static_cast<std::size_t>(v)], tol, [&](Index w) {
            const Index a = find(v);
            const Index b = find(w);
            if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        });
    }
    for (auto& cyc : mesh.elements) {
        for (Index& v : cyc) v = find(v);
        dedupe_cycle(cyc);
    }

    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (const auto& cyc : mesh.elements)
        for (Index v : cyc) used[static_cast<std::size_t>(v)] = 1;
    SpatialGrid live(lo, hi, static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v)
        if (used[static_cast<std::size_t>(v)]) live.insert(v, mesh.nodes[static_cast<std::size_t>(v)]);

    for (auto& cyc : mesh.elements) {
        if (cyc.size() < 3) continue;
        std::vector<Index> candidates;
        for (std::size_t k = 0; k < cyc.size(); ++k) {
            const Point2& pa = mesh.nodes[static_cast<std::size_t>(cyc[k])];
            const Point2& pb = mesh.nodes[static_cast<std::size_t>(cyc[(k + 1) % cyc.size()])];
            const Point2 pad = Point2::Constant(tol);
            live.for_each_in_box(pa.cwiseMin(pb) - pad, pa.cwiseMax(pb) + pad, [&](Index c) { candidates.push_back(c); });
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        cyc = with_edge_nodes(mesh, cyc, candidates, tol);
    }
    compact(mesh);
}

std::vector<NodeBoundaryInfo> boundary_node_info(const PolyMesh& mesh) {
    std::vector<NodeBoundaryInfo> info(mesh.nodes.size());
    const double tol = mesh.merge_tolerance();
    const auto& segs = mesh.domain.segments;
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        for (std::size_t k = 0; k < segs.size(); ++k) {
            if (geom::distance_to_segment<double>(mesh.nodes[v], segs[k].a, segs[k].b) <= tol) {
                info[v].on_boundary = true;
                info[v].segments.push_back(static_cast<int>(k));
            }
        }
    }
    return info;
}

}  // namespace vemadapt
