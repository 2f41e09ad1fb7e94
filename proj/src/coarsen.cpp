#include "vemadapt/coarsen.hpp"

#include "vemadapt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace vemadapt {

namespace {

struct Plan {
    std::vector<Index> patch;
    std::vector<Index> new_cycle;
    std::unordered_map<Index, Point2> moved;
    std::vector<std::pair<Index, std::vector<Index>>> modified;
    std::string reason;
};

struct HullView {
    std::vector<Point2> poly;
    double tol;

    bool strictly_inside(const Point2& p) const {
        return geom::point_in_polygon<double>(p, poly) && geom::distance_to_boundary<double>(p, poly) > tol;
    }
    bool on_boundary(const Point2& p) const { return geom::distance_to_boundary<double>(p, poly) <= tol; }
    Point2 nearest(const Point2& p) const {
        Point2 best = poly.front();
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < poly.size(); ++k) {
            const Point2& a = poly[k];
            const Point2& b = poly[(k + 1) % poly.size()];
            const double t = std::clamp(geom::project_param<double>(p, a, b), 0.0, 1.0);
            const Point2 q = a + t * (b - a);
            const double d = (q - p).norm();
            if (d < bd) {
                bd = d;
                best = q;
            }
        }
        return best;
    }
};

std::string check_domain(const DomainSpec& dom, const HullView& hull) {
    const auto& out = dom.outline;
    const std::size_t n = hull.poly.size();
    const double tol = hull.tol;
    auto inside_or_on = [&](const Point2& p) { return dom.contains(p) || dom.distance_to_boundary(p) <= tol; };
    for (std::size_t k = 0; k < n; ++k) {
        const Point2& a = hull.poly[k];
        const Point2& b = hull.poly[(k + 1) % n];
        if (!inside_or_on(a)) return "hull vertex outside the domain";
        if (!inside_or_on(0.5 * (a + b))) return "hull edge leaves the domain";
        for (std::size_t j = 0; j < out.size(); ++j)
            if (geom::segments_cross<double>(a, b, out[j], out[(j + 1) % out.size()], tol)) return "hull edge crosses the outline";
    }
    for (const auto& v : out)
        if (hull.strictly_inside(v)) return "hull covers an outline vertex";
    return {};
}

bool is_outline_vertex(const DomainSpec& dom, const Point2& p, double tol) {
    for (const auto& v : dom.outline)
        if ((v - p).norm() <= tol) return true;
    return false;
}

bool is_segment_end(const DomainSpec& dom, const Point2& p, double tol) {
    for (const auto& s : dom.segments)
        if ((s.a - p).norm() <= tol || (s.b - p).norm() <= tol) return true;
    return false;
}

bool intersects_interior(const std::vector<Point2>& poly, const HullView& hull, bool& has_inside_vertex) {
    has_inside_vertex = false;
    bool hit = false;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (hull.strictly_inside(poly[k])) {
            has_inside_vertex = true;
            hit = true;
        }
        const Point2& a = poly[k];
        const Point2& b = poly[(k + 1) % n];
        if (hull.strictly_inside(0.5 * (a + b))) hit = true;
        for (std::size_t j = 0; j < hull.poly.size() && !hit; ++j)
            if (geom::segments_cross<double>(a, b, hull.poly[j], hull.poly[(j + 1) % hull.poly.size()], hull.tol)) hit = true;
    }
    return hit;
}

Plan make_plan(const PolyMesh& mesh, const NodeIncidence& inc, Index node) {
    Plan plan;
    const double tol = mesh.merge_tolerance();
    if (node < 0 || node >= mesh.num_nodes()) {
        plan.reason = "node out of range";
        return plan;
    }
    plan.patch = inc.of(node);
    if (plan.patch.size() < 2) {
        plan.reason = "patch has fewer than two elements";
        return plan;
    }
    const std::set<Index> patch_set(plan.patch.begin(), plan.patch.end());
    auto in_patch = [&](Index e) { return patch_set.count(e) > 0; };

    std::vector<Index> pnodes;
    for (Index e : plan.patch) {
        const auto& c = mesh.elements[static_cast<std::size_t>(e)];
        pnodes.insert(pnodes.end(), c.begin(), c.end());
    }
    std::sort(pnodes.begin(), pnodes.end());
    pnodes.erase(std::unique(pnodes.begin(), pnodes.end()), pnodes.end());
    std::vector<Point2> pts;
    for (Index v : pnodes) pts.push_back(mesh.nodes[static_cast<std::size_t>(v)]);
    const auto hidx = geom::convex_hull<double>(std::span<const Point2>(pts), tol);
    if (hidx.size() < 3) {
        plan.reason = "degenerate hull";
        return plan;
    }
    std::vector<Index> hull_ids;
    HullView hull{{}, tol};
    for (auto i : hidx) {
        hull_ids.push_back(pnodes[i]);
        hull.poly.push_back(pts[i]);
    }
    plan.reason = check_domain(mesh.domain, hull);
    if (!plan.reason.empty()) return plan;

    // Elements overlapping the hull interior, found by walking node adjacency.
    std::set<Index> visited(plan.patch.begin(), plan.patch.end());
    std::vector<Index> queue = plan.patch;
    std::vector<Index> intruders;
    std::set<Index> near;  // every element seen, for hanging-node updates
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const Index e = queue[qi];
        for (Index v : mesh.elements[static_cast<std::size_t>(e)])
            for (Index f : inc.of(v)) {
                if (!visited.insert(f).second) continue;
                near.insert(f);
                bool inside_vertex = false;
                if (!intersects_interior(mesh.polygon(f), hull, inside_vertex)) continue;
                if (!inside_vertex) {
                    plan.reason = "neighbour edge crosses the hull";
                    return plan;
                }
                intruders.push_back(f);
                queue.push_back(f);
            }
    }

    std::set<Index> removed;
    std::vector<Index> projected;
    std::set<Index> inside_nodes;
    for (Index e : queue)
        for (Index v : mesh.elements[static_cast<std::size_t>(e)])
            if (hull.strictly_inside(mesh.nodes[static_cast<std::size_t>(v)])) inside_nodes.insert(v);
    for (Index v : inside_nodes) {
        bool outside_use = false;
        for (Index f : inc.of(v))
            if (!in_patch(f)) outside_use = true;
        if (outside_use) projected.push_back(v);
        else removed.insert(v);
    }

    auto pos = [&](Index v) -> Point2 {
        auto it = plan.moved.find(v);
        return it == plan.moved.end() ? mesh.nodes[static_cast<std::size_t>(v)] : it->second;
    };

    // Retained nodes already on the hull boundary.
    std::set<Index> cand_nodes;
    for (Index e : queue) {
        const auto& c = mesh.elements[static_cast<std::size_t>(e)];
        cand_nodes.insert(c.begin(), c.end());
    }
    for (Index e : near) {
        const auto& c = mesh.elements[static_cast<std::size_t>(e)];
        cand_nodes.insert(c.begin(), c.end());
    }
    const std::set<Index> hull_set(hull_ids.begin(), hull_ids.end());
    std::vector<Index> on_hull;
    for (Index v : cand_nodes) {
        if (inside_nodes.count(v)) continue;
        const Point2& p = mesh.nodes[static_cast<std::size_t>(v)];
        if (!hull.on_boundary(p)) continue;
        bool keep = hull_set.count(v) > 0 || is_outline_vertex(mesh.domain, p, tol);
        for (Index f : inc.of(v))
            if (!in_patch(f)) keep = true;
        if (keep) on_hull.push_back(v);
        else removed.insert(v);
    }

    std::unordered_map<Index, Index> merged;
    for (Index v : projected) {
        const Point2 q = hull.nearest(mesh.nodes[static_cast<std::size_t>(v)]);
        Index target = -1;
        for (Index w : on_hull)
            if ((pos(w) - q).norm() <= tol) {
                target = w;
                break;
            }
        if (target >= 0) {
            merged[v] = target;
            continue;
        }
        plan.moved[v] = q;
        on_hull.push_back(v);
    }

    // New cycle: hull vertices with the on-hull nodes ordered along each edge.
    const std::size_t nh = hull_ids.size();
    for (std::size_t k = 0; k < nh; ++k) {
        const Point2& a = hull.poly[k];
        const Point2& b = hull.poly[(k + 1) % nh];
        plan.new_cycle.push_back(hull_ids[k]);
        std::vector<std::pair<double, Index>> on;
        for (Index v : on_hull) {
            if (hull_set.count(v)) continue;
            const Point2 p = pos(v);
            if (geom::on_segment_interior<double>(p, a, b, tol)) on.emplace_back(geom::project_param<double>(p, a, b), v);
        }
        std::sort(on.begin(), on.end());
        for (const auto& [t, v] : on)
            if (std::find(plan.new_cycle.begin(), plan.new_cycle.end(), v) == plan.new_cycle.end()) plan.new_cycle.push_back(v);
    }

    std::vector<Point2> new_poly;
    for (Index v : plan.new_cycle) new_poly.push_back(pos(v));
    const double new_area = geom::signed_area<double>(new_poly);
    if (!(new_area > 0.0) || !geom::is_simple<double>(new_poly, tol)) {
        plan.reason = "merged element is not a simple polygon";
        return plan;
    }

    // Neighbour updates: merges, then newly hanging nodes.
    std::set<Index> touch(intruders.begin(), intruders.end());
    for (Index v : plan.new_cycle)
        for (Index f : inc.of(v))
            if (!in_patch(f)) touch.insert(f);
    double before = 0.0;
    for (Index e : plan.patch) before += element_area(mesh, e);
    const double patch_area = before;
    double after = new_area;
    for (Index f : touch) {
        const auto& old = mesh.elements[static_cast<std::size_t>(f)];
        std::vector<Index> c;
        for (Index v : old) {
            auto it = merged.find(v);
            const Index w = it == merged.end() ? v : it->second;
            if (removed.count(w)) {
                plan.reason = "neighbour uses a node scheduled for removal";
                return plan;
            }
            if (c.empty() || c.back() != w) c.push_back(w);
        }
        while (c.size() > 1 && c.front() == c.back()) c.pop_back();
        std::vector<Index> full;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const Index a = c[k];
            const Index b = c[(k + 1) % c.size()];
            full.push_back(a);
            std::vector<std::pair<double, Index>> on;
            for (Index v : plan.new_cycle) {
                if (v == a || v == b || std::find(c.begin(), c.end(), v) != c.end()) continue;
                if (geom::on_segment_interior<double>(pos(v), pos(a), pos(b), tol))
                    on.emplace_back(geom::project_param<double>(pos(v), pos(a), pos(b)), v);
            }
            std::sort(on.begin(), on.end());
            for (const auto& [t, v] : on)
                if (std::find(full.begin(), full.end(), v) == full.end()) full.push_back(v);
        }
        std::vector<Point2> poly;
        for (Index v : full) poly.push_back(pos(v));
        const double a = full.size() >= 3 ? geom::signed_area<double>(poly) : 0.0;
        if (!(a > 0.0) || !geom::is_simple<double>(poly, tol)) {
            plan.reason = "straightening inverts or folds a neighbour";
            return plan;
        }
        before += element_area(mesh, f);
        after += a;
        if (full != old) plan.modified.emplace_back(f, std::move(full));
    }
    // Scaled by the patch, not the neighbours: a neighbour folded over the
    // hull leaves an overlap that is tiny next to a large neighbour.
    if (std::abs(after - before) > 1e-9 * patch_area + 1e-14 * before) {
        plan.reason = "coarsening changes the local area";
        return plan;
    }

    // Nodes left straight in every element using them carry no geometry.
    std::unordered_map<Index, std::vector<Index>*> cycles;
    std::unordered_map<Index, std::vector<Index>> unchanged;
    for (auto& [f, c] : plan.modified) cycles[f] = &c;
    for (Index f : touch)
        if (!cycles.count(f)) cycles[f] = &(unchanged[f] = mesh.elements[static_cast<std::size_t>(f)]);
    auto straight_in = [&](const std::vector<Index>& c, Index v) {
        const auto it = std::find(c.begin(), c.end(), v);
        if (it == c.end()) return true;
        const std::size_t k = static_cast<std::size_t>(it - c.begin());
        const Point2 a = pos(c[(k + c.size() - 1) % c.size()]);
        const Point2 b = pos(c[(k + 1) % c.size()]);
        return std::abs(geom::orient<double>(a, pos(v), b)) <= tol * (b - a).norm();
    };
    std::vector<Index> dropped;
    for (Index v : plan.new_cycle) {
        if (hull_set.count(v) || is_outline_vertex(mesh.domain, pos(v), tol) || is_segment_end(mesh.domain, pos(v), tol)) continue;
        if (!straight_in(plan.new_cycle, v)) continue;
        bool straight = true;
        for (const auto& [f, c] : cycles)
            if (!straight_in(*c, v)) {
                straight = false;
                break;
            }
        if (straight) dropped.push_back(v);
    }
    if (!dropped.empty()) {
        const std::set<Index> drop(dropped.begin(), dropped.end());
        auto strip = [&](std::vector<Index>& c) { std::erase_if(c, [&](Index v) { return drop.count(v) > 0; }); };
        strip(plan.new_cycle);
        for (auto& [f, c] : unchanged) {
            const std::size_t n = c.size();
            strip(c);
            if (c.size() != n) plan.modified.emplace_back(f, std::move(c));
        }
        for (auto& m : plan.modified) strip(m.second);
        for (Index v : dropped) {
            removed.insert(v);
            plan.moved.erase(v);
        }
    }
    if (removed.empty() && merged.empty()) {
        plan.reason = "coarsening removes no node";
        return plan;
    }
    return plan;
}

}  // namespace

bool patch_eligible(const PolyMesh& mesh, Index node) { return patch_eligible(mesh, NodeIncidence(mesh), node); }

bool patch_eligible(const PolyMesh& mesh, const NodeIncidence& inc, Index node) { return make_plan(mesh, inc, node).reason.empty(); }

CoarsenResult coarsen_patch(PolyMesh& mesh, NodeIncidence& inc, Index node) {
    CoarsenResult res;
    Plan plan = make_plan(mesh, inc, node);
    if (!plan.reason.empty()) {
        res.reason = plan.reason;
        return res;
    }
    for (const auto& [v, p] : plan.moved) mesh.nodes[static_cast<std::size_t>(v)] = p;
    for (auto& [f, c] : plan.modified) {
        inc.remove(f, mesh.elements[static_cast<std::size_t>(f)]);
        mesh.elements[static_cast<std::size_t>(f)] = std::move(c);
        inc.add(f, mesh.elements[static_cast<std::size_t>(f)]);
        res.modified.push_back(f);
    }
    for (Index e : plan.patch) {
        inc.remove(e, mesh.elements[static_cast<std::size_t>(e)]);
        mesh.elements[static_cast<std::size_t>(e)].clear();
    }
    res.deleted = plan.patch;
    res.new_element = mesh.num_elements();
    mesh.elements.push_back(plan.new_cycle);
    inc.add(res.new_element, plan.new_cycle);
    res.ok = true;
    return res;
}

CoarsenResult coarsen_patch(PolyMesh& mesh, Index node) {
    NodeIncidence inc(mesh);
    auto res = coarsen_patch(mesh, inc, node);
    if (res.ok) {
        const auto maps = compact(mesh);
        res.new_element = maps.elem_map[static_cast<std::size_t>(res.new_element)];
    }
    return res;
}

CoarsenBatchResult coarsen_batch(PolyMesh& mesh, NodeIncidence& inc, const std::vector<Index>& nodes) {
    CoarsenBatchResult out;
    std::unordered_set<Index> touched;
    for (Index v : nodes) {
        if (v < 0 || v >= mesh.num_nodes() || inc.unused(v)) {
            ++out.skipped;
            continue;
        }
        const auto& patch = inc.of(v);
        if (std::any_of(patch.begin(), patch.end(), [&](Index e) { return touched.count(e) > 0; })) {
            ++out.skipped;
            continue;
        }
        auto r = coarsen_patch(mesh, inc, v);
        if (!r.ok) {
            ++out.skipped;
            continue;
        }
        ++out.coarsened;
        touched.insert(r.deleted.begin(), r.deleted.end());
        touched.insert(r.new_element);
        out.new_elements.push_back(r.new_element);
    }
    return out;
}

CoarsenBatchResult coarsen_batch(PolyMesh& mesh, const std::vector<Index>& nodes) {
    NodeIncidence inc(mesh);
    auto out = coarsen_batch(mesh, inc, nodes);
    const auto maps = compact(mesh);
    for (Index& e : out.new_elements) e = maps.elem_map[static_cast<std::size_t>(e)];
    return out;
}

}  // namespace vemadapt
