#include "vemadapt/mesh_gen.hpp"

#include "vemadapt/geometry.hpp"
#include "vemadapt/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace vemadapt {

namespace {

bool grid_aligned(const DomainSpec& domain, Index nx, Index ny) {
    const Point2 lo = domain.bbox_min();
    const Point2 ext = domain.bbox_max() - lo;
    for (const auto& p : domain.outline) {
        const double fx = (p.x() - lo.x()) / ext.x() * static_cast<double>(nx);
        const double fy = (p.y() - lo.y()) / ext.y() * static_cast<double>(ny);
        if (std::abs(fx - std::round(fx)) > 1e-9 || std::abs(fy - std::round(fy)) > 1e-9) return false;
    }
    return true;
}

std::vector<Point2> grid_centres(const DomainSpec& domain, Index nx, Index ny) {
    const Point2 lo = domain.bbox_min();
    const Point2 ext = domain.bbox_max() - lo;
    const double tol = 1e-9 * domain.diameter();
    std::vector<Point2> pts;
    for (Index j = 0; j < ny; ++j)
        for (Index i = 0; i < nx; ++i) {
            const Point2 c(lo.x() + (static_cast<double>(i) + 0.5) * ext.x() / static_cast<double>(nx),
                           lo.y() + (static_cast<double>(j) + 0.5) * ext.y() / static_cast<double>(ny));
            if (domain.contains(c) && domain.distance_to_boundary(c) > tol) pts.push_back(c);
        }
    return pts;
}

double max_radius(const std::vector<Point2>& poly, const Point2& s) {
    double r = 0.0;
    for (const auto& p : poly) r = std::max(r, (p - s).norm());
    return r;
}

}  // namespace

SeedSet generate_seeds(const DomainSpec& domain, Index n, MeshType mode, std::uint64_t rng_seed) {
    if (n < 1) throw PreconditionError("seed count must be at least 1");
    if (n > kMaxSeeds) throw CapacityError("seed count " + std::to_string(n) + " exceeds the limit of 10^6");
    SeedSet out;
    out.rng_seed = rng_seed;
    const Point2 lo = domain.bbox_min();
    const Point2 hi = domain.bbox_max();
    const Point2 ext = hi - lo;

    if (mode == MeshType::Structured) {
        struct Candidate {
            Index nx, ny, count;
            bool aligned;
        };
        std::vector<Candidate> cands;
        const double fill = domain.area() / (ext.x() * ext.y());
        const Index ny_max = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n) / fill * ext.y() / ext.x()) * 2.0)) + 2;
        for (Index ny = 1; ny <= ny_max; ++ny) {
            const Index nx = std::max<Index>(1, std::llround(static_cast<double>(ny) * ext.x() / ext.y()));
            const Index count = static_cast<Index>(grid_centres(domain, nx, ny).size());
            if (count == 0) continue;
            cands.push_back({nx, ny, count, grid_aligned(domain, nx, ny)});
        }
        auto dist = [&](const Candidate& c) { return std::abs(c.count - n); };
        const Candidate* best = nullptr;
        for (const auto& c : cands)
            if (c.aligned && (!best || dist(c) < dist(*best))) best = &c;
        // Fall back to unaligned grids when no aligned grid lands within a
        // factor of two of the request.
        if (!best || best->count > 2 * n || 2 * best->count < n) {
            const Candidate* any = nullptr;
            for (const auto& c : cands)
                if (!any || dist(c) < dist(*any)) any = &c;
            if (!best || (any && dist(*any) < dist(*best))) best = any;
        }
        if (!best) throw PreconditionError("domain admits no structured seed grid");
        out.points = grid_centres(domain, best->nx, best->ny);
        return out;
    }

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());
    const double margin = 1e-6 * domain.diameter();
    out.points.reserve(static_cast<std::size_t>(n));
    std::size_t attempts = 0;
    while (static_cast<Index>(out.points.size()) < n) {
        if (++attempts > static_cast<std::size_t>(n) * 1000 + 1000)
            throw PreconditionError("could not place seeds inside the domain");
        const Point2 p(ux(rng), uy(rng));
        if (domain.contains(p) && domain.distance_to_boundary(p) > margin) out.points.push_back(p);
    }
    return out;
}

std::vector<std::vector<Point2>> clipped_voronoi_cells(const std::vector<Point2>& region, const std::vector<Point2>& sites,
                                                       double merge_tol, std::vector<std::vector<Point2>>* detached) {
    using Poly = std::vector<Point2>;
    const std::size_t n = sites.size();
    std::vector<Poly> cells(n);
    if (n == 0) return cells;
    if (n == 1) {
        cells[0] = region;
        return cells;
    }
    Point2 lo = region.front();
    Point2 hi = region.front();
    for (const auto& p : region) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    for (const auto& p : sites) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    SpatialGrid grid(lo, hi, n);
    for (std::size_t i = 0; i < n; ++i) grid.insert(static_cast<Index>(i), sites[i]);
    const double span = (hi - lo).norm();
    const double h0 = 2.0 * grid.cell_size().maxCoeff();

    auto reach = [](const std::vector<Poly>& pieces, const Point2& s) {
        double r = 0.0;
        for (const auto& p : pieces) r = std::max(r, max_radius(p, s));
        return r;
    };

    std::vector<std::pair<double, Index>> near;
    std::vector<Poly> next;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& s = sites[i];
        std::vector<Poly> pieces{region};
        double r_max = reach(pieces, s);
        double r_prev = -1.0;
        double r = h0;
        while (true) {
            near.clear();
            grid.for_each_within(s, r, [&](Index j) {
                if (j == static_cast<Index>(i)) return;
                const double d = (sites[static_cast<std::size_t>(j)] - s).norm();
                if (d > r_prev) near.emplace_back(d, j);
            });
            std::sort(near.begin(), near.end());
            for (const auto& [d, j] : near) {
                if (d > 2.0 * r_max) break;
                next.clear();
                for (const auto& piece : pieces)
                    for (auto& q : geom::clip_bisector_pieces<double>(piece, s, sites[static_cast<std::size_t>(j)])) {
                        geom::remove_duplicate_vertices<double>(q, merge_tol);
                        if (q.size() >= 3 && geom::signed_area<double>(q) > 0.0) next.push_back(std::move(q));
                    }
                pieces.swap(next);
                if (pieces.empty()) break;
                r_max = reach(pieces, s);
            }
            if (pieces.empty() || 2.0 * r_max <= r || r > 2.0 * span) break;
            r_prev = r;
            r *= 2.0;
        }
        if (pieces.empty()) continue;
        std::size_t own = 0;
        double best = -1.0;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            if (geom::point_in_polygon<double>(s, pieces[k])) {
                own = k;
                break;
            }
            const double a = geom::signed_area<double>(pieces[k]);
            if (a > best) {
                best = a;
                own = k;
            }
        }
        for (std::size_t k = 0; k < pieces.size(); ++k)
            if (k != own && detached) detached->push_back(std::move(pieces[k]));
        cells[i] = std::move(pieces[own]);
    }
    return cells;
}

namespace {

// Joins cycle b onto cycle a across their shared edges. Empty unless the
// shared edges form a single chain that leaves something of both cycles.
std::vector<Index> join_cycles(const std::vector<Index>& a, const std::vector<Index>& b) {
    const std::size_t na = a.size(), nb = b.size();
    std::set<std::pair<Index, Index>> b_edges;
    for (std::size_t k = 0; k < nb; ++k) b_edges.insert({b[k], b[(k + 1) % nb]});
    std::vector<char> shared(na, 0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < na; ++k)
        if (b_edges.count({a[(k + 1) % na], a[k]})) {
            shared[k] = 1;
            ++count;
        }
    if (count == 0 || count >= na || count >= nb) return {};
    std::size_t start = 0;
    while (!(shared[start] && !shared[(start + na - 1) % na])) ++start;
    for (std::size_t k = 0; k < count; ++k)
        if (!shared[(start + k) % na]) return {};
    const Index p = a[start];
    const Index q = a[(start + count) % na];
    std::vector<Index> out;
    for (std::size_t k = start + count; k <= start + na; ++k) out.push_back(a[k % na]);
    const auto pb = static_cast<std::size_t>(std::find(b.begin(), b.end(), p) - b.begin());
    for (std::size_t k = 1; k < nb; ++k) {
        const Index v = b[(pb + k) % nb];
        if (v == q) break;
        out.push_back(v);
    }
    return out;
}

double shared_length(const PolyMesh& mesh, const std::vector<Index>& a, const std::vector<Index>& b) {
    std::set<std::pair<Index, Index>> b_edges;
    for (std::size_t k = 0; k < b.size(); ++k) b_edges.insert({b[k], b[(k + 1) % b.size()]});
    double len = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const Index u = a[k], v = a[(k + 1) % a.size()];
        if (b_edges.count({v, u}))
            len += (mesh.nodes[static_cast<std::size_t>(u)] - mesh.nodes[static_cast<std::size_t>(v)]).norm();
    }
    return len;
}

// Elements from `first` on are detached cell pieces; each is absorbed by the
// neighbour it shares the longest boundary with.
void absorb_detached(PolyMesh& mesh, std::size_t first) {
    std::vector<std::size_t> pending;
    for (std::size_t e = first; e < mesh.elements.size(); ++e) pending.push_back(e);
    while (!pending.empty()) {
        std::vector<std::size_t> left;
        for (std::size_t o : pending) {
            std::vector<std::pair<double, std::size_t>> cand;
            for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
                if (e == o || mesh.elements[e].empty()) continue;
                if (e >= first && std::find(pending.begin(), pending.end(), e) != pending.end()) continue;
                const double len = shared_length(mesh, mesh.elements[o], mesh.elements[e]);
                if (len > 0.0) cand.emplace_back(len, e);
            }
            std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
            bool done = false;
            for (const auto& [len, e] : cand) {
                std::vector<Index> joined = join_cycles(mesh.elements[e], mesh.elements[o]);
                if (joined.empty()) continue;
                mesh.elements[e] = std::move(joined);
                mesh.elements[o].clear();
                done = true;
                break;
            }
            if (!done) left.push_back(o);
        }
        if (left.size() == pending.size()) break;
        pending = std::move(left);
    }
}

}  // namespace

PolyMesh bounded_voronoi(const DomainSpec& domain, const SeedSet& seeds) {
    if (seeds.points.empty()) throw PreconditionError("seed set is empty");
    const double tol = 1e-9 * domain.diameter();
    for (std::size_t i = 0; i < seeds.points.size(); ++i)
        if (!domain.contains(seeds.points[i]))
            throw PreconditionError("seed " + std::to_string(i) + " lies outside the domain");
    {
        const Point2 lo = domain.bbox_min();
        const Point2 hi = domain.bbox_max();
        SpatialGrid grid(lo, hi, seeds.points.size());
        for (std::size_t i = 0; i < seeds.points.size(); ++i) grid.insert(static_cast<Index>(i), seeds.points[i]);
        for (std::size_t i = 0; i < seeds.points.size(); ++i)
            grid.for_each_within(seeds.points[i], tol, [&](Index j) {
                if (j != static_cast<Index>(i))
                    throw PreconditionError("seeds " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            });
    }

    std::vector<std::vector<Point2>> detached;
    const auto cells = clipped_voronoi_cells(domain.outline, seeds.points, tol, &detached);
    PolyMesh mesh;
    mesh.domain = domain;
    auto add = [&](const std::vector<Point2>& poly) {
        std::vector<Index> cyc;
        for (const auto& p : poly) {
            cyc.push_back(mesh.num_nodes());
            mesh.nodes.push_back(p);
        }
        mesh.elements.push_back(std::move(cyc));
    };
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double a = cells[i].size() >= 3 ? geom::signed_area<double>(cells[i]) : 0.0;
        if (!(a > 1e-14 * domain.area()))
            throw DegenerateSeedError("Voronoi cell of seed " + std::to_string(i) + " has zero area");
        add(cells[i]);
    }
    for (const auto& piece : detached) add(piece);
    weld_and_conform(mesh);
    if (!detached.empty()) {
        absorb_detached(mesh, cells.size());
        for (std::size_t e = cells.size(); e < mesh.elements.size(); ++e)
            if (!mesh.elements[e].empty())
                throw DegenerateSeedError("a detached piece of a clipped Voronoi cell borders no other cell");
        mesh.elements.resize(cells.size());
        compact(mesh);
    }
    if (std::abs(total_area(mesh) - domain.area()) > 1e-9 * domain.area())
        throw DegenerateSeedError("clipped Voronoi cells do not cover the domain");
    return mesh;
}

std::vector<Point2> lloyd_in_region(const std::vector<Point2>& region, std::vector<Point2> sites, int max_iter, double tol,
                                    double merge_tol) {
    const double diam = geom::diameter<double>(region);
    for (int it = 0; it < max_iter; ++it) {
        const auto cells = clipped_voronoi_cells(region, sites, merge_tol);
        double moved = 0.0;
        std::vector<Point2> next = sites;
        for (std::size_t i = 0; i < sites.size(); ++i) {
            if (cells[i].size() < 3 || !(geom::signed_area<double>(cells[i]) > 0.0)) continue;
            const Point2 c = geom::centroid<double>(cells[i]);
            if (!geom::point_in_polygon<double>(c, region) || geom::distance_to_boundary<double>(c, region) <= merge_tol) continue;
            moved = std::max(moved, (c - sites[i]).norm());
            next[i] = c;
        }
        if (moved < tol * diam) break;
        sites = std::move(next);
    }
    return sites;
}

SeedSet lloyd_smooth(const DomainSpec& domain, const SeedSet& seeds, int max_iter, double tol) {
    SeedSet out = seeds;
    if (max_iter <= 0) return out;
    out.points = lloyd_in_region(domain.outline, seeds.points, max_iter, tol, 1e-9 * domain.diameter());
    return out;
}

PolyMesh generate_mesh(const DomainSpec& domain, Index n, MeshType mode, std::uint64_t rng_seed, int max_iter, double tol) {
    domain.validate();
    SeedSet seeds = generate_seeds(domain, n, mode, rng_seed);
    if (mode == MeshType::Voronoi) seeds = lloyd_smooth(domain, seeds, max_iter, tol);
    return bounded_voronoi(domain, seeds);
}

}  // namespace vemadapt
