#ifndef VEMADAPT_GEOMETRY_HPP
#define VEMADAPT_GEOMETRY_HPP

// Planar polygon kernels. Polygons are vertex sequences, implicitly closed,
// counter-clockwise unless stated otherwise. Everything here is templated on
// the scalar so the same code serves double-precision meshing and the
// extended-precision oracles in the tests.

#include "vemadapt/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace vemadapt::geom {

template <typename S>
using Polygon = std::vector<Vec2<S>>;

template <typename S>
inline S cross(const Vec2<S>& a, const Vec2<S>& b) {
    return a.x() * b.y() - a.y() * b.x();
}

/// Twice the signed area of triangle (o, a, b).
template <typename S>
inline S orient(const Vec2<S>& o, const Vec2<S>& a, const Vec2<S>& b) {
    return cross<S>(a - o, b - o);
}

/// Shoelace signed area; positive for counter-clockwise cycles.
template <typename S>
S signed_area(std::span<const Vec2<S>> poly) {
    const std::size_t n = poly.size();
    S acc = S(0);
    if (n < 3) return acc;
    // Shift to the first vertex to limit cancellation on far-from-origin data.
    const Vec2<S> o = poly[0];
    for (std::size_t i = 1; i + 1 < n; ++i) acc += cross<S>(poly[i] - o, poly[i + 1] - o);
    return acc / S(2);
}

template <typename S>
S signed_area(const Polygon<S>& poly) {
    return signed_area<S>(std::span<const Vec2<S>>(poly));
}

/// Area-weighted centroid. Undefined for zero-area input.
template <typename S>
Vec2<S> centroid(std::span<const Vec2<S>> poly) {
    const std::size_t n = poly.size();
    const Vec2<S> o = poly[0];
    S a = S(0);
    Vec2<S> c = Vec2<S>::Zero();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Vec2<S> p = poly[i] - o;
        const Vec2<S> q = poly[i + 1] - o;
        const S w = cross<S>(p, q);
        a += w;
        c += w * (p + q);
    }
    return o + c / (S(3) * a);
}

template <typename S>
Vec2<S> centroid(const Polygon<S>& poly) {
    return centroid<S>(std::span<const Vec2<S>>(poly));
}

/// Largest vertex-to-vertex distance.
template <typename S>
S diameter(std::span<const Vec2<S>> pts) {
    S d2 = S(0);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) d2 = std::max(d2, (pts[i] - pts[j]).squaredNorm());
    using std::sqrt;
    return sqrt(d2);
}

template <typename S>
S diameter(const Polygon<S>& poly) {
    return diameter<S>(std::span<const Vec2<S>>(poly));
}

/// Parameter of the orthogonal projection of p onto line ab (0 at a, 1 at b).
template <typename S>
S project_param(const Vec2<S>& p, const Vec2<S>& a, const Vec2<S>& b) {
    const Vec2<S> ab = b - a;
    return (p - a).dot(ab) / ab.squaredNorm();
}

template <typename S>
S distance_to_segment(const Vec2<S>& p, const Vec2<S>& a, const Vec2<S>& b) {
    const S t = std::clamp(project_param<S>(p, a, b), S(0), S(1));
    return (p - (a + t * (b - a))).norm();
}

/// True if p lies within tol of the open segment (a, b), away from both
/// endpoints by more than tol.
template <typename S>
bool on_segment_interior(const Vec2<S>& p, const Vec2<S>& a, const Vec2<S>& b, S tol) {
    if ((p - a).norm() <= tol || (p - b).norm() <= tol) return false;
    const S t = project_param<S>(p, a, b);
    if (t <= S(0) || t >= S(1)) return false;
    return (p - (a + t * (b - a))).norm() <= tol;
}

/// Crossing-number test. Points on the boundary may land either way; use
/// distance_to_boundary when that matters.
template <typename S>
bool point_in_polygon(const Vec2<S>& p, std::span<const Vec2<S>> poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2<S>& a = poly[i];
        const Vec2<S>& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const S x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x) inside = !inside;
        }
    }
    return inside;
}

template <typename S>
bool point_in_polygon(const Vec2<S>& p, const Polygon<S>& poly) {
    return point_in_polygon<S>(p, std::span<const Vec2<S>>(poly));
}

template <typename S>
S distance_to_boundary(const Vec2<S>& p, std::span<const Vec2<S>> poly) {
    S best = std::numeric_limits<S>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) best = std::min(best, distance_to_segment<S>(p, poly[i], poly[(i + 1) % n]));
    return best;
}

/// Proper intersection of segments ab and cd: they cross at a single point
/// interior to both.
template <typename S>
bool segments_cross(const Vec2<S>& a, const Vec2<S>& b, const Vec2<S>& c, const Vec2<S>& d, S tol) {
    const S s1 = orient<S>(a, b, c);
    const S s2 = orient<S>(a, b, d);
    const S s3 = orient<S>(c, d, a);
    const S s4 = orient<S>(c, d, b);
    const S ab = (b - a).norm();
    const S cd = (d - c).norm();
    const S t1 = tol * ab;
    const S t2 = tol * cd;
    return ((s1 > t1 && s2 < -t1) || (s1 < -t1 && s2 > t1)) && ((s3 > t2 && s4 < -t2) || (s3 < -t2 && s4 > t2));
}

/// Segments ab and cd share at least one point (within tol).
template <typename S>
bool segments_touch(const Vec2<S>& a, const Vec2<S>& b, const Vec2<S>& c, const Vec2<S>& d, S tol) {
    if (segments_cross<S>(a, b, c, d, S(0))) return true;
    return distance_to_segment<S>(a, c, d) <= tol || distance_to_segment<S>(b, c, d) <= tol ||
           distance_to_segment<S>(c, a, b) <= tol || distance_to_segment<S>(d, a, b) <= tol;
}

/// Simple-polygon test: no repeated vertices, no edge touching a
/// non-adjacent edge, no adjacent edges folding back on each other.
/// Collinear consecutive vertices are permitted.
template <typename S>
bool is_simple(std::span<const Vec2<S>> poly, S tol) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i)
        if ((poly[i] - poly[(i + 1) % n]).norm() <= tol) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2<S>& a = poly[i];
        const Vec2<S>& b = poly[(i + 1) % n];
        // Fold-back at the shared vertex b.
        const Vec2<S>& c = poly[(i + 2) % n];
        if (std::abs(orient<S>(a, b, c)) <= tol * (b - a).norm() && (b - a).dot(c - b) < S(0)) return false;
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            const Vec2<S>& p = poly[j];
            const Vec2<S>& q = poly[(j + 1) % n];
            if (segments_touch<S>(a, b, p, q, tol)) return false;
        }
    }
    return true;
}

template <typename S>
bool is_simple(const Polygon<S>& poly, S tol) {
    return is_simple<S>(std::span<const Vec2<S>>(poly), tol);
}

/// Convex hull (Andrew's monotone chain). Returns indices into pts in
/// counter-clockwise order starting from the lowest-leftmost point; points
/// within distance tol of a hull edge are not hull vertices.
template <typename S>
std::vector<std::size_t> convex_hull(std::span<const Vec2<S>> pts, S tol) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
        return pts[a].y() < pts[b].y();
    });
    if (idx.size() < 3) return idx;
    std::vector<std::size_t> hull(2 * idx.size());
    std::size_t k = 0;
    auto keep_turn = [&](std::size_t o, std::size_t a, std::size_t b) {
        const S len = (pts[b] - pts[o]).norm();
        return orient<S>(pts[o], pts[a], pts[b]) > tol * len;
    };
    for (std::size_t i = 0; i < idx.size(); ++i) {
        while (k >= 2 && !keep_turn(hull[k - 2], hull[k - 1], idx[i])) --k;
        hull[k++] = idx[i];
    }
    for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && !keep_turn(hull[k - 2], hull[k - 1], idx[i])) --k;
        hull[k++] = idx[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Drops consecutive vertices closer than tol (cyclically).
template <typename S>
void remove_duplicate_vertices(Polygon<S>& poly, S tol) {
    if (poly.empty()) return;
    Polygon<S> out;
    out.reserve(poly.size());
    for (const auto& p : poly)
        if (out.empty() || (p - out.back()).norm() > tol) out.push_back(p);
    while (out.size() > 1 && (out.front() - out.back()).norm() <= tol) out.pop_back();
    poly = std::move(out);
}

/// Intersects poly with the closed half-plane {x : normal . x <= offset}.
/// poly may be non-convex, in which case the intersection can split into
/// several pieces, all of which are returned. Vertices exactly on the line
/// are treated as if the line were shifted infinitesimally outward, which
/// keeps crossing pairing consistent.
template <typename S>
std::vector<Polygon<S>> clip_pieces(const Polygon<S>& poly, const Vec2<S>& normal, S offset) {
    const std::size_t m = poly.size();
    if (m < 3) return {};
    std::vector<S> d(m);
    std::vector<char> in(m);
    std::size_t n_in = 0;
    for (std::size_t i = 0; i < m; ++i) {
        d[i] = normal.dot(poly[i]) - offset;
        in[i] = d[i] <= S(0);
        n_in += in[i] ? 1 : 0;
    }
    if (n_in == m) return {poly};
    if (n_in == 0) return {};

    auto crossing_point = [&](std::size_t i, std::size_t j) -> Vec2<S> {
        if (d[i] == S(0)) return poly[i];
        if (d[j] == S(0)) return poly[j];
        const S t = d[i] / (d[i] - d[j]);
        return poly[i] + t * (poly[j] - poly[i]);
    };

    std::size_t n_cross = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (in[i] != in[(i + 1) % m]) ++n_cross;

    if (n_cross == 2) {
        Polygon<S> out;
        out.reserve(m + 2);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = (i + 1) % m;
            if (in[i]) out.push_back(poly[i]);
            if (in[i] != in[j]) out.push_back(crossing_point(i, j));
        }
        return {out};
    }

    struct Crossing {
        Vec2<S> p;
        S s;
        S key;
        bool exit;
        std::size_t edge;
    };
    const Vec2<S> dir(-normal.y(), normal.x());
    std::vector<Crossing> xs;
    std::vector<std::ptrdiff_t> edge_crossing(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = (i + 1) % m;
        if (in[i] == in[j]) continue;
        Crossing c;
        c.p = crossing_point(i, j);
        c.s = c.p.dot(dir);
        c.key = S(0);
        if (d[i] == S(0)) c.key = (poly[j] - poly[i]).dot(dir) / d[j];
        else if (d[j] == S(0)) c.key = (poly[i] - poly[j]).dot(dir) / d[i];
        c.exit = in[i] && !in[j];
        c.edge = i;
        edge_crossing[i] = static_cast<std::ptrdiff_t>(xs.size());
        xs.push_back(c);
    }
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a].s != xs[b].s) return xs[a].s < xs[b].s;
        return xs[a].key < xs[b].key;
    });
    std::vector<std::size_t> partner(xs.size());
    for (std::size_t k = 0; k + 1 < order.size(); k += 2) {
        partner[order[k]] = order[k + 1];
        partner[order[k + 1]] = order[k];
    }

    std::vector<Polygon<S>> loops;
    std::vector<char> used(xs.size(), 0);
    bool consistent = true;
    for (std::size_t start = 0; start < xs.size() && consistent; ++start) {
        if (used[start] || xs[start].exit) continue;
        Polygon<S> loop;
        std::size_t e = start;
        std::size_t guard = 0;
        while (true) {
            if (++guard > xs.size() + 1) {
                consistent = false;
                break;
            }
            used[e] = 1;
            loop.push_back(xs[e].p);
            std::size_t v = (xs[e].edge + 1) % m;
            std::size_t steps = 0;
            while (true) {
                loop.push_back(poly[v]);
                const std::size_t w = (v + 1) % m;
                if (!in[w]) break;
                v = w;
                if (++steps > m) break;
            }
            const std::ptrdiff_t xi = edge_crossing[v];
            if (xi < 0 || !xs[xi].exit) {
                consistent = false;
                break;
            }
            used[xi] = 1;
            loop.push_back(xs[xi].p);
            const std::size_t next = partner[xi];
            if (xs[next].exit) {
                consistent = false;
                break;
            }
            if (next == start) break;
            e = next;
        }
        if (consistent) loops.push_back(std::move(loop));
    }

    if (!consistent || loops.empty()) {
        // Fall back to the single Sutherland-Hodgman sequence.
        Polygon<S> out;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = (i + 1) % m;
            if (in[i]) out.push_back(poly[i]);
            if (in[i] != in[j]) out.push_back(crossing_point(i, j));
        }
        return {out};
    }
    return loops;
}

/// The piece of clip_pieces containing keep (the largest if none does).
/// keep must lie strictly inside the half-plane.
template <typename S>
Polygon<S> clip_keep(const Polygon<S>& poly, const Vec2<S>& normal, S offset, const Vec2<S>& keep) {
    std::vector<Polygon<S>> loops = clip_pieces<S>(poly, normal, offset);
    if (loops.empty()) return {};
    if (loops.size() == 1) return std::move(loops.front());
    std::size_t best = 0;
    S best_area = S(-1);
    for (std::size_t k = 0; k < loops.size(); ++k) {
        if (point_in_polygon<S>(keep, loops[k])) return loops[k];
        const S a = signed_area<S>(loops[k]);
        if (a > best_area) {
            best_area = a;
            best = k;
        }
    }
    return loops[best];
}

/// Half-plane of points at least as close to `site` as to `other`.
template <typename S>
std::vector<Polygon<S>> clip_bisector_pieces(const Polygon<S>& poly, const Vec2<S>& site, const Vec2<S>& other) {
    const Vec2<S> n = other - site;
    return clip_pieces<S>(poly, n, n.dot((site + other) / S(2)));
}

template <typename S>
Polygon<S> clip_bisector(const Polygon<S>& poly, const Vec2<S>& site, const Vec2<S>& other) {
    const Vec2<S> n = other - site;
    const S c = n.dot((site + other) / S(2));
    return clip_keep<S>(poly, n, c, site);
}

}  // namespace vemadapt::geom

#endif  // VEMADAPT_GEOMETRY_HPP
