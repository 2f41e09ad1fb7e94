#ifndef VEMADAPT_SPATIAL_GRID_HPP
#define VEMADAPT_SPATIAL_GRID_HPP

#include "vemadapt/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vemadapt {

/// Uniform bucket grid over a fixed bounding box for radius and box queries
/// on point sets. Points outside the box are clamped into border buckets.
class SpatialGrid {
public:
    SpatialGrid() = default;

    SpatialGrid(const Point2& lo, const Point2& hi, std::size_t expected_points) { reset(lo, hi, expected_points); }

    void reset(const Point2& lo, const Point2& hi, std::size_t expected_points) {
        lo_ = lo;
        const Point2 ext = (hi - lo).cwiseMax(Point2::Constant(1e-300));
        const double cells = std::max<double>(1.0, static_cast<double>(expected_points));
        const double h = std::sqrt(ext.x() * ext.y() / cells);
        const double hs = h > 0 ? h : std::max(ext.x(), ext.y());
        nx_ = std::clamp<Index>(static_cast<Index>(ext.x() / hs) + 1, 1, 4096);
        ny_ = std::clamp<Index>(static_cast<Index>(ext.y() / hs) + 1, 1, 4096);
        cell_ = Point2(ext.x() / static_cast<double>(nx_), ext.y() / static_cast<double>(ny_));
        buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
        points_.clear();
    }

    void insert(Index id, const Point2& p) {
        buckets_[bucket(p)].push_back(id);
        if (static_cast<std::size_t>(id) >= points_.size()) points_.resize(static_cast<std::size_t>(id) + 1);
        points_[static_cast<std::size_t>(id)] = p;
    }

    /// Calls f(id) for every stored point within the axis-aligned box.
    template <typename F>
    void for_each_in_box(const Point2& lo, const Point2& hi, F&& f) const {
        const auto [i0, j0] = cell_of(lo);
        const auto [i1, j1] = cell_of(hi);
        for (Index j = j0; j <= j1; ++j)
            for (Index i = i0; i <= i1; ++i)
                for (Index id : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
                    const Point2& p = points_[static_cast<std::size_t>(id)];
                    if (p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y()) f(id);
                }
    }

    template <typename F>
    void for_each_within(const Point2& c, double r, F&& f) const {
        const Point2 d = Point2::Constant(r);
        for_each_in_box(c - d, c + d, [&](Index id) {
            if ((points_[static_cast<std::size_t>(id)] - c).norm() <= r) f(id);
        });
    }

    Point2 cell_size() const { return cell_; }

private:
    std::pair<Index, Index> cell_of(const Point2& p) const {
        const Index i = std::clamp<Index>(static_cast<Index>(std::floor((p.x() - lo_.x()) / cell_.x())), 0, nx_ - 1);
        const Index j = std::clamp<Index>(static_cast<Index>(std::floor((p.y() - lo_.y()) / cell_.y())), 0, ny_ - 1);
        return {i, j};
    }
    std::size_t bucket(const Point2& p) const {
        const auto [i, j] = cell_of(p);
        return static_cast<std::size_t>(j * nx_ + i);
    }

    Point2 lo_ = Point2::Zero();
    Point2 cell_ = Point2::Ones();
    Index nx_ = 1;
    Index ny_ = 1;
    std::vector<std::vector<Index>> buckets_;
    std::vector<Point2> points_;
};

}  // namespace vemadapt

#endif  // VEMADAPT_SPATIAL_GRID_HPP
