#ifndef VEMADAPT_MESH_GEN_HPP
#define VEMADAPT_MESH_GEN_HPP

#include "vemadapt/mesh.hpp"

#include <cstdint>
#include <vector>

namespace vemadapt {

struct SeedSet {
    std::vector<Point2> points;
    std::uint64_t rng_seed = 0;
};

inline constexpr Index kMaxSeeds = 1000000;

/// Structured mode: centres of an axis-aligned grid whose cell counts follow
/// the domain aspect ratio, keeping the centres that fall inside the domain.
/// Grids whose lines pass through every outline vertex are preferred. Voronoi
/// mode: n uniform points inside the domain drawn from rng_seed.
SeedSet generate_seeds(const DomainSpec& domain, Index n, MeshType mode, std::uint64_t rng_seed);

/// Voronoi cells of `sites` restricted to `region` (any simple CCW polygon).
/// A cell whose restriction is disconnected keeps the piece holding its site;
/// the other pieces go to `detached` when given.
std::vector<std::vector<Point2>> clipped_voronoi_cells(const std::vector<Point2>& region, const std::vector<Point2>& sites,
                                                       double merge_tol,
                                                       std::vector<std::vector<Point2>>* detached = nullptr);

/// One element per seed; the Voronoi cell clipped to the domain. A piece of a
/// cell cut off from its seed by a re-entrant corner joins the neighbouring
/// cell it shares the longest boundary with.
PolyMesh bounded_voronoi(const DomainSpec& domain, const SeedSet& seeds);

/// Lloyd iteration inside `region`: move each site to its cell centroid until
/// the largest move falls below tol * diam(region) or max_iter is reached.
/// Centroids falling outside the region leave their site in place.
std::vector<Point2> lloyd_in_region(const std::vector<Point2>& region, std::vector<Point2> sites, int max_iter, double tol,
                                    double merge_tol);

inline constexpr int kLloydMaxIter = 100;
inline constexpr double kLloydTol = 1e-3;

SeedSet lloyd_smooth(const DomainSpec& domain, const SeedSet& seeds, int max_iter = kLloydMaxIter, double tol = kLloydTol);

/// Seeds, smoothing and tessellation in one call.
PolyMesh generate_mesh(const DomainSpec& domain, Index n, MeshType mode, std::uint64_t rng_seed, int max_iter = kLloydMaxIter,
                       double tol = kLloydTol);

}  // namespace vemadapt

#endif  // VEMADAPT_MESH_GEN_HPP
