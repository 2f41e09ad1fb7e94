#ifndef VEMADAPT_REFINE_HPP
#define VEMADAPT_REFINE_HPP

#include "vemadapt/mesh.hpp"

#include <cstdint>
#include <vector>

namespace vemadapt {

inline constexpr int kRefineLloydIter = 20;
inline constexpr double kRefineLloydTol = 1e-3;

struct RefineResult {
    bool ok = false;
    std::vector<Index> children;  ///< first child reuses the parent's id
    std::string reason;
};

/// Splits elem into sub-cells of a local Voronoi tessellation. New nodes on
/// the parent's edges become vertices of the edge-sharing neighbours. On
/// failure the mesh is left untouched.
RefineResult refine_element(PolyMesh& mesh, Index elem, MeshType mode, std::uint64_t rng_seed);
RefineResult refine_element(PolyMesh& mesh, NodeIncidence& inc, Index elem, MeshType mode, std::uint64_t rng_seed);

/// Children the element would split into, minus one.
Index refine_gain(const PolyMesh& mesh, Index elem, MeshType mode);

struct RefineBatchResult {
    Index refined = 0;
    Index failed = 0;
    std::vector<Index> new_elements;  ///< ids touched or created, including reused parent slots
};

/// Refines in ascending id order. Ids of tombstoned elements are skipped.
RefineBatchResult refine_batch(PolyMesh& mesh, std::vector<Index> elems, MeshType mode, std::uint64_t rng_seed);
RefineBatchResult refine_batch(PolyMesh& mesh, NodeIncidence& inc, std::vector<Index> elems, MeshType mode,
                               std::uint64_t rng_seed);

}  // namespace vemadapt

#endif  // VEMADAPT_REFINE_HPP
