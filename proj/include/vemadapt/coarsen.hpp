#ifndef VEMADAPT_COARSEN_HPP
#define VEMADAPT_COARSEN_HPP

#include "vemadapt/mesh.hpp"

#include <string>
#include <vector>

namespace vemadapt {

/// True iff merging the node's patch into its convex hull keeps the domain
/// geometry: the hull stays inside the domain, swallows no outline vertex,
/// and straightening the surrounding elements succeeds.
bool patch_eligible(const PolyMesh& mesh, Index node);
bool patch_eligible(const PolyMesh& mesh, const NodeIncidence& inc, Index node);

struct CoarsenResult {
    bool ok = false;
    Index new_element = -1;
    std::vector<Index> deleted;   ///< patch elements, left as tombstones
    std::vector<Index> modified;  ///< straightened or hanging-node-updated neighbours
    std::string reason;
};

/// Replaces the patch by one element bounded by the patch hull. Nodes of
/// surrounding elements strictly inside the hull are projected onto it.
/// Patch elements become tombstones and the new element is appended; nodes
/// nobody uses any more stay in the node array until compact().
CoarsenResult coarsen_patch(PolyMesh& mesh, NodeIncidence& inc, Index node);

/// Convenience form that compacts afterwards; new_element is the compacted id.
CoarsenResult coarsen_patch(PolyMesh& mesh, Index node);

struct CoarsenBatchResult {
    Index coarsened = 0;
    Index skipped = 0;
    std::vector<Index> new_elements;
};

/// Processes nodes in the given order, skipping any patch that touches an
/// element deleted or created earlier in the batch. Does not compact.
CoarsenBatchResult coarsen_batch(PolyMesh& mesh, NodeIncidence& inc, const std::vector<Index>& nodes);

/// Same, followed by compact().
CoarsenBatchResult coarsen_batch(PolyMesh& mesh, const std::vector<Index>& nodes);

}  // namespace vemadapt

#endif  // VEMADAPT_COARSEN_HPP
