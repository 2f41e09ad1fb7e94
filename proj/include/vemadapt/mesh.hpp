#ifndef VEMADAPT_MESH_HPP
#define VEMADAPT_MESH_HPP

#include "vemadapt/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace vemadapt {

enum class BoundaryTag { DirichletX, DirichletY, DirichletXY, Neumann, Free };

const char* to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

/// One straight piece of the domain outline with its boundary condition.
///
/// Dirichlet tags prescribe the displacement components they name through
/// `value`; Neumann prescribes the traction `traction`. A Dirichlet segment
/// constraining only one component may also carry a traction acting on the
/// other (free) component, which is how a horizontally-held punch is modelled.
struct BoundarySegment {
    Point2 a = Point2::Zero();
    Point2 b = Point2::Zero();
    BoundaryTag tag = BoundaryTag::Free;
    std::array<std::optional<double>, 2> value{};
    Eigen::Vector2d traction = Eigen::Vector2d::Zero();

    bool constrains(int component) const;
    bool has_traction() const { return traction.squaredNorm() > 0.0; }
};

/// Problem geometry: a simple counter-clockwise outline partitioned into
/// tagged segments, listed in outline order.
struct DomainSpec {
    std::vector<Point2> outline;
    std::vector<BoundarySegment> segments;

    /// Builds the outline from a chain of segments (segment k ends where k+1 starts).
    static DomainSpec from_segments(std::vector<BoundarySegment> segments);

    double area() const;
    double diameter() const;
    Point2 bbox_min() const;
    Point2 bbox_max() const;
    bool contains(const Point2& p) const;
    double distance_to_boundary(const Point2& p) const;

    /// Throws PreconditionError unless the outline is simple, CCW, partitioned
    /// by the segments and at least one segment is Dirichlet.
    void validate() const;
};

/// Polygonal mesh stored as vertex-id cycles. Hanging nodes are ordinary
/// (collinear) vertices of every element whose edge they lie on.
///
/// An element with an empty cycle is a tombstone left by an in-progress batch
/// mutation; compact() removes it. Meshes handed to callers never contain
/// tombstones.
struct PolyMesh {
    std::vector<Point2> nodes;
    std::vector<std::vector<Index>> elements;
    DomainSpec domain;

    Index num_nodes() const { return static_cast<Index>(nodes.size()); }
    Index num_elements() const { return static_cast<Index>(elements.size()); }

    /// Node-duplication tolerance: 1e-9 of the domain diameter.
    double merge_tolerance() const;

    std::vector<Point2> polygon(Index elem) const;
};

double element_area(const PolyMesh& mesh, Index elem);
Point2 element_centroid(const PolyMesh& mesh, Index elem);
double element_diameter(const PolyMesh& mesh, Index elem);
double total_area(const PolyMesh& mesh);

/// Elements whose vertex cycle contains node, ascending.
std::vector<Index> node_patch(const PolyMesh& mesh, Index node);

/// Node -> incident elements, kept in sync by the mutation routines.
class NodeIncidence {
public:
    NodeIncidence() = default;
    explicit NodeIncidence(const PolyMesh& mesh) { rebuild(mesh); }

    void rebuild(const PolyMesh& mesh);
    const std::vector<Index>& of(Index node) const { return table_[static_cast<std::size_t>(node)]; }
    void add(Index elem, const std::vector<Index>& cycle);
    void remove(Index elem, const std::vector<Index>& cycle);
    void ensure_nodes(Index n);
    bool unused(Index node) const { return table_[static_cast<std::size_t>(node)].empty(); }

private:
    std::vector<std::vector<Index>> table_;
};

/// Elements sharing at least one node with elem (excluding elem).
std::vector<Index> element_neighbors(const PolyMesh& mesh, const NodeIncidence& inc, Index elem);

struct Violation {
    std::string invariant;
    std::vector<Index> ids;
    std::string detail;
};

/// Empty iff every mesh invariant holds: valid simple CCW cycles, no
/// duplicate nodes, every node lying on an element edge is a vertex of that
/// element, interior edges paired, unpaired edges on the outline, and total
/// area equal to the domain area.
std::vector<Violation> check_conformity(const PolyMesh& mesh);

struct CompactMaps {
    std::vector<Index> node_map;  ///< old -> new, -1 if removed
    std::vector<Index> elem_map;  ///< old -> new, -1 if removed
};

/// Removes tombstoned elements and nodes used by no element.
CompactMaps compact(PolyMesh& mesh);

/// Merges nodes closer than the merge tolerance, drops repeated consecutive
/// ids and inserts every node lying on an element edge into that cycle.
void weld_and_conform(PolyMesh& mesh);

/// Inserts into the cycles of `elems` every node of `candidates` lying in the
/// interior of one of their edges.
void insert_hanging_nodes(PolyMesh& mesh, const std::vector<Index>& elems, const std::vector<Index>& candidates);

struct NodeBoundaryInfo {
    bool on_boundary = false;
    std::vector<int> segments;  ///< indices into domain.segments the node lies on
};

/// A node is boundary-tagged iff it lies on an outline segment within the
/// merge tolerance.
std::vector<NodeBoundaryInfo> boundary_node_info(const PolyMesh& mesh);

}  // namespace vemadapt

#endif  // VEMADAPT_MESH_HPP
