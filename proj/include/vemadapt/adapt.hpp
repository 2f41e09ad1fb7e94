#ifndef VEMADAPT_ADAPT_HPP
#define VEMADAPT_ADAPT_HPP

#include "vemadapt/error_estimation.hpp"
#include "vemadapt/mesh.hpp"
#include "vemadapt/vem.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vemadapt {

enum class TargetKind { RelError, Elements, Nodes };

struct AdaptTarget {
    TargetKind kind = TargetKind::RelError;
    double value = 3.0;  ///< percent for RelError, a count otherwise

    static AdaptTarget rel_error(double percent);
    static AdaptTarget elements(Index n);
    static AdaptTarget nodes(Index n);
    void validate() const;
};

struct PlanningConstants {
    double n_refine = 4.0;
    double n_coarsen = 4.0;

    static PlanningConstants for_mesh(MeshType t);
};

/// Nodes per element r = a * n_v^b.
struct NodeModel {
    double a = 0.0;
    double b = 0.0;

    static NodeModel table(MeshType t, double n_v);
    double ratio(double n_v) const;
};

/// Element target equivalent to a node target.
Index nodes_to_elements(Index n_v_target, MeshType t);

struct ErrorBounds {
    double e_targ = 0.0;
    double e_loc = 0.0;
    double upper = 0.0;
    double lower = 0.0;
};

ErrorBounds element_error_bounds(double energy_error_target, Index n_el);

struct Marks {
    std::vector<Index> refine;   ///< element ids, ascending
    std::vector<Index> coarsen;  ///< node ids in processing order
};

using Eligibility = std::function<bool(Index node)>;

/// `patches[v]` lists the elements of node v's patch.
Marks mark_for_error_target(std::span<const double> elem_norms, std::span<const double> predictions,
                            const std::vector<std::vector<Index>>& patches, const ErrorBounds& bounds, const Eligibility& eligible);

/// Working-target update: subtract half of the discrepancy between the
/// measured error and `target` from the working value (percent).
double update_working_target(double working, double measured, double target);
inline double update_working_target(double working, double measured) { return update_working_target(working, measured, working); }

double stability_tolerance(MeshType t);

struct IterationRecord {
    Index iter = 0;
    std::string phase;
    Index n_el = 0;
    Index n_v = 0;
    double rel_error = 0.0;  ///< percent
    double energy_error = 0.0;
    double energy = 0.0;
    double working_target = 0.0;  ///< percent for error runs, element count for resource runs
    Index n_refined = 0;          ///< marks applied to reach this mesh
    Index n_coarsened = 0;
    std::vector<Index> refined_ids;
    std::vector<Index> coarsened_nodes;
    std::vector<double> elem_norms;
};

/// True iff n_v and the relative error each changed by at most the mesh
/// type's tolerance (relative) across each of the last three pairs.
bool check_stability(std::span<const IterationRecord> history, MeshType t);

bool check_accuracy(double measured, double target, MeshType t);

/// Keeps patches in order, dropping those sharing an element with an earlier
/// kept patch or failing eligibility, until `limit` remain.
std::vector<Index> disjoint_patches(const std::vector<Index>& nodes, const std::vector<std::vector<Index>>& patches,
                                    const Eligibility& eligible, std::size_t limit = static_cast<std::size_t>(-1));

Index round_count(double x);

Marks plan_resource_phase1(Index n_el, Index n_targ, const PlanningConstants& c, std::span<const double> elem_norms,
                           std::span<const double> predictions, const std::vector<std::vector<Index>>& patches,
                           const Eligibility& eligible);

/// Trims error-target candidates so refinement and coarsening balance. When
/// `refine_gain` is given, the trimmed lists are then adjusted so the actual
/// element gains of refinement match the patch sizes removed by coarsening.
Marks plan_resource_phase2(std::span<const double> elem_norms, std::span<const double> predictions,
                           const std::vector<std::vector<Index>>& patches, const ErrorBounds& bounds, const PlanningConstants& c,
                           const Eligibility& eligible, std::span<const Index> refine_gain = {});

struct AdaptCaps {
    int max_iter = 50;
    Index max_elements = 400000;
    bool keep_snapshots = false;
};

struct AdaptResult {
    PolyMesh mesh;
    std::vector<IterationRecord> history;
    std::vector<PolyMesh> snapshots;  ///< one per history row when kept
    bool converged = false;
    std::string diagnostic;
};

using AdaptObserver = std::function<void(const IterationRecord&, const PolyMesh&)>;

AdaptResult run_adaptation(PolyMesh mesh, const MaterialParams& material, const Loads& loads, const AdaptTarget& target,
                           MeshType mode, std::uint64_t rng_seed, const AdaptCaps& caps = {}, const AdaptObserver& observer = {});

}  // namespace vemadapt

#endif  // VEMADAPT_ADAPT_HPP
