#include "vemadapt/adapt.hpp"

#include "vemadapt/coarsen.hpp"
#include "vemadapt/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace vemadapt {

namespace {
// Merged elements come out rougher than the patch prediction suggests.
constexpr double kPredictionInflation = 1.5;
}  // namespace

AdaptTarget AdaptTarget::rel_error(double percent) {
    AdaptTarget t{TargetKind::RelError, percent};
    t.validate();
    return t;
}

AdaptTarget AdaptTarget::elements(Index n) {
    AdaptTarget t{TargetKind::Elements, static_cast<double>(n)};
    t.validate();
    return t;
}

AdaptTarget AdaptTarget::nodes(Index n) {
    AdaptTarget t{TargetKind::Nodes, static_cast<double>(n)};
    t.validate();
    return t;
}

void AdaptTarget::validate() const {
    if (kind == TargetKind::RelError) {
        if (!(value > 0.0 && value < 100.0)) throw PreconditionError("target error must lie in (0, 100) percent");
    } else if (!(value >= 1.0) || value != std::floor(value)) {
        throw PreconditionError("target count must be a positive integer");
    }
}

PlanningConstants PlanningConstants::for_mesh(MeshType t) {
    return t == MeshType::Structured ? PlanningConstants{4.0, 4.0} : PlanningConstants{5.0, 3.0};
}

NodeModel NodeModel::table(MeshType t, double n_v) {
    const bool small = n_v <= 1000.0;
    if (t == MeshType::Structured) return small ? NodeModel{2.2763, -0.102} : NodeModel{1.5032, -0.04};
    return small ? NodeModel{2.2225, -0.054} : NodeModel{2.0871, -0.044};
}

double NodeModel::ratio(double n_v) const { return a * std::pow(n_v, b); }

Index round_count(double x) { return static_cast<Index>(std::floor(x + 0.5)); }

Index nodes_to_elements(Index n_v_target, MeshType t) {
    if (n_v_target < 3) throw PreconditionError("node target must be at least 3");
    const double nv = static_cast<double>(n_v_target);
    return std::max<Index>(1, round_count(nv / NodeModel::table(t, nv).ratio(nv)));
}

ErrorBounds element_error_bounds(double energy_error_target, Index n_el) {
    if (n_el < 1) throw PreconditionError("element count must be positive");
    if (!(energy_error_target > 0.0)) throw PreconditionError("error target must be positive");
    ErrorBounds b;
    b.e_targ = 2.0 * energy_error_target * energy_error_target / static_cast<double>(n_el);
    b.e_loc = std::sqrt(b.e_targ / 2.0);
    b.upper = 2.0 * b.e_loc;
    b.lower = 0.5 * b.e_loc;
    return b;
}

namespace {

// Indices sorted by value, ties broken by index.
std::vector<Index> order_by(std::span<const double> v, const std::vector<Index>& ids, bool descending) {
    std::vector<Index> out = ids;
    std::stable_sort(out.begin(), out.end(), [&](Index a, Index b) {
        const double va = v[static_cast<std::size_t>(a)], vb = v[static_cast<std::size_t>(b)];
        if (va != vb) return descending ? va > vb : va < vb;
        return a < b;
    });
    return out;
}

std::vector<Index> all_ids(std::size_t n) {
    std::vector<Index> ids(n);
    std::iota(ids.begin(), ids.end(), Index{0});
    return ids;
}

std::vector<Index> top_refine(std::span<const double> norms, const std::vector<Index>& candidates, std::size_t count) {
    std::vector<Index> sorted = order_by(norms, candidates, true);
    if (sorted.size() > count) sorted.resize(count);
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

std::vector<Index> nonempty_patch_nodes(const std::vector<std::vector<Index>>& patches) {
    std::vector<Index> out;
    for (std::size_t v = 0; v < patches.size(); ++v)
        if (patches[v].size() >= 2) out.push_back(static_cast<Index>(v));
    return out;
}

}  // namespace

Marks mark_for_error_target(std::span<const double> elem_norms, std::span<const double> predictions,
                            const std::vector<std::vector<Index>>& patches, const ErrorBounds& bounds, const Eligibility& eligible) {
    Marks m;
    std::vector<char> refined(elem_norms.size(), 0);
    for (std::size_t i = 0; i < elem_norms.size(); ++i)
        if (elem_norms[i] > bounds.upper) {
            m.refine.push_back(static_cast<Index>(i));
            refined[i] = 1;
        }
    std::vector<Index> candidates;
    for (Index v : nonempty_patch_nodes(patches)) {
        if (!(predictions[static_cast<std::size_t>(v)] < bounds.upper)) continue;
        const auto& p = patches[static_cast<std::size_t>(v)];
        if (std::any_of(p.begin(), p.end(), [&](Index e) { return refined[static_cast<std::size_t>(e)] != 0; })) continue;
        candidates.push_back(v);
    }
    for (Index v : order_by(predictions, candidates, false))
        if (!eligible || eligible(v)) m.coarsen.push_back(v);
    return m;
}

double update_working_target(double working, double measured, double target) { return working - (measured - target) / 2.0; }

double stability_tolerance(MeshType t) { return t == MeshType::Structured ? 0.01 : 0.02; }

namespace {

bool within(double prev, double cur, double tol) {
    if (prev == cur) return true;
    const double scale = std::abs(prev);
    return scale > 0.0 && std::abs(cur - prev) <= tol * scale;
}

}  // namespace

bool check_stability(std::span<const IterationRecord> history, MeshType t) {
    if (history.size() < 4) return false;
    const double tol = stability_tolerance(t);
    for (std::size_t k = history.size() - 3; k < history.size(); ++k) {
        const auto& a = history[k - 1];
        const auto& b = history[k];
        if (!within(static_cast<double>(a.n_v), static_cast<double>(b.n_v), tol)) return false;
        if (!within(a.rel_error, b.rel_error, tol)) return false;
    }
    return true;
}

bool check_accuracy(double measured, double target, MeshType t) {
    return std::abs(measured - target) <= stability_tolerance(t) * target;
}

std::vector<Index> disjoint_patches(const std::vector<Index>& nodes, const std::vector<std::vector<Index>>& patches,
                                    const Eligibility& eligible, std::size_t limit) {
    std::vector<Index> out;
    std::unordered_set<Index> used;
    for (Index v : nodes) {
        if (out.size() >= limit) break;
        const auto& p = patches[static_cast<std::size_t>(v)];
        if (std::any_of(p.begin(), p.end(), [&](Index e) { return used.count(e) != 0; })) continue;
        if (eligible && !eligible(v)) continue;
        used.insert(p.begin(), p.end());
        out.push_back(v);
    }
    return out;
}

Marks plan_resource_phase1(Index n_el, Index n_targ, const PlanningConstants& c, std::span<const double> elem_norms,
                           std::span<const double> predictions, const std::vector<std::vector<Index>>& patches,
                           const Eligibility& eligible) {
    Marks m;
    if (n_targ == n_el) return m;
    const double ne = static_cast<double>(n_el), nt = static_cast<double>(n_targ);
    if (n_targ > n_el) {
        const std::vector<Index> ids = all_ids(elem_norms.size());
        if (nt / ne >= c.n_refine) {
            m.refine = ids;
        } else {
            const Index count = std::max<Index>(1, round_count((nt - ne) / (c.n_refine - 1.0)));
            m.refine = top_refine(elem_norms, ids, static_cast<std::size_t>(count));
        }
        return m;
    }
    const std::vector<Index> ordered = order_by(predictions, nonempty_patch_nodes(patches), false);
    if (ne / nt >= c.n_coarsen) {
        m.coarsen = disjoint_patches(ordered, patches, eligible);
    } else {
        const Index count = std::max<Index>(1, round_count((ne - nt) / (c.n_coarsen - 1.0)));
        m.coarsen = disjoint_patches(ordered, patches, eligible, static_cast<std::size_t>(count));
    }
    return m;
}

Marks plan_resource_phase2(std::span<const double> elem_norms, std::span<const double> predictions,
                           const std::vector<std::vector<Index>>& patches, const ErrorBounds& bounds, const PlanningConstants& c,
                           const Eligibility& eligible, std::span<const Index> refine_gain) {
    Marks cand = mark_for_error_target(elem_norms, predictions, patches, bounds, {});
    cand.coarsen = disjoint_patches(cand.coarsen, patches, eligible);
    const double n_add = (c.n_refine - 1.0) * static_cast<double>(cand.refine.size());
    const double n_rem = (c.n_coarsen - 1.0) * static_cast<double>(cand.coarsen.size());
    const double n_mod = std::min(n_add, n_rem);
    Marks m;
    if (n_mod <= 0.0) return m;
    const auto n_ref = static_cast<std::size_t>(round_count(n_mod / (c.n_refine - 1.0)));
    const auto n_coa = static_cast<std::size_t>(round_count(n_mod / (c.n_coarsen - 1.0)));
    const std::vector<Index> ref_order = order_by(elem_norms, cand.refine, true);
    std::size_t nr = std::min(n_ref, ref_order.size());
    std::size_t nc = std::min(n_coa, cand.coarsen.size());

    if (!refine_gain.empty()) {
        const auto gain = [&](std::size_t k) { return refine_gain[static_cast<std::size_t>(ref_order[k])]; };
        const auto loss = [&](std::size_t k) {
            return static_cast<Index>(patches[static_cast<std::size_t>(cand.coarsen[k])].size()) - 1;
        };
        Index diff = 0;
        for (std::size_t k = 0; k < nr; ++k) diff += gain(k);
        for (std::size_t k = 0; k < nc; ++k) diff -= loss(k);
        // Each step strictly shrinks |diff|, so the loop terminates.
        while (diff != 0) {
            const Index mag = std::abs(diff);
            if (diff > 0) {
                if (nc < cand.coarsen.size() && std::abs(diff - loss(nc)) < mag) {
                    diff -= loss(nc++);
                } else if (nr > 0 && std::abs(diff - gain(nr - 1)) < mag) {
                    diff -= gain(--nr);
                } else {
                    break;
                }
            } else {
                if (nr < ref_order.size() && std::abs(diff + gain(nr)) < mag) {
                    diff += gain(nr++);
                } else if (nc > 0 && std::abs(diff + loss(nc - 1)) < mag) {
                    diff += loss(--nc);
                } else {
                    break;
                }
            }
        }
    }
    m.refine.assign(ref_order.begin(), ref_order.begin() + static_cast<std::ptrdiff_t>(nr));
    std::sort(m.refine.begin(), m.refine.end());
    m.coarsen.assign(cand.coarsen.begin(), cand.coarsen.begin() + static_cast<std::ptrdiff_t>(nc));
    return m;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t iter) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (iter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct Analysis {
    std::vector<double> norms;
    ErrorReport report;
};

Analysis analyse(const PolyMesh& mesh, const MaterialParams& material, const Loads& loads) {
    const SolutionField u = assemble_and_solve(mesh, material, loads);
    const Eigen::Matrix3d D = constitutive_matrix(material);
    Analysis a;
    a.report = estimate_error(mesh, element_stresses(mesh, u, D), D);
    a.norms = a.report.element_norms();
    return a;
}

std::vector<std::vector<Index>> patch_table(const PolyMesh& mesh, const NodeIncidence& inc) {
    std::vector<std::vector<Index>> p(static_cast<std::size_t>(mesh.num_nodes()));
    for (Index v = 0; v < mesh.num_nodes(); ++v) p[static_cast<std::size_t>(v)] = inc.of(v);
    return p;
}

}  // namespace

AdaptResult run_adaptation(PolyMesh mesh, const MaterialParams& material, const Loads& loads, const AdaptTarget& target,
                           MeshType mode, std::uint64_t rng_seed, const AdaptCaps& caps, const AdaptObserver& observer) {
    target.validate();
    if (mesh.num_elements() < 1) throw PreconditionError("initial mesh is empty");
    const PlanningConstants constants = PlanningConstants::for_mesh(mode);
    const bool error_run = target.kind == TargetKind::RelError;
    const double band = 0.01;

    AdaptResult result;
    double working = target.value;
    std::size_t window_start = 0;
    double accepted_gap = -1.0;
    double best_gap = std::numeric_limits<double>::infinity();
    int stagnant = 0;

    std::string phase = "initial";
    Index n_refined = 0, n_coarsened = 0;
    std::vector<Index> refined_ids, coarsened_nodes;
    Analysis analysis;
    bool reuse = false;

    for (int iter = 0;; ++iter) {
        if (!reuse) analysis = analyse(mesh, material, loads);
        const GlobalError& g = analysis.report.global;

        IterationRecord rec;
        rec.iter = iter;
        rec.phase = phase;
        rec.n_el = mesh.num_elements();
        rec.n_v = mesh.num_nodes();
        rec.rel_error = 100.0 * g.rel_error;
        rec.energy_error = g.energy_error;
        rec.energy = g.energy;
        rec.n_refined = n_refined;
        rec.n_coarsened = n_coarsened;
        rec.refined_ids = refined_ids;
        rec.coarsened_nodes = coarsened_nodes;
        rec.elem_norms = analysis.norms;

        NodeIncidence inc(mesh);
        const auto patches = patch_table(mesh, inc);
        std::vector<double> predictions = analysis.report.patch_prediction;
        for (double& x : predictions) x *= kPredictionInflation;
        const Eligibility eligible = [&](Index v) { return patch_eligible(mesh, inc, v); };
        Marks marks;
        bool done = false;

        if (error_run) {
            rec.working_target = working;
            result.history.push_back(rec);
            const std::span<const IterationRecord> window(result.history.data() + window_start,
                                                          result.history.size() - window_start);
            if (check_stability(window, mode)) {
                if (check_accuracy(rec.rel_error, target.value, mode)) {
                    done = true;
                } else {
                    working = update_working_target(working, rec.rel_error, target.value);
                    if (!(working > 0.0)) working = target.value * 0.5;
                    window_start = result.history.size() - 1;
                }
            }
            if (!done) {
                const ErrorBounds bounds = element_error_bounds(working / 100.0 * g.energy, rec.n_el);
                marks = mark_for_error_target(analysis.norms, predictions, patches, bounds, eligible);
                phase = "error";
            }
        } else {
            const bool by_nodes = target.kind == TargetKind::Nodes;
            Index el_target = static_cast<Index>(target.value);
            if (by_nodes) {
                // Table 1 ratio model, rescaled by the ratio observed on the current mesh.
                const double nv = static_cast<double>(rec.n_v), tv = target.value;
                const double model_now = NodeModel::table(mode, nv).ratio(nv);
                const double model_tgt = NodeModel::table(mode, tv).ratio(tv);
                el_target = std::max<Index>(
                    1, round_count(static_cast<double>(rec.n_el) * (tv / nv) * model_now / model_tgt));
            }
            rec.working_target = static_cast<double>(el_target);
            result.history.push_back(rec);

            const double count = by_nodes ? static_cast<double>(rec.n_v) : static_cast<double>(rec.n_el);
            const double gap = std::abs(count - target.value);
            bool settled = gap <= band * target.value || (accepted_gap >= 0.0 && gap <= accepted_gap);
            if (!settled) {
                if (phase != "phase1") {
                    best_gap = std::numeric_limits<double>::infinity();
                    stagnant = 0;
                    accepted_gap = -1.0;
                }
                if (gap < best_gap) {
                    best_gap = gap;
                    stagnant = 0;
                } else if (++stagnant >= 3) {
                    accepted_gap = gap;
                    settled = true;
                }
            }
            if (!settled) {
                marks = plan_resource_phase1(rec.n_el, el_target, constants, analysis.norms,
                                             predictions, patches, eligible);
                phase = "phase1";
            } else if (phase == "phase2" && check_stability(result.history, mode)) {
                done = true;
            } else {
                const ErrorBounds bounds = element_error_bounds(g.energy_error, rec.n_el);
                std::vector<Index> gains(static_cast<std::size_t>(mesh.num_elements()));
                for (Index e = 0; e < mesh.num_elements(); ++e)
                    gains[static_cast<std::size_t>(e)] = refine_gain(mesh, e, mode);
                marks = plan_resource_phase2(analysis.norms, predictions, patches, bounds, constants,
                                             eligible, gains);
                phase = "phase2";
            }
        }

        if (caps.keep_snapshots) result.snapshots.push_back(mesh);
        if (observer) observer(result.history.back(), mesh);
        if (done) {
            result.converged = true;
            break;
        }
        if (iter >= caps.max_iter) {
            result.diagnostic = "iteration cap of " + std::to_string(caps.max_iter) + " reached";
            break;
        }
        if (rec.n_el > caps.max_elements) {
            result.diagnostic = "element cap of " + std::to_string(caps.max_elements) + " exceeded";
            break;
        }

        const CoarsenBatchResult cb = coarsen_batch(mesh, inc, marks.coarsen);
        const RefineBatchResult rb = refine_batch(mesh, inc, marks.refine, mode, mix_seed(rng_seed, static_cast<std::uint64_t>(iter)));
        compact(mesh);
        n_refined = rb.refined;
        n_coarsened = cb.coarsened;
        refined_ids = marks.refine;
        coarsened_nodes = marks.coarsen;
        reuse = n_refined == 0 && n_coarsened == 0;
    }
    result.mesh = std::move(mesh);
    return result;
}

}  // namespace vemadapt
