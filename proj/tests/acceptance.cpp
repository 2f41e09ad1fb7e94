#include "support.hpp"

#include "vemadapt/adapt.hpp"
#include "vemadapt/bench.hpp"
#include "vemadapt/error_estimation.hpp"
#include "vemadapt/mesh_gen.hpp"
#include "vemadapt/outputs.hpp"
#include "vemadapt/vem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace vemadapt;
using namespace vemadapt::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    int failures = 0;

    void report(int id, bool pass, const std::string& detail) {
        std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const MaterialParams kMaterial = MaterialParams::make(1.0, 0.3, Regime::PlaneStrain);

// Invariant tally shared by every adaptive run.
struct InvariantLog {
    long checks = 0;
    long conformity_failures = 0;
    long area_failures = 0;
    std::string first;

    void check(const PolyMesh& m, const std::string& where) {
        ++checks;
        const auto v = check_conformity(m);
        if (!v.empty()) {
            ++conformity_failures;
            if (first.empty()) first = where + ": " + describe(v);
        }
        if (relative_area_error(m) > 1e-9) {
            ++area_failures;
            if (first.empty()) first = where + ": area drift " + std::to_string(relative_area_error(m));
        }
    }

    AdaptObserver observer(const std::string& where) {
        return [this, where](const IterationRecord& r, const PolyMesh& m) { check(m, where + " iter " + std::to_string(r.iter)); };
    }
};

InvariantLog g_invariants;

// ---------------------------------------------------------------- 1
void patch_tests(Verdict& v) {
    const auto t0 = Clock::now();
    const Benchmark b = build_patch_test();
    const Eigen::Matrix3d D = constitutive_matrix(kMaterial);
    double worst_rel = 0.0, worst_nodal = 0.0;
    int meshes = 0;
    auto run = [&](const PolyMesh& m) {
        const SolutionField u = assemble_and_solve(m, kMaterial, b.loads);
        const ErrorReport rep = estimate_error(m, element_stresses(m, u, D), D);
        worst_rel = std::max(worst_rel, rep.global.rel_error);
        for (Index n = 0; n < m.num_nodes(); ++n) {
            const Point2& p = m.nodes[static_cast<std::size_t>(n)];
            const Eigen::Vector2d exact(0.3 * p.x() + 0.1 * p.y(), 0.2 * p.x() - 0.4 * p.y());
            worst_nodal = std::max(worst_nodal, (u.at(n) - exact).cwiseAbs().maxCoeff());
        }
        ++meshes;
    };
    for (Index nx = 2; nx <= 16; ++nx) run(generate_mesh(b.domain, nx * nx, MeshType::Structured, 0));
    for (Index n : {50, 100, 200, 350, 500})
        for (std::uint64_t seed = 1; seed <= 5; ++seed) run(generate_mesh(b.domain, n, MeshType::Voronoi, seed));
    const double t = seconds_since(t0);
    v.report(1, worst_rel <= 1e-10 && worst_nodal <= 1e-10 && t < 5.0,
             fmt("%d meshes, max rel error %.2e, max nodal error %.2e, %.2f s", meshes, worst_rel, worst_nodal, t));
}

// ---------------------------------------------------------------- 2
Eigen::Matrix<double, 6, 6> cst_stiffness(const Point2& p1, const Point2& p2, const Point2& p3, const Eigen::Matrix3d& D) {
    const double x1 = p1.x(), y1 = p1.y(), x2 = p2.x(), y2 = p2.y(), x3 = p3.x(), y3 = p3.y();
    const double twoA = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    Eigen::Matrix<double, 3, 6> B;
    B << y2 - y3, 0, y3 - y1, 0, y1 - y2, 0,
         0, x3 - x2, 0, x1 - x3, 0, x2 - x1,
         x3 - x2, y2 - y3, x1 - x3, y3 - y1, x2 - x1, y1 - y2;
    B /= twoA;
    return 0.5 * twoA * B.transpose() * D * B;
}

void cst_oracle(Verdict& v) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    const Eigen::Matrix3d D = constitutive_matrix(kMaterial);
    double worst = 0.0;
    int done = 0;
    while (done < 20) {
        std::vector<Point2> tri{{coord(rng), coord(rng)}, {coord(rng), coord(rng)}, {coord(rng), coord(rng)}};
        const double a2 = (tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() - (tri[2] - tri[0]).x() * (tri[1] - tri[0]).y();
        if (std::abs(a2) < 0.05) continue;
        if (a2 < 0) std::swap(tri[1], tri[2]);
        const ElementStiffness k = element_matrices<double>(std::span<const Point2>(tri), D, kMaterial.mu);
        worst = std::max(worst, (k.K_c - cst_stiffness(tri[0], tri[1], tri[2], D)).cwiseAbs().maxCoeff());
        ++done;
    }
    v.report(2, worst <= 1e-12, fmt("20 random triangles, max |K_c - K_cst| = %.2e", worst));
}

// ---------------------------------------------------------------- 3
// u = (sin(pi x) sin(pi y), x y^2)
struct Manufactured {
    double lambda, mu;
    Eigen::Vector2d u(const Point2& p) const {
        const double pi = std::numbers::pi;
        return {std::sin(pi * p.x()) * std::sin(pi * p.y()), p.x() * p.y() * p.y()};
    }
    Eigen::Vector3d strain(const Point2& p) const {
        const double pi = std::numbers::pi, x = p.x(), y = p.y();
        return {pi * std::cos(pi * x) * std::sin(pi * y), 2 * x * y, pi * std::sin(pi * x) * std::cos(pi * y) + y * y};
    }
    // Body force balancing div(sigma) + f = 0.
    Eigen::Vector2d body(const Point2& p) const {
        const double pi = std::numbers::pi, x = p.x(), y = p.y();
        const double phi = std::sin(pi * x) * std::sin(pi * y);
        const double lap_ux = -2 * pi * pi * phi, lap_uy = 2 * x;
        const double ddiv_x = -pi * pi * phi + 2 * y;
        const double ddiv_y = pi * pi * std::cos(pi * x) * std::cos(pi * y) + 2 * x;
        return {-(mu * lap_ux + (lambda + mu) * ddiv_x), -(mu * lap_uy + (lambda + mu) * ddiv_y)};
    }
};

// sqrt(1/2 int (eps - eps_h)^T D (eps - eps_h)) by a midpoint rule on the centroid fan.
double exact_energy_error(const PolyMesh& m, const SolutionField& u, const Manufactured& f, const Eigen::Matrix3d& D) {
    double sum = 0.0;
    for (Index e = 0; e < m.num_elements(); ++e) {
        const auto poly = m.polygon(e);
        const Mat3X<double> B = projection_operator(m, e);
        const auto& cyc = m.elements[static_cast<std::size_t>(e)];
        Eigen::VectorXd d(2 * cyc.size());
        for (std::size_t a = 0; a < cyc.size(); ++a) d.segment<2>(static_cast<Eigen::Index>(2 * a)) = u.at(cyc[a]);
        const Eigen::Vector3d eps_h = B * d;
        const Point2 c = element_centroid(m, e);
        for (std::size_t a = 0; a < poly.size(); ++a) {
            const Point2& p = poly[a];
            const Point2& q = poly[(a + 1) % poly.size()];
            const double area = 0.5 * std::abs((p - c).x() * (q - c).y() - (q - c).x() * (p - c).y());
            for (const Point2& s : {Point2(0.5 * (p + c)), Point2(0.5 * (q + c)), Point2(0.5 * (p + q))}) {
                const Eigen::Vector3d r = f.strain(s) - eps_h;
                sum += area / 3.0 * r.dot(D * r);
            }
        }
    }
    return std::sqrt(0.5 * sum);
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void convergence_rate(Verdict& v) {
    const auto t0 = Clock::now();
    const Manufactured f{kMaterial.lambda, kMaterial.mu};
    const Eigen::Matrix3d D = constitutive_matrix(kMaterial);
    Loads loads;
    loads.body = [f](const Point2& p) { return f.body(p); };
    loads.dirichlet = [f](const Point2& p) { return f.u(p); };
    std::vector<double> h, err, est;
    for (Index nx : {8, 16, 32, 64}) {
        const PolyMesh m = square_grid(nx);
        const SolutionField u = assemble_and_solve(m, kMaterial, loads);
        h.push_back(1.0 / static_cast<double>(nx));
        err.push_back(exact_energy_error(m, u, f, D));
        est.push_back(estimate_error(m, element_stresses(m, u, D), D).global.energy_error);
    }
    const double rate = fitted_slope(h, err);
    const double est_rate = fitted_slope(h, est);
    const double t = seconds_since(t0);
    std::string pairs;
    for (std::size_t i = 1; i < err.size(); ++i) pairs += fmt(" %.3f", std::log2(err[i - 1] / err[i]));
    v.report(3, std::abs(rate - 1.0) <= 0.15 && t < 60.0,
             fmt("energy-error rate %.3f (pairwise%s), estimator rate %.3f, %.2f s", rate, pairs.c_str(), est_rate, t));
}

// ---------------------------------------------------------------- 4-8, 10
struct GridRun {
    MeshType mode;
    double target;
    Index n0;
    AdaptResult result;
};

std::vector<GridRun> l_domain_grid(Verdict& v) {
    const auto t0 = Clock::now();
    const Benchmark b = build_l_domain();
    std::vector<GridRun> runs;
    bool pass = true;
    for (MeshType mode : {MeshType::Structured, MeshType::Voronoi}) {
        const double tol = mode == MeshType::Structured ? 0.01 : 0.02;
        for (double target : {4.0, 3.0, 2.0}) {
            for (Index n0 : {100, 1000, 5000}) {
                const std::string name = fmt("%s %.0f%% n0=%ld", to_string(mode), target, static_cast<long>(n0));
                AdaptResult r = run_adaptation(generate_mesh(b.domain, n0, mode, 42), kMaterial, b.loads,
                                               AdaptTarget::rel_error(target), mode, 42, {}, g_invariants.observer(name));
                const IterationRecord& last = r.history.back();
                const bool ok = r.converged && std::abs(last.rel_error - target) <= tol * target;
                pass = pass && ok;
                std::printf("    %-26s %s rel=%.4f%% iters=%ld n_el=%ld n_v=%ld\n", name.c_str(), ok ? "ok  " : "MISS",
                            last.rel_error, static_cast<long>(last.iter), static_cast<long>(last.n_el),
                            static_cast<long>(last.n_v));
                std::fflush(stdout);
                runs.push_back({mode, target, n0, std::move(r)});
            }
        }
    }
    const double t = seconds_since(t0);
    v.report(4, pass && t < 600.0, fmt("18 runs, %.1f s", t));
    return runs;
}

void quasi_optimality(Verdict& v, const std::vector<GridRun>& runs) {
    bool pass = true;
    int ok_runs = 0;
    for (const auto& g : runs) {
        const IterationRecord& last = g.result.history.back();
        const ElementErrorStats s = element_error_stats(last.elem_norms);
        const double e_loc = g.target / 100.0 * last.energy / std::sqrt(static_cast<double>(last.n_el));
        const double lo = g.mode == MeshType::Voronoi ? 0.4 : 0.5;
        const double hi_r = s.max_trim5 / e_loc, lo_r = s.min_trim5 / e_loc;
        const double mm = std::abs(s.mean - s.median) / s.median;
        const bool ok = hi_r <= 2.0 && lo_r >= lo && mm <= 0.15;
        ok_runs += ok;
        pass = pass && ok;
        std::printf("    %-10s %.0f%% n0=%-5ld %s trimmed max %.3f, min %.3f (>= %.1f), |mean-median|/median %.3f\n",
                    to_string(g.mode), g.target, static_cast<long>(g.n0), ok ? "ok  " : "MISS", hi_r, lo_r, lo, mm);
    }
    v.report(5, pass, fmt("%d of %zu final meshes within bounds (ratios to e_loc)", ok_runs, runs.size()));
}

void mesh_independence(Verdict& v, const std::vector<GridRun>& runs) {
    std::map<std::pair<int, double>, std::vector<Index>> groups;
    for (const auto& g : runs) groups[{static_cast<int>(g.mode), g.target}].push_back(g.result.history.back().n_v);
    bool pass = true;
    std::string detail;
    for (const auto& [key, nv] : groups) {
        const auto [lo, hi] = std::minmax_element(nv.begin(), nv.end());
        const double spread = static_cast<double>(*hi - *lo) / static_cast<double>(*lo);
        pass = pass && spread <= 0.10;
        detail += fmt(" %s %.0f%%: %.1f%%;", to_string(static_cast<MeshType>(key.first)), key.second, 100 * spread);
    }
    v.report(6, pass, "node-count spread" + detail);
}

// Uniform meshes of increasing density versus the adapted finals.
void adaptive_vs_uniform(Verdict& v, const std::vector<GridRun>& runs) {
    const Benchmark b = build_l_domain();
    const Eigen::Matrix3d D = constitutive_matrix(kMaterial);
    bool pass = true;
    std::string detail;
    for (MeshType mode : {MeshType::Structured, MeshType::Voronoi}) {
        std::vector<double> nv_u, err_u;
        for (Index n : {100, 400, 1600, 6400}) {
            const PolyMesh m = generate_mesh(b.domain, n, mode, 42);
            const SolutionField u = assemble_and_solve(m, kMaterial, b.loads);
            nv_u.push_back(static_cast<double>(m.num_nodes()));
            err_u.push_back(estimate_error(m, element_stresses(m, u, D), D).global.energy_error);
        }
        std::map<double, std::pair<double, double>> finals;
        for (const auto& g : runs) {
            if (g.mode != mode) continue;
            const IterationRecord& last = g.result.history.back();
            auto& acc = finals[g.target];
            acc.first += static_cast<double>(last.n_v) / 3.0;
            acc.second += last.energy_error / 3.0;
        }
        std::vector<double> nv_a, err_a;
        for (const auto& [t, p] : finals) {
            nv_a.push_back(p.first);
            err_a.push_back(p.second);
        }
        const double sa = fitted_slope(nv_a, err_a), su = fitted_slope(nv_u, err_u);
        pass = pass && sa < su;
        detail += fmt(" %s adaptive %.3f vs uniform %.3f;", to_string(mode), sa, su);
    }
    v.report(8, pass, "log-log slope of energy error vs n_v:" + detail);
}

// ---------------------------------------------------------------- 7
struct PhaseShape {
    bool phase1_monotone = true;
    bool phase2_stable = true;
    bool phase2_improves = true;
    bool has_phase2 = false;
};

// Phase 1: distance to the target never grows. Phase 2: count stays within
// 5% of the target and the final error does not exceed the phase-2 entry error.
PhaseShape phase_shape(const std::vector<IterationRecord>& h, bool by_nodes, double target) {
    PhaseShape s;
    auto count = [&](const IterationRecord& r) { return static_cast<double>(by_nodes ? r.n_v : r.n_el); };
    double prev_gap = std::abs(count(h.front()) - target);
    std::size_t entry = 0;
    for (std::size_t i = 1; i < h.size(); ++i) {
        const double gap = std::abs(count(h[i]) - target);
        if (h[i].phase == "phase1") {
            s.phase1_monotone = s.phase1_monotone && gap <= prev_gap;
            prev_gap = gap;
        } else if (h[i].phase == "phase2") {
            if (!s.has_phase2) entry = i - 1;
            s.has_phase2 = true;
            s.phase2_stable = s.phase2_stable && gap <= 0.05 * target;
        }
    }
    if (s.has_phase2) s.phase2_improves = h.back().rel_error <= h[entry].rel_error;
    return s;
}

void resource_targets(Verdict& v) {
    const Benchmark b = build_l_domain();
    bool pass = true;
    std::string detail;
    auto run = [&](MeshType mode, AdaptTarget target, double tol) {
        const bool by_nodes = target.kind == TargetKind::Nodes;
        const std::string name = fmt("%s %s=%.0f", to_string(mode), by_nodes ? "nodes" : "elements", target.value);
        const AdaptResult r = run_adaptation(generate_mesh(b.domain, 100, mode, 42), kMaterial, b.loads, target, mode, 42, {},
                                             g_invariants.observer(name));
        const IterationRecord& last = r.history.back();
        const double got = static_cast<double>(by_nodes ? last.n_v : last.n_el);
        const double dev = std::abs(got - target.value) / target.value;
        const PhaseShape s = phase_shape(r.history, by_nodes, target.value);
        const bool ok = r.converged && dev <= tol && s.has_phase2 && s.phase1_monotone && s.phase2_stable && s.phase2_improves;
        pass = pass && ok;
        std::printf("    %-28s %s final %.0f (%.2f%%), iters %ld, phase1 monotone %d, phase2 count-stable %d, error %.3f%% -> %.3f%%\n",
                    name.c_str(), ok ? "ok  " : "MISS", got, 100 * dev, static_cast<long>(last.iter), s.phase1_monotone,
                    s.phase2_stable, r.history.front().rel_error, last.rel_error);
        std::fflush(stdout);
    };
    for (Index n : {250, 1000, 8000}) run(MeshType::Structured, AdaptTarget::elements(n), 0.01);
    for (Index n : {1000, 2000, 8000}) run(MeshType::Voronoi, AdaptTarget::nodes(n), 0.02);
    v.report(7, pass, "element targets within 1%, node targets within 2%, phase structure as described");
}

// ---------------------------------------------------------------- 9
void punch_cycles(Verdict& v) {
    const auto t0 = Clock::now();
    const PolyMesh initial = generate_mesh(build_punch(1).domain, 1000, MeshType::Structured, 42);
    const auto results = run_punch_cycles(initial, kMaterial, AdaptTarget::rel_error(5.0), MeshType::Structured, 42, 6, {},
                                          [](int cycle, const IterationRecord& r, const PolyMesh& m) {
                                              g_invariants.check(m, fmt("punch cycle %d iter %ld", cycle, static_cast<long>(r.iter)));
                                          });
    bool pass = results.size() == 6;
    std::string detail;
    for (std::size_t c = 0; c < results.size(); ++c) {
        const AdaptResult& r = results[c];
        const PolyMesh& m = r.mesh;
        Index smallest = 0;
        for (Index e = 1; e < m.num_elements(); ++e)
            if (element_area(m, e) < element_area(m, smallest)) smallest = e;
        const double d = (element_centroid(m, smallest) - active_punch_centre(static_cast<int>(c) + 1)).norm();
        const double rel = r.history.back().rel_error;
        pass = pass && r.converged && std::abs(rel - 5.0) <= 0.05 && d <= 0.5;
        detail += fmt(" c%zu %.3f%%/%.2fm", c + 1, rel, d);
    }
    const double t = seconds_since(t0);
    pass = pass && t < 600.0;
    v.report(9, pass, "rel error / smallest-element distance:" + detail + fmt(", %.1f s", t));
}

// ---------------------------------------------------------------- 10
void invariants_and_determinism(Verdict& v) {
    const Benchmark b = build_l_domain();
    bool same = true;
    for (MeshType mode : {MeshType::Structured, MeshType::Voronoi}) {
        std::string csv[2];
        for (auto& c : csv)
            c = history_csv(run_adaptation(generate_mesh(b.domain, 100, mode, 7), kMaterial, b.loads, AdaptTarget::rel_error(3.0),
                                           mode, 7)
                                .history);
        same = same && csv[0] == csv[1];
    }
    std::string punch[2];
    for (auto& p : punch) {
        std::ostringstream os;
        for (const auto& r : run_punch_cycles(generate_mesh(build_punch(1).domain, 200, MeshType::Voronoi, 3), kMaterial,
                                              AdaptTarget::rel_error(8.0), MeshType::Voronoi, 3, 2))
            os << history_csv(r.history);
        p = os.str();
    }
    same = same && punch[0] == punch[1];
    const bool pass = g_invariants.conformity_failures == 0 && g_invariants.area_failures == 0 && same;
    v.report(10, pass,
             fmt("%ld meshes checked, %ld conformity and %ld area failures, repeat runs %s", g_invariants.checks,
                 g_invariants.conformity_failures, g_invariants.area_failures, same ? "bit-identical" : "DIFFER") +
                 (g_invariants.first.empty() ? "" : "; first: " + g_invariants.first));
}

}  // namespace

int main() {
    Verdict v;
    const auto t0 = Clock::now();
    patch_tests(v);
    cst_oracle(v);
    convergence_rate(v);
    const std::vector<GridRun> runs = l_domain_grid(v);
    quasi_optimality(v, runs);
    mesh_independence(v, runs);
    resource_targets(v);
    adaptive_vs_uniform(v, runs);
    punch_cycles(v);
    invariants_and_determinism(v);
    std::printf("%d of 10 criteria failed, %.1f s total\n", v.failures, seconds_since(t0));
    return v.failures == 0 ? 0 : 1;
}
