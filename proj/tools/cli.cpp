#include "cli.hpp"

#include "vemadapt/adapt.hpp"
#include "vemadapt/bench.hpp"
#include "vemadapt/error_estimation.hpp"
#include "vemadapt/mesh_gen.hpp"
#include "vemadapt/outputs.hpp"
#include "vemadapt/vem.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>

namespace vemadapt {

namespace {

struct Options {
    std::string bench = "l-domain";
    std::string mesh = "structured";
    Index initial_elements = 100;
    std::optional<double> target_error;
    std::optional<Index> target_elements;
    std::optional<Index> target_nodes;
    int cycles = 1;
    std::uint64_t seed = 42;
    int max_iter = 50;
    std::string regime = "plane-strain";
    std::string out_dir = "out";
    std::string svg = "on";
};

void add_common(CLI::App& app, Options& o, bool with_targets) {
    app.add_option("--bench", o.bench, "benchmark problem")
        ->check(CLI::IsMember({"l-domain", "punch", "patch-test", "uniaxial"}));
    app.add_option("--mesh", o.mesh, "mesh type")->check(CLI::IsMember({"structured", "voronoi"}));
    app.add_option("--initial-elements", o.initial_elements, "element count of the generated mesh")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--regime", o.regime, "plane regime")->check(CLI::IsMember({"plane-strain", "plane-stress"}));
    app.add_option("--out-dir", o.out_dir, "output directory");
    app.add_option("--svg", o.svg, "write SVG snapshots")->check(CLI::IsMember({"on", "off"}));
    if (!with_targets) return;
    app.add_option("--target-error", o.target_error, "target relative energy error, percent");
    app.add_option("--target-elements", o.target_elements, "target element count");
    app.add_option("--target-nodes", o.target_nodes, "target node count");
    app.add_option("--cycles", o.cycles, "punch load cycles")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", o.max_iter, "remeshing iteration cap")->check(CLI::NonNegativeNumber);
}

std::optional<AdaptTarget> parse_target(const Options& o) {
    const int given = static_cast<int>(o.target_error.has_value()) + static_cast<int>(o.target_elements.has_value()) +
                      static_cast<int>(o.target_nodes.has_value());
    if (given > 1) throw UsageError("--target-error, --target-elements and --target-nodes are mutually exclusive");
    if (o.target_error) return AdaptTarget::rel_error(*o.target_error);
    if (o.target_elements) return AdaptTarget::elements(*o.target_elements);
    if (o.target_nodes) return AdaptTarget::nodes(*o.target_nodes);
    return std::nullopt;
}

AdaptTarget require_target(const Options& o) {
    auto t = parse_target(o);
    if (!t) throw UsageError("one of --target-error, --target-elements or --target-nodes is required");
    return *t;
}

MeshType mesh_type(const Options& o) { return o.mesh == "voronoi" ? MeshType::Voronoi : MeshType::Structured; }

MaterialParams material(const Options& o) { return MaterialParams::make(1.0, 0.3, regime_from_string(o.regime)); }

PolyMesh initial_mesh(const Options& o, const Benchmark& b) {
    spdlog::info("generating {} mesh with {} elements for {}", o.mesh, o.initial_elements, o.bench);
    return generate_mesh(b.domain, o.initial_elements, mesh_type(o), o.seed);
}

void configure_logging() {
    auto logger = spdlog::get("vem_adapt");
    if (!logger) {
        logger = spdlog::stderr_color_mt("vem_adapt");
        logger->set_pattern("[%l] %v");
    }
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("VEM_ADAPT_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info") spdlog::warn("VEM_ADAPT_LOG='{}' not recognised, using info", level);
    }
}

void log_record(const IterationRecord& r) {
    spdlog::info("iter {:3d} {:7s} n_el={} n_v={} rel_error={:.4f}% working={:.4g} refined={} coarsened={}", r.iter, r.phase,
                 r.n_el, r.n_v, r.rel_error, r.working_target, r.n_refined, r.n_coarsened);
    if (spdlog::should_log(spdlog::level::debug)) {
        const ElementErrorStats s = element_error_stats(r.elem_norms);
        spdlog::debug("  element error trim5 max={:.6g} min={:.6g} mean={:.6g} median={:.6g}", s.max_trim5, s.min_trim5,
                      s.mean, s.median);
    }
}

IterationRecord analyse_once(const PolyMesh& mesh, const MaterialParams& mat, const Loads& loads, SolutionField* out) {
    const SolutionField u = assemble_and_solve(mesh, mat, loads);
    const Eigen::Matrix3d D = constitutive_matrix(mat);
    const ErrorReport rep = estimate_error(mesh, element_stresses(mesh, u, D), D);
    IterationRecord r;
    r.phase = "initial";
    r.n_el = mesh.num_elements();
    r.n_v = mesh.num_nodes();
    r.rel_error = 100.0 * rep.global.rel_error;
    r.energy_error = rep.global.energy_error;
    r.energy = rep.global.energy;
    r.elem_norms = rep.element_norms();
    if (out) *out = u;
    return r;
}

int cmd_generate(const Options& o) {
    const Benchmark b = build_benchmark(bench_from_string(o.bench));
    const PolyMesh mesh = initial_mesh(o, b);
    const OutputWriter w(o.out_dir, o.svg == "on");
    IterationRecord r;
    w.write_snapshot(r, mesh);
    spdlog::info("wrote {} elements, {} nodes to {}", mesh.num_elements(), mesh.num_nodes(), o.out_dir);
    return kExitConverged;
}

int cmd_solve(const Options& o) {
    const Benchmark b = build_benchmark(bench_from_string(o.bench));
    const PolyMesh mesh = initial_mesh(o, b);
    SolutionField u;
    const IterationRecord r = analyse_once(mesh, material(o), b.loads, &u);
    log_record(r);
    const OutputWriter w(o.out_dir, o.svg == "on");
    w.write_snapshot(r, mesh);
    w.write_history({r});
    std::string csv = "node,x,y,ux,uy\n";
    for (Index v = 0; v < mesh.num_nodes(); ++v) {
        const Point2& p = mesh.nodes[static_cast<std::size_t>(v)];
        const Eigen::Vector2d d = u.at(v);
        csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", v, p.x(), p.y(), d.x(), d.y());
    }
    w.write_text("displacement.csv", csv);
    return kExitConverged;
}

int finish(const AdaptResult& r) {
    if (r.converged) {
        spdlog::info("converged after {} iterations", r.history.back().iter);
        return kExitConverged;
    }
    spdlog::error("not converged: {}", r.diagnostic);
    return kExitCapReached;
}

int run_single(const Options& o, const AdaptTarget& target) {
    const Benchmark b = build_benchmark(bench_from_string(o.bench));
    PolyMesh mesh = initial_mesh(o, b);
    const OutputWriter w(o.out_dir, o.svg == "on");
    AdaptCaps caps;
    caps.max_iter = o.max_iter;
    const AdaptResult r = run_adaptation(std::move(mesh), material(o), b.loads, target, mesh_type(o), o.seed, caps,
                                         [&](const IterationRecord& rec, const PolyMesh& m) {
                                             log_record(rec);
                                             w.write_snapshot(rec, m);
                                         });
    w.write_history(r.history);
    return finish(r);
}

int run_punch(const Options& o, const AdaptTarget& target) {
    const Benchmark b1 = build_punch(1);
    PolyMesh mesh = initial_mesh(o, b1);
    const std::filesystem::path root(o.out_dir);
    std::vector<OutputWriter> writers;
    for (int c = 1; c <= o.cycles; ++c) writers.emplace_back((root / fmt::format("cycle_{:02d}", c)).string(), o.svg == "on");
    AdaptCaps caps;
    caps.max_iter = o.max_iter;
    const auto results = run_punch_cycles(std::move(mesh), material(o), target, mesh_type(o), o.seed, o.cycles, caps,
                                          [&](int c, const IterationRecord& rec, const PolyMesh& m) {
                                              if (rec.iter == 0) spdlog::info("punch cycle {}", c);
                                              log_record(rec);
                                              writers[static_cast<std::size_t>(c - 1)].write_snapshot(rec, m);
                                          });
    int code = kExitConverged;
    for (std::size_t c = 0; c < results.size(); ++c) {
        writers[c].write_history(results[c].history);
        if (finish(results[c]) != kExitConverged) code = kExitCapReached;
    }
    return code;
}

int cmd_adapt(const Options& o) {
    const AdaptTarget target = require_target(o);
    if (o.bench == "punch") return run_punch(o, target);
    return run_single(o, target);
}

int cmd_bench(const Options& o) {
    const auto target = parse_target(o);
    if (target) return o.bench == "punch" ? run_punch(o, *target) : run_single(o, *target);
    if (o.bench == "punch" || o.bench == "l-domain")
        throw UsageError("benchmark '" + o.bench + "' needs a target");
    return cmd_solve(o);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    configure_logging();
    CLI::App app{"Adaptive virtual element remeshing for 2D linear elasticity"};
    app.require_subcommand(1);
    Options o;
    auto* gen = app.add_subcommand("generate", "generate an initial mesh");
    add_common(*gen, o, false);
    auto* solve = app.add_subcommand("solve", "solve and estimate the error on an initial mesh");
    add_common(*solve, o, false);
    auto* adapt = app.add_subcommand("adapt", "run the adaptive remeshing loop");
    add_common(*adapt, o, true);
    auto* bench = app.add_subcommand("bench", "run a benchmark problem");
    add_common(*bench, o, true);
    std::string bench_name;
    bench->add_option("name", bench_name, "benchmark problem (alternative to --bench)")
        ->check(CLI::IsMember({"l-domain", "punch", "patch-test", "uniaxial"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }
    if (!bench_name.empty()) o.bench = bench_name;

    try {
        if (*gen) return cmd_generate(o);
        if (*solve) return cmd_solve(o);
        if (*adapt) return cmd_adapt(o);
        return cmd_bench(o);
    } catch (const UsageError& e) {
        spdlog::error("usage: {}", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
}

}  // namespace vemadapt
