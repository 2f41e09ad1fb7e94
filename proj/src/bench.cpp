#include "vemadapt/bench.hpp"

namespace vemadapt {

namespace {

BoundarySegment seg(Point2 a, Point2 b, BoundaryTag tag, std::optional<double> ux = {}, std::optional<double> uy = {}) {
    BoundarySegment s;
    s.a = a;
    s.b = b;
    s.tag = tag;
    s.value = {ux, uy};
    return s;
}

}  // namespace

const char* to_string(BenchName b) {
    switch (b) {
        case BenchName::LDomain: return "l-domain";
        case BenchName::Punch: return "punch";
        case BenchName::PatchTest: return "patch-test";
        case BenchName::Uniaxial: return "uniaxial";
    }
    return "l-domain";
}

BenchName bench_from_string(const std::string& s) {
    if (s == "l-domain" || s == "l_domain") return BenchName::LDomain;
    if (s == "punch") return BenchName::Punch;
    if (s == "patch-test" || s == "patch_test") return BenchName::PatchTest;
    if (s == "uniaxial") return BenchName::Uniaxial;
    throw UsageError("unknown benchmark '" + s + "'");
}

Benchmark build_l_domain() {
    Benchmark b;
    b.name = BenchName::LDomain;
    b.domain = DomainSpec::from_segments({
        seg({0.0, 0.0}, {1.0, 0.0}, BoundaryTag::DirichletY, {}, 0.0),
        seg({1.0, 0.0}, {1.0, 0.25}, BoundaryTag::DirichletX, 0.5),
        seg({1.0, 0.25}, {0.25, 0.25}, BoundaryTag::Free),
        seg({0.25, 0.25}, {0.25, 1.0}, BoundaryTag::Free),
        seg({0.25, 1.0}, {0.0, 1.0}, BoundaryTag::DirichletY, {}, 0.5),
        seg({0.0, 1.0}, {0.0, 0.0}, BoundaryTag::DirichletX, 0.0),
    });
    return b;
}

Point2 active_punch_centre(int cycle) { return cycle % 2 == 1 ? kLeftPunchCentre : kRightPunchCentre; }

Benchmark build_punch(int cycle) {
    if (cycle < 1) throw PreconditionError("punch cycle index must be at least 1");
    const bool left = cycle % 2 == 1;
    auto span = [&](double x0, double x1, bool active) {
        if (!active) return seg({x0, 2.0}, {x1, 2.0}, BoundaryTag::Free);
        auto s = seg({x0, 2.0}, {x1, 2.0}, BoundaryTag::DirichletX, 0.0);
        s.traction = Eigen::Vector2d(0.0, -kPunchLoad);
        return s;
    };
    Benchmark b;
    b.name = BenchName::Punch;
    b.domain = DomainSpec::from_segments({
        seg({0.0, 0.0}, {2.0, 0.0}, BoundaryTag::DirichletY, {}, 0.0),
        seg({2.0, 0.0}, {2.0, 2.0}, BoundaryTag::Free),
        seg({2.0, 2.0}, {1.7, 2.0}, BoundaryTag::Free),
        span(1.7, 1.4, !left),
        seg({1.4, 2.0}, {0.6, 2.0}, BoundaryTag::Free),
        span(0.6, 0.3, left),
        seg({0.3, 2.0}, {0.0, 2.0}, BoundaryTag::Free),
        seg({0.0, 2.0}, {0.0, 0.0}, BoundaryTag::Free),
    });
    return b;
}

Eigen::Vector2d patch_test_field(const Point2& p) { return {0.3 * p.x() + 0.1 * p.y(), 0.2 * p.x() - 0.4 * p.y()}; }

Benchmark build_patch_test() {
    Benchmark b;
    b.name = BenchName::PatchTest;
    b.domain = DomainSpec::from_segments({
        seg({0.0, 0.0}, {1.0, 0.0}, BoundaryTag::DirichletXY, 0.0, 0.0),
        seg({1.0, 0.0}, {1.0, 1.0}, BoundaryTag::DirichletXY, 0.0, 0.0),
        seg({1.0, 1.0}, {0.0, 1.0}, BoundaryTag::DirichletXY, 0.0, 0.0),
        seg({0.0, 1.0}, {0.0, 0.0}, BoundaryTag::DirichletXY, 0.0, 0.0),
    });
    b.loads.dirichlet = patch_test_field;
    return b;
}

Benchmark build_uniaxial() {
    Benchmark b;
    b.name = BenchName::Uniaxial;
    b.domain = DomainSpec::from_segments({
        seg({0.0, 0.0}, {1.0, 0.0}, BoundaryTag::DirichletY, {}, 0.0),
        seg({1.0, 0.0}, {1.0, 1.0}, BoundaryTag::Free),
        seg({1.0, 1.0}, {0.0, 1.0}, BoundaryTag::DirichletY, {}, kUniaxialStretch),
        seg({0.0, 1.0}, {0.0, 0.0}, BoundaryTag::DirichletX, 0.0),
    });
    return b;
}

Benchmark build_benchmark(BenchName name, int cycle) {
    switch (name) {
        case BenchName::LDomain: return build_l_domain();
        case BenchName::Punch: return build_punch(cycle);
        case BenchName::PatchTest: return build_patch_test();
        case BenchName::Uniaxial: return build_uniaxial();
    }
    return build_l_domain();
}

std::vector<AdaptResult> run_punch_cycles(PolyMesh initial, const MaterialParams& material, const AdaptTarget& target,
                                          MeshType mode, std::uint64_t rng_seed, int cycles, const AdaptCaps& caps,
                                          const CycleObserver& observer) {
    if (cycles < 1) throw PreconditionError("punch needs at least one cycle");
    std::vector<AdaptResult> out;
    PolyMesh mesh = std::move(initial);
    for (int c = 1; c <= cycles; ++c) {
        const Benchmark b = build_punch(c);
        mesh.domain = b.domain;
        AdaptObserver obs;
        if (observer) obs = [&](const IterationRecord& r, const PolyMesh& m) { observer(c, r, m); };
        out.push_back(run_adaptation(std::move(mesh), material, b.loads, target, mode,
                                     rng_seed + static_cast<std::uint64_t>(c - 1), caps, obs));
        mesh = out.back().mesh;
    }
    return out;
}

}  // namespace vemadapt
