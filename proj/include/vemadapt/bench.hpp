#ifndef VEMADAPT_BENCH_HPP
#define VEMADAPT_BENCH_HPP

#include "vemadapt/adapt.hpp"
#include "vemadapt/mesh.hpp"
#include "vemadapt/vem.hpp"

#include <functional>
#include <string>
#include <vector>

namespace vemadapt {

enum class BenchName { LDomain, Punch, PatchTest, Uniaxial };

const char* to_string(BenchName b);
BenchName bench_from_string(const std::string& s);

struct Benchmark {
    BenchName name = BenchName::LDomain;
    DomainSpec domain;
    Loads loads;
};

/// Legs of thickness 0.25 along the axes; the loaded edges are pulled 0.5 m.
Benchmark build_l_domain();

inline const Point2 kLeftPunchCentre{0.45, 2.0};
inline const Point2 kRightPunchCentre{1.55, 2.0};
inline constexpr double kPunchLoad = 0.675;

/// 2 x 2 block, bottom held vertically. The active punch (left on odd
/// cycles, right on even) pushes down and holds its span horizontally.
/// Both spans are always separate outline segments so the mesh carries over.
Benchmark build_punch(int cycle);
Point2 active_punch_centre(int cycle);

/// Unit square with every boundary dof set from u = (0.3x + 0.1y, 0.2x - 0.4y).
Benchmark build_patch_test();
Eigen::Vector2d patch_test_field(const Point2& p);

inline constexpr double kUniaxialStretch = 0.1;

/// Unit square, bottom held vertically, left held horizontally, top pulled up.
Benchmark build_uniaxial();

/// Dispatch on name; cycle is only used by the punch.
Benchmark build_benchmark(BenchName name, int cycle = 1);

using CycleObserver = std::function<void(int cycle, const IterationRecord&, const PolyMesh&)>;

/// Adapts the punch for cycles 1..n, each cycle starting from the previous
/// cycle's final mesh with the new cycle's boundary conditions.
std::vector<AdaptResult> run_punch_cycles(PolyMesh initial, const MaterialParams& material, const AdaptTarget& target,
                                          MeshType mode, std::uint64_t rng_seed, int cycles, const AdaptCaps& caps = {},
                                          const CycleObserver& observer = {});

}  // namespace vemadapt

#endif  // VEMADAPT_BENCH_HPP
