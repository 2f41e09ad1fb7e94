#ifndef VEMADAPT_OUTPUTS_HPP
#define VEMADAPT_OUTPUTS_HPP

#include "vemadapt/adapt.hpp"
#include "vemadapt/mesh.hpp"

#include <span>
#include <string>
#include <vector>

namespace vemadapt {

/// Summary of element error norms. max/min drop the top and bottom 5% of
/// the sorted values; quartiles interpolate linearly between order statistics.
struct ElementErrorStats {
    double max_trim5 = 0.0;
    double min_trim5 = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

ElementErrorStats element_error_stats(std::span<const double> norms);

/// Linear-interpolation quantile of ascending data, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

inline constexpr const char* kHistoryHeader =
    "iter,phase,n_el,n_v,rel_error,energy_error,energy,working_target,n_refined,n_coarsened,"
    "max_elem_err_trim5,min_elem_err_trim5,mean_elem_err,median_elem_err,q1,q3";

/// Header plus one row per record; floats carry 17 significant digits.
std::string history_csv(const std::vector<IterationRecord>& history);

/// Element outlines in an SVG document. When norms are given each element
/// is filled on a blue-to-red scale of its error norm.
std::string mesh_svg(const PolyMesh& mesh, std::span<const double> norms = {});

/// "mesh_0007.json" style names.
std::string snapshot_name(Index iter, const char* extension);

/// Writes files into one output directory, creating it on construction.
/// Every failure surfaces as IoError.
class OutputWriter {
public:
    OutputWriter(std::string dir, bool svg);

    void write_snapshot(const IterationRecord& rec, const PolyMesh& mesh) const;
    void write_history(const std::vector<IterationRecord>& history) const;
    void write_text(const std::string& name, const std::string& text) const;
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    bool svg_;
};

/// history.csv plus mesh_XXXX.json (and .svg) per history row. Snapshots
/// must be parallel to history.
void emit_outputs(const std::vector<IterationRecord>& history, const std::vector<PolyMesh>& snapshots,
                  const std::string& out_dir, bool svg = true);

}  // namespace vemadapt

#endif  // VEMADAPT_OUTPUTS_HPP
