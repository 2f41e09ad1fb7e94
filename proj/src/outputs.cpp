#include "vemadapt/outputs.hpp"

#include "vemadapt/mesh_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace vemadapt {

namespace fs = std::filesystem;

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

ElementErrorStats element_error_stats(std::span<const double> norms) {
    ElementErrorStats s;
    if (norms.empty()) return s;
    std::vector<double> v(norms.begin(), norms.end());
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 20;
    s.max_trim5 = v[v.size() - 1 - k];
    s.min_trim5 = v[k];
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.median = quantile_sorted(v, 0.5);
    s.q1 = quantile_sorted(v, 0.25);
    s.q3 = quantile_sorted(v, 0.75);
    return s;
}

std::string history_csv(const std::vector<IterationRecord>& history) {
    std::string out = kHistoryHeader;
    out += '\n';
    for (const auto& r : history) {
        const ElementErrorStats s = element_error_stats(r.elem_norms);
        out += fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                           r.iter, r.phase, r.n_el, r.n_v, r.rel_error, r.energy_error, r.energy, r.working_target,
                           r.n_refined, r.n_coarsened, s.max_trim5, s.min_trim5, s.mean, s.median, s.q1, s.q3);
    }
    return out;
}

std::string mesh_svg(const PolyMesh& mesh, std::span<const double> norms) {
    const bool fill = !norms.empty() && norms.size() == mesh.elements.size();
    double x0 = mesh.nodes.empty() ? 0.0 : mesh.nodes.front().x(), x1 = x0;
    double y0 = mesh.nodes.empty() ? 0.0 : mesh.nodes.front().y(), y1 = y0;
    for (const auto& p : mesh.nodes) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
    }
    const double span = std::max({x1 - x0, y1 - y0, 1e-300});
    const double scale = 1000.0 / span;
    const double margin = 10.0;
    const double w = (x1 - x0) * scale + 2 * margin, h = (y1 - y0) * scale + 2 * margin;
    const double stroke = std::max(0.2, 0.5 * 1000.0 / std::sqrt(std::max<double>(1.0, static_cast<double>(mesh.elements.size()))) / 40.0);

    double lo = 0.0, hi = 1.0;
    if (fill) {
        const auto [mn, mx] = std::minmax_element(norms.begin(), norms.end());
        lo = *mn;
        hi = *mx > *mn ? *mx : *mn + 1.0;
    }

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.1f}\" height=\"{:.1f}\" viewBox=\"0 0 {:.1f} {:.1f}\">\n", w, h, w, h);
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        std::string pts;
        for (Index v : mesh.elements[e]) {
            const Point2& p = mesh.nodes[static_cast<std::size_t>(v)];
            if (!pts.empty()) pts += ' ';
            pts += fmt::format("{:.3f},{:.3f}", margin + (p.x() - x0) * scale, margin + (y1 - p.y()) * scale);
        }
        std::string colour = "none";
        if (fill) {
            const double t = std::clamp((norms[e] - lo) / (hi - lo), 0.0, 1.0);
            colour = fmt::format("rgb({},{},{})", static_cast<int>(std::lround(255 * t)), 64,
                                 static_cast<int>(std::lround(255 * (1.0 - t))));
        }
        out += fmt::format("<polygon points=\"{}\" fill=\"{}\" stroke=\"black\" stroke-width=\"{:.3f}\"/>\n", pts, colour, stroke);
    }
    out += "</svg>\n";
    return out;
}

std::string snapshot_name(Index iter, const char* extension) { return fmt::format("mesh_{:04d}.{}", iter, extension); }

OutputWriter::OutputWriter(std::string dir, bool svg) : dir_(std::move(dir)), svg_(svg) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory '" + dir_ + "'");
}

void OutputWriter::write_text(const std::string& name, const std::string& text) const {
    const std::string path = (fs::path(dir_) / name).string();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.close();
    if (!out) throw IoError("failed writing '" + path + "'");
}

void OutputWriter::write_snapshot(const IterationRecord& rec, const PolyMesh& mesh) const {
    write_text(snapshot_name(rec.iter, "json"), mesh_to_json(mesh) + "\n");
    if (svg_) write_text(snapshot_name(rec.iter, "svg"), mesh_svg(mesh, rec.elem_norms));
}

void OutputWriter::write_history(const std::vector<IterationRecord>& history) const {
    write_text("history.csv", history_csv(history));
}

void emit_outputs(const std::vector<IterationRecord>& history, const std::vector<PolyMesh>& snapshots,
                  const std::string& out_dir, bool svg) {
    if (snapshots.size() != history.size()) throw PreconditionError("one snapshot per history row is required");
    const OutputWriter w(out_dir, svg);
    for (std::size_t i = 0; i < history.size(); ++i) w.write_snapshot(history[i], snapshots[i]);
    w.write_history(history);
}

}  // namespace vemadapt
