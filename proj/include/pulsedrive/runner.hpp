#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pulsedrive/circuit_sim.hpp"
#include "pulsedrive/loss_metrics.hpp"
#include "pulsedrive/scenario.hpp"

namespace pulsedrive {

/// File-system failure, carrying the offending path.
class IoError : public Error {
public:
    IoError(std::filesystem::path path, const std::string& what)
        : Error(path.string() + ": " + what), path_(std::move(path)) {}
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

struct RunOutput {
    SimResult result;
    MetricsReport report;
};

/// simulate() followed by compute_metrics().
[[nodiscard]] RunOutput run_scenario(const Scenario& s);

/// Sets modulation index `m` and replaces the load by an R-L back-emf load
/// whose fundamental draws `i_peak` at displacement factor `pf` (lagging)
/// from the ideal phase voltage m * dc_max / sqrt(3).
[[nodiscard]] Scenario match_load(const Scenario& s, double m, double pf, double i_peak);

/// One row per (m, pf, strategy) in that nesting order, strategies in the
/// order Proposed, SVPWM, DPWM. A failing row carries its message in `error`
/// and the remaining rows still run. The `pf` column holds the requested pf.
[[nodiscard]] std::vector<MetricsReport> run_comparison(const Scenario& base,
                                                        const std::vector<double>& ms,
                                                        const std::vector<double>& pfs,
                                                        std::size_t jobs = 1);

struct SweepAxis {
    std::string path;  ///< "section.key"; "scenario.strategy" switches strategy
    std::vector<std::string> values;
};

struct SweepSpec {
    Document base;
    std::vector<SweepAxis> axes;
    std::size_t max_points = 10000;

    [[nodiscard]] std::size_t point_count() const;
};

/// Scenario document plus a [sweep] section of "path = v1, v2, ..." axes and
/// an optional max_points.
[[nodiscard]] SweepSpec parse_sweep(std::string_view text);

/// Rows in lexicographic axis order, first axis outermost, regardless of
/// which worker finishes first.
[[nodiscard]] std::vector<MetricsReport> sweep(const SweepSpec& grid, std::size_t jobs = 1);

void write_trace_csv(std::ostream& out, const SimTrace& trace);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsReport>& rows);

/// Writes trace.csv and metrics.csv into `dir`, creating it if needed.
void emit_artifacts(const SimTrace& trace, const std::vector<MetricsReport>& rows,
                    const std::filesystem::path& dir);
void write_metrics_file(const std::vector<MetricsReport>& rows, const std::filesystem::path& file);

}  // namespace pulsedrive
