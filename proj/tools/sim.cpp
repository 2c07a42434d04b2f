// Command-line front end: run, compare, sweep and freq-response.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pulsedrive/runner.hpp"

namespace pd = pulsedrive;

namespace {

enum ExitCode : int { kOk = 0, kValidation = 2, kSimulation = 3, kIo = 4 };

pd::Scenario load_scenario(const std::string& file, const std::vector<std::string>& overrides) {
    auto doc = pd::Document::parse(pd::read_text_file(file));
    for (const auto& o : overrides) doc.apply_override(o);
    return pd::scenario_from_document(doc);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        out.push_back(pd::parse_scalar(std::string_view(text).substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

bool any_error(const std::vector<pd::MetricsReport>& rows) {
    for (const auto& r : rows) {
        if (!r.error.empty()) return true;
    }
    return false;
}

void emit_rows(const std::vector<pd::MetricsReport>& rows, const std::string& out_dir,
               const char* file_name) {
    if (out_dir.empty()) {
        pd::write_metrics_csv(std::cout, rows);
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw pd::IoError(out_dir, ec.message());
    pd::write_metrics_file(rows, std::filesystem::path(out_dir) / file_name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsating dc-link drive simulator"};
    app.require_subcommand(1);

    std::string scenario_file;
    std::vector<std::string> overrides;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "Simulate one scenario and report its metrics");
    run->add_option("scenario", scenario_file, "Scenario file")->required();
    run->add_option("--set", overrides, "Override a parameter, section.key=value");
    run->add_option("--out", out_dir, "Write trace.csv and metrics.csv into this directory");

    std::string m_list;
    std::string pf_list;
    std::size_t jobs = 1;
    auto* compare = app.add_subcommand("compare", "Proposed, SVPWM and DPWM at matched current");
    compare->add_option("scenario", scenario_file, "Scenario file (battery-string backend)")->required();
    compare->add_option("--m", m_list, "Comma-separated modulation indices")->required();
    compare->add_option("--pf", pf_list, "Comma-separated power factors")->required();
    compare->add_option("--set", overrides, "Override a parameter, section.key=value");
    compare->add_option("--out", out_dir, "Write comparison.csv into this directory");
    compare->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

    std::string sweep_file;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
    sweep->add_option("sweep", sweep_file, "Sweep file")->required();
    sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_dir, "Write sweep.csv into this directory");

    std::string L;
    std::string C;
    std::string r_eq = "inf";
    std::string f_list;
    auto* freq = app.add_subcommand("freq-response", "Gain and phase of the dc-link filter");
    freq->add_option("--L", L, "Filter inductance (H)")->required();
    freq->add_option("--C", C, "Filter capacitance (F)")->required();
    freq->add_option("--Req", r_eq, "Equivalent inverter resistance (ohm, inf for none)");
    freq->add_option("--f", f_list, "Comma-separated frequencies (Hz)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*run) {
            const auto sc = load_scenario(scenario_file, overrides);
            const auto out = pd::run_scenario(sc);
            if (out_dir.empty()) {
                pd::write_metrics_csv(std::cout, {out.report});
            } else {
                pd::emit_artifacts(out.result.trace, {out.report}, out_dir);
            }
            return kOk;
        }
        if (*compare) {
            const auto sc = load_scenario(scenario_file, overrides);
            const auto rows = pd::run_comparison(sc, parse_list(m_list), parse_list(pf_list), jobs);
            emit_rows(rows, out_dir, "comparison.csv");
            return any_error(rows) ? kSimulation : kOk;
        }
        if (*sweep) {
            const auto grid = pd::parse_sweep(pd::read_text_file(sweep_file));
            const auto rows = pd::sweep(grid, jobs);
            emit_rows(rows, out_dir, "sweep.csv");
            return any_error(rows) ? kSimulation : kOk;
        }
        if (*freq) {
            pd::FilterParams filt;
            filt.L = pd::parse_scalar(L);
            filt.C = pd::parse_scalar(C);
            filt.r_eq = pd::parse_scalar(r_eq);
            if (!(filt.L > 0.0) || !(filt.C > 0.0) || !(filt.r_eq > 0.0)) {
                throw pd::ValidationError({"--L, --C and --Req must be > 0"});
            }
            std::cout << "f,gain,phase_deg\n";
            for (const double f : parse_list(f_list)) {
                if (!(f > 0.0)) throw pd::ValidationError({"--f values must be > 0"});
                const auto r = pd::filter_frequency_response(filt, f);
                if (r.resonance_warning) {
                    std::cerr << "warning: undamped resonance at " << pd::format_double(f) << " Hz\n";
                }
                std::cout << pd::format_double(f) << ',' << pd::format_double(r.gain) << ','
                          << pd::format_double(r.phase_deg) << '\n';
            }
            return kOk;
        }
    } catch (const pd::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const pd::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kValidation;
    } catch (const pd::ValidationError& e) {
        std::cerr << "validation error:\n";
        for (const auto& issue : e.issues()) std::cerr << "  " << issue << '\n';
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "simulation error: " << e.what() << '\n';
        return kSimulation;
    }
    return kOk;
}
