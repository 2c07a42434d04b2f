#include "pulsedrive/runner.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

namespace pulsedrive {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return ss.str();
}

RunOutput run_scenario(const Scenario& s) {
    RunOutput out;
    out.result = simulate(s);
    out.report = compute_metrics(out.result, s);
    return out;
}

Scenario match_load(const Scenario& s, double m, double pf, double i_peak) {
    if (!(pf > 0.0 && pf <= 1.0)) throw ValidationError({"pf must lie in (0, 1]"});
    if (!(i_peak > 0.0)) throw ValidationError({"load.i_peak must be > 0 for load matching"});
    Scenario out = s;
    out.reference.index = m;
    const double w = kTwoPi * s.reference.frequency;
    const std::complex<double> v(out.amplitude(), 0.0);
    const std::complex<double> i = std::polar(i_peak, -std::acos(pf));
    const std::complex<double> z(s.load.r, w * s.load.l);
    const std::complex<double> e = v - z * i;
    out.load.kind = LoadKind::RLBackEmf;
    out.load.emf_amplitude = std::abs(e);
    out.load.emf_phase = std::abs(e) > 0.0 ? std::arg(e) : 0.0;
    out.i_peak = i_peak;
    return out;
}

namespace {

/// Runs task(0..n-1) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t k = 0; k < n; ++k) task(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) {
        workers.emplace_back([&] {
            for (std::size_t k = next++; k < n; k = next++) task(k);
        });
    }
    for (auto& t : workers) t.join();
}

MetricsReport guarded_run(const std::function<Scenario()>& build, Strategy strategy, double m) {
    MetricsReport row;
    row.strategy = strategy;
    row.m = m;
    try {
        const Scenario sc = build();
        row = run_scenario(sc).report;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

constexpr std::array<Strategy, 3> kStrategies{Strategy::Proposed, Strategy::SVPWM, Strategy::DPWM};

}  // namespace

std::vector<MetricsReport> run_comparison(const Scenario& base, const std::vector<double>& ms,
                                          const std::vector<double>& pfs, std::size_t jobs) {
    const std::size_t n = ms.size() * pfs.size() * kStrategies.size();
    std::vector<MetricsReport> rows(n);
    parallel_for(n, jobs, [&](std::size_t k) {
        const double m = ms[k / (pfs.size() * 3)];
        const double pf = pfs[(k / 3) % pfs.size()];
        const Strategy strategy = kStrategies[k % 3];
        rows[k] = guarded_run(
            [&] { return with_strategy(match_load(base, m, pf, base.i_peak), strategy); }, strategy,
            m);
        rows[k].pf = pf;
    });
    return rows;
}

std::size_t SweepSpec::point_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) {
        if (a.values.empty()) return 0;
        if (n > max_points) return n;
        n *= a.values.size();
    }
    return n;
}

SweepSpec parse_sweep(std::string_view text) {
    SweepSpec grid;
    grid.base = Document::parse(text);
    for (const auto& e : grid.base.entries()) {
        if (e.section != "sweep") continue;
        if (e.key == "max_points") {
            double v = 0.0;
            try {
                v = parse_scalar(e.value);
            } catch (const std::invalid_argument& ex) {
                throw ParseError(e.line, e.path(), ex.what());
            }
            if (!(v >= 1.0) || v != std::floor(v)) {
                throw ParseError(e.line, e.path(), "expected a positive integer");
            }
            grid.max_points = static_cast<std::size_t>(v);
            continue;
        }
        if (e.key.find('.') == std::string::npos) {
            throw ParseError(e.line, e.path(), "axis must name a section.key parameter");
        }
        SweepAxis axis{e.key, {}};
        std::string_view rest = e.value;
        while (true) {
            const auto comma = rest.find(',');
            std::string_view item = rest.substr(0, comma);
            while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) item.remove_prefix(1);
            while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) item.remove_suffix(1);
            if (item.empty()) throw ParseError(e.line, e.path(), "empty axis value");
            axis.values.emplace_back(item);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        grid.axes.push_back(std::move(axis));
    }
    grid.base.erase_section("sweep");
    if (grid.point_count() > grid.max_points) {
        throw ValidationError({"sweep has more than " + std::to_string(grid.max_points) + " points"});
    }
    return grid;
}

std::vector<MetricsReport> sweep(const SweepSpec& grid, std::size_t jobs) {
    const std::size_t n = grid.point_count();
    if (n > grid.max_points) {
        throw ValidationError({"sweep has more than " + std::to_string(grid.max_points) + " points"});
    }
    std::vector<MetricsReport> rows(n);
    parallel_for(n, jobs, [&](std::size_t k) {
        // Decode k with the last axis varying fastest.
        Document doc = grid.base;
        std::string strategy_name;
        std::size_t rem = k;
        std::vector<std::size_t> index(grid.axes.size());
        for (std::size_t a = grid.axes.size(); a-- > 0;) {
            index[a] = rem % grid.axes[a].values.size();
            rem /= grid.axes[a].values.size();
        }
        for (std::size_t a = 0; a < grid.axes.size(); ++a) {
            const auto& value = grid.axes[a].values[index[a]];
            if (grid.axes[a].path == "scenario.strategy") {
                strategy_name = value;
            } else {
                doc.set(grid.axes[a].path, value);
            }
        }
        Strategy strategy = Strategy::Proposed;
        double m = 0.0;
        if (const auto* e = doc.find("scenario.strategy")) {
            strategy = strategy_from_string(e->value).value_or(Strategy::Proposed);
        }
        if (const auto* e = doc.find("reference.index")) {
            try {
                m = parse_scalar(e->value);
            } catch (const std::invalid_argument&) {
            }
        }
        if (!strategy_name.empty()) {
            if (const auto st = strategy_from_string(strategy_name)) strategy = *st;
        }
        rows[k] = guarded_run(
            [&] {
                Scenario sc = scenario_from_document(doc);
                if (!strategy_name.empty()) {
                    const auto st = strategy_from_string(strategy_name);
                    if (!st) throw ValidationError({"unknown strategy '" + strategy_name + "'"});
                    sc = with_strategy(sc, *st);
                }
                return sc;
            },
            strategy, m);
    });
    return rows;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_trace_csv(std::ostream& out, const SimTrace& tr) {
    out << "t,v_dc1,v_dc2,i_L,i_a,i_b,i_c,n_series,gate_a,gate_b,gate_c";
    for (std::size_t m = 0; m < tr.n_modules; ++m) out << ",i_mdl_" << (m + 1);
    out << '\n';
    std::string line;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        line.clear();
        for (const double v : {tr.t[k], tr.v_dc1[k], tr.v_dc2[k], tr.i_L[k], tr.i_a[k], tr.i_b[k],
                               tr.i_c[k]}) {
            line += format_double(v);
            line += ',';
        }
        line += std::to_string(tr.n_series[k]);
        for (int x = 0; x < 3; ++x) line += tr.gates[k].high(x) ? ",1" : ",0";
        for (std::size_t m = 0; m < tr.n_modules; ++m) {
            line += ',';
            line += format_double(tr.i_mdl[m][k]);
        }
        line += '\n';
        out << line;
    }
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsReport>& rows) {
    out << "strategy,m,pf,p_out_w,cond_igbt_w,sw_igbt_w,cond_fet_w,sw_fet_w,total_loss_w,thd_ia,"
           "ripple_pp_v,sur,commutations_frontend,commutations_backend,error\n";
    for (const auto& r : rows) {
        out << to_string(r.strategy);
        for (const double v : {r.m, r.pf, r.p_out_w, r.cond_igbt_w, r.sw_igbt_w, r.cond_fet_w,
                               r.sw_fet_w, r.total_loss_w, r.thd_ia(), r.ripple_pp_v, r.sur,
                               r.commutations_frontend, r.commutations_backend}) {
            out << ',' << format_double(v);
        }
        out << ',' << csv_field(r.error) << '\n';
    }
}

namespace {

void write_file(const std::filesystem::path& file, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(file, "cannot open for writing");
    body(out);
    out.flush();
    if (!out) throw IoError(file, "write failed");
}

}  // namespace

void write_metrics_file(const std::vector<MetricsReport>& rows, const std::filesystem::path& file) {
    write_file(file, [&](std::ostream& out) { write_metrics_csv(out, rows); });
}

void emit_artifacts(const SimTrace& trace, const std::vector<MetricsReport>& rows,
                    const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir, ec.message());
    write_file(dir / "trace.csv", [&](std::ostream& out) { write_trace_csv(out, trace); });
    write_metrics_file(rows, dir / "metrics.csv");
}

}  // namespace pulsedrive
