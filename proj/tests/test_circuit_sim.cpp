#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "pulsedrive/circuit_sim.hpp"
#include "pulsedrive/loss_metrics.hpp"
#include "pulsedrive/reference_gen.hpp"
#include "pulsedrive/runner.hpp"
#include "pulsedrive/scenario.hpp"

using namespace pulsedrive;
using Catch::Approx;

namespace {

Scenario string16(double duration = 40e-3) {
    Scenario sc = parse_scenario(read_text_file(PULSEDRIVE_SCENARIO_DIR "/string16_rl.ini"));
    sc.timing.duration = duration;
    sc.timing.settle_time = duration - 40e-3;
    return sc;
}

/// Amplitude of the component at `f` over samples [begin, end), by direct summation.
double harmonic(const std::vector<double>& x, double dt, double f, std::size_t begin, std::size_t end) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        const double ph = 2.0 * oracle::pi * f * static_cast<double>(k - begin) * dt;
        re += x[k] * std::cos(ph);
        im -= x[k] * std::sin(ph);
    }
    const double n = static_cast<double>(end - begin);
    return f == 0.0 ? re / n : 2.0 * std::hypot(re, im) / n;
}

double stored_energy(const SimTrace& tr, std::size_t k, const Scenario& sc) {
    const double i2 = tr.i_a[k] * tr.i_a[k] + tr.i_b[k] * tr.i_b[k] + tr.i_c[k] * tr.i_c[k];
    return 0.5 * sc.filter.L * tr.i_L[k] * tr.i_L[k] + 0.5 * sc.filter.C * tr.v_dc2[k] * tr.v_dc2[k] +
           0.5 * sc.load.l * i2;
}

}  // namespace

TEST_CASE("equilibrium is a fixed point") {
    CircuitState s;
    s.v_dc2 = 300.0;
    const GateVector idle;
    const FilterParams filt;
    const LoadSpec load{LoadKind::SeriesRL, 1.0, 1e-3, 0.0, 0.0};
    for (int k = 0; k < 1000; ++k) s = step(s, 300.0, idle, filt, load, {}, 1e-7);
    CHECK(s.v_dc2 == 300.0);
    CHECK(s.i_L == 0.0);
    CHECK(s.i_a == 0.0);
    CHECK(s.t == Approx(1e-4));
}

TEST_CASE("unloaded filter rings at its resonance") {
    const FilterParams filt;  // 30 uH, 60 uF
    CHECK(filter_resonance(filt) == Approx(1.0 / (2.0 * oracle::pi * std::sqrt(30e-6 * 60e-6))));
    CHECK(filter_resonance(filt) == Approx(3751.3).epsilon(1e-4));

    CircuitState s;
    const GateVector idle;
    const LoadSpec load{LoadKind::SeriesRL, 1.0, 0.0, 0.0, 0.0};
    const double dt = 1e-8;
    std::vector<double> crossings;
    double prev = s.v_dc2 - 100.0;
    for (int k = 0; k < 400000; ++k) {
        s = step(s, 100.0, idle, filt, load, {}, dt);
        const double now = s.v_dc2 - 100.0;
        if (prev < 0.0 && now >= 0.0) crossings.push_back(s.t - dt * now / (now - prev));
        prev = now;
    }
    REQUIRE(crossings.size() >= 10);
    const double period = (crossings.back() - crossings.front()) / double(crossings.size() - 1);
    CHECK(1.0 / period == Approx(filter_resonance(filt)).epsilon(0.02));
}

TEST_CASE("R-L load decays with its time constant") {
    CircuitState s;
    s.i_a = 10.0;
    s.i_b = -10.0;
    s.v_dc2 = 100.0;
    const GateVector idle;
    const LoadSpec load{LoadKind::SeriesRL, 2.0, 1e-3, 0.0, 0.0};
    const double tau = load.l / load.r;
    const double dt = tau / 1e4;
    for (int k = 0; k < 10000; ++k) s = step(s, 100.0, idle, FilterParams{}, load, {}, dt);
    CHECK(s.i_a == Approx(10.0 * std::exp(-1.0)).epsilon(1e-3));
    CHECK(s.i_b == Approx(-10.0 * std::exp(-1.0)).epsilon(1e-3));
    CHECK(s.i_a + s.i_b + s.i_c == Approx(0.0).margin(1e-12));
}

TEST_CASE("numerical blowup is reported") {
    CircuitState s;
    s.i_a = 1e12;
    const LoadSpec load{LoadKind::SeriesRL, 1.0, 1e-3, 0.0, 0.0};
    CHECK_THROWS_AS(step(s, 100.0, GateVector{}, FilterParams{}, load, {}, 1e-7), NumericalBlowup);
}

TEST_CASE("frequency response examples") {
    FilterParams filt;
    for (const double f : {1.0, 100.0, 1000.0, 3000.0, 3751.0, 5000.0, 20e3}) {
        const auto h = filter_frequency_response(filt, f);
        const auto ref = oracle::lc_response(filt.L, filt.C, filt.r_eq, f);
        CHECK(h.gain == Approx(ref[0]).epsilon(1e-9));
        CHECK(h.phase_deg == Approx(ref[1]).margin(1e-9));
    }
    CHECK(filter_frequency_response(filt, 0.0).gain == Approx(1.0));
    // At resonance the loaded gain is r_eq / (w L).
    const double f_res = filter_resonance(filt);
    const auto at_res = filter_frequency_response(filt, f_res);
    CHECK(at_res.gain == Approx(3.0 / (2.0 * oracle::pi * f_res * 30e-6)).epsilon(1e-9));
    CHECK(at_res.phase_deg == Approx(-90.0).margin(1e-6));

    filt.r_eq = std::numeric_limits<double>::infinity();
    CHECK(filter_frequency_response(filt, 1000.0).gain ==
          Approx(1.0 / (1.0 - std::pow(1000.0 / f_res, 2))).epsilon(1e-9));
    CHECK(filter_frequency_response(filt, f_res).resonance_warning);
    CHECK_FALSE(filter_frequency_response(filt, 1000.0).resonance_warning);
}

TEST_CASE("maximum time step resolves every carrier edge") {
    CHECK(max_time_step(10e3, 16, 5e3) == Approx(1.0 / (200.0 * 16 * 5e3)));
    CHECK(max_time_step(10e3, 0, 0.0) == Approx(1.0 / (200.0 * 10e3)));
    CHECK(max_time_step(10e3, 1, 5e3) == Approx(1.0 / (200.0 * 10e3)));
}

TEST_CASE("neutral current sums to zero") {
    const auto res = simulate(string16(40e-3));
    const auto& tr = res.trace;
    REQUIRE(tr.size() == 40001);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        CHECK(tr.i_a[k] + tr.i_b[k] + tr.i_c[k] == Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("energy and charge balance over a proposed run") {
    const Scenario sc = string16(40e-3);
    const auto res = simulate(sc);
    const auto& tr = res.trace;
    const std::size_t last = tr.size() - 1;
    const double stored = stored_energy(tr, last, sc) - stored_energy(tr, 0, sc);
    const double residual = tr.e_source[last] - tr.e_filter[last] - tr.e_load[last] - stored;
    CHECK(std::abs(residual) / tr.e_source[last] < 5e-3);

    // Node charge into the capacitor against C * delta v_dc2.
    const double dq = sc.filter.C * (tr.v_dc2[last] - tr.v_dc2[0]);
    double q_abs = 0.0;
    for (std::size_t k = 1; k <= last; ++k) q_abs += std::abs(tr.i_L[k]) * tr.dt;
    CHECK(std::abs(tr.q_node[last] - dq) / q_abs < 1e-3);

    // Module charge: each module carries i_L while in series.
    const double q_string =
        std::accumulate(res.module_charge.begin(), res.module_charge.end(), 0.0);
    double q_weighted = 0.0;
    for (std::size_t k = 1; k <= last; ++k) q_weighted += tr.i_L[k] * tr.n_series[k] * tr.dt;
    CHECK(q_string == Approx(q_weighted).epsilon(5e-3));
}

TEST_CASE("halving the step leaves the fundamental unchanged") {
    Scenario sc = string16(40e-3);
    const auto coarse = simulate(sc);
    sc.timing.dt = coarse.solver_dt / 2.0;
    const auto fine = simulate(sc);
    REQUIRE(fine.solver_dt == Approx(coarse.solver_dt / 2.0));
    const std::size_t b = 20000;
    const std::size_t e = 40000;
    const double a1 = harmonic(coarse.trace.i_a, 1e-6, 50.0, b, e);
    const double a2 = harmonic(fine.trace.i_a, 1e-6, 50.0, b, e);
    CHECK(a2 == Approx(a1).epsilon(1e-3));
}

TEST_CASE("zero amplitude leaves the load at rest") {
    Scenario sc = string16(40e-3);
    sc.reference.index = 0.0;
    sc.timing.settle_time = 0.0;
    const auto res = simulate(sc);
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
        CHECK(std::abs(res.trace.i_a[k]) < 1e-6);
        CHECK(std::abs(res.trace.v_dc1[k]) < 1e-9);
    }
}

TEST_CASE("v_dc2 tracks the six-pulse envelope") {
    const Scenario sc = string16(40e-3);
    const auto res = simulate(sc);
    const auto& tr = res.trace;
    const double amp = sc.amplitude();
    double worst = 0.0;
    for (std::size_t k = 20000; k < tr.size(); ++k) {
        const auto v = oracle::balanced(amp, 2.0 * oracle::pi * 50.0 * tr.t[k]);
        const double env = std::max({v.a - v.b, v.b - v.c, v.c - v.a, v.b - v.a, v.c - v.b, v.a - v.c});
        worst = std::max(worst, std::abs(tr.v_dc2[k] - env) / env);
    }
    CHECK(worst < 0.05);
}

TEST_CASE("string current carries only six-pulse harmonics") {
    const Scenario sc = string16(40e-3);
    const auto res = simulate(sc);
    const auto& tr = res.trace;
    const double dc = harmonic(tr.i_L, 1e-6, 0.0, 20000, 40000);
    REQUIRE(dc > 10.0);
    for (const int h : {1, 2, 3, 4, 5}) {
        CHECK(harmonic(tr.i_L, 1e-6, 50.0 * h, 20000, 40000) / dc < 0.01);
    }
    CHECK(harmonic(tr.i_L, 1e-6, 300.0, 20000, 40000) / dc > 0.05);
}

TEST_CASE("balancing offsets leave the string voltage spectrum unchanged") {
    Scenario sc = string16(40e-3);
    const auto plain = simulate(sc);
    sc.offsets.assign(16, 0.0);
    for (std::size_t k = 0; k < 16; k += 4) {
        sc.offsets[k] = 0.05;
        sc.offsets[k + 2] = -0.05;
    }
    const auto shifted = simulate(sc);
    for (const double f : {0.0, 300.0}) {
        const double a = harmonic(plain.trace.v_dc1, 1e-6, f, 20000, 40000);
        const double b = harmonic(shifted.trace.v_dc1, 1e-6, f, 20000, 40000);
        CHECK(b == Approx(a).epsilon(1e-3));
    }
    // The offset modules trade charge; the string total is unchanged.
    CHECK(shifted.module_charge[0] > shifted.module_charge[1]);
    CHECK(shifted.module_charge[2] < shifted.module_charge[1]);
}

TEST_CASE("reduced-voltage passive run keeps the current clean") {
    Scenario sc = string16(100e-3);
    sc.backend = uniform_backend(8, 16.4, 5e3);
    sc.load = {LoadKind::SeriesRL, 2.2, 100e-6, 0.0, 0.0};
    sc.timing.settle_time = 60e-3;
    const auto res = simulate(sc);
    const auto& ia = res.trace.i_a;
    const std::span<const double> window(ia.data() + ia.size() - 1 - 40000, 40000);
    CHECK(thd(window, 1e-6, 50.0, 50) < 0.06);
}

TEST_CASE("dc bench reaches the averaged operating point") {
    DcBenchConfig cfg;
    cfg.backend = uniform_backend(4, 40.0, 5e3);
    cfg.m_dc = 0.4;
    const auto res = simulate_dc_bench(cfg);
    const auto& tr = res.trace;
    const std::size_t half = tr.size() / 2;
    const double mean =
        std::accumulate(tr.v_dc2.begin() + static_cast<long>(half), tr.v_dc2.end(), 0.0) /
        static_cast<double>(tr.size() - half);
    CHECK(mean == Approx(0.4 * 160.0).epsilon(5e-3));
}
