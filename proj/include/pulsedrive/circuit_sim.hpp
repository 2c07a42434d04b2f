#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pulsedrive/backend_battery.hpp"
#include "pulsedrive/pwm_engine.hpp"
#include "pulsedrive/types.hpp"

namespace pulsedrive {

struct Scenario;

/// dc-link L-C filter between v_dc1 and v_dc2. `r_eq` only enters the
/// small-signal frequency response, where it stands in for the inverter.
struct FilterParams {
    double L = 30e-6;
    double C = 60e-6;
    double r_L = 0.0;
    double r_eq = 3.0;

    friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

enum class LoadKind { SeriesRL, RLBackEmf };

/// Per-phase load with an isolated star point. The back-emf of phase x is
/// emf_amplitude * sin(theta_x + emf_phase), theta_x being the reference angle.
struct LoadSpec {
    LoadKind kind = LoadKind::SeriesRL;
    double r = 1.0;
    double l = 0.0;
    double emf_amplitude = 0.0;
    double emf_phase = 0.0;

    friend bool operator==(const LoadSpec&, const LoadSpec&) = default;
};

struct CircuitState {
    double i_L = 0.0;
    double v_dc2 = 0.0;
    double i_a = 0.0;
    double i_b = 0.0;
    double i_c = 0.0;
    double t = 0.0;

    [[nodiscard]] PhaseTriple phase_currents() const { return {i_a, i_b, i_c}; }
};

/// Current drawn by the inverter from the dc link: sum of the High legs' currents.
[[nodiscard]] double inverter_current(const GateVector& g, const PhaseTriple& i);

/// One semi-implicit step of the dc-link filter and load equations:
///   L di_L/dt = v_dc1 - v_dc2 - r_L i_L
///   C dv_dc2/dt = i_L - i_inv
///   l di_x/dt = v_x - r i_x - e_x   (x = a, b; i_c = -i_a - i_b)
/// Resistive terms are implicit, i_L uses the old v_dc2 and v_dc2 uses the new
/// currents. Throws NumericalBlowup when a state exceeds 1e6 * nominal.
[[nodiscard]] CircuitState step(const CircuitState& state, double v_dc1, const GateVector& gates,
                                const FilterParams& filt, const LoadSpec& load,
                                const PhaseTriple& emf, double dt, double nominal = 1e3);

/// Phase voltages against the load star point for the given gates.
[[nodiscard]] PhaseTriple phase_voltages(const GateVector& g, double v_dc2);

struct FrequencyResponse {
    double gain = 1.0;
    double phase_deg = 0.0;
    bool resonance_warning = false;
};

/// H(jw) = r_eq / (r_eq (1 - w^2 L C) + j w L). An infinite r_eq gives the
/// unloaded response 1 / (1 - w^2 L C).
[[nodiscard]] FrequencyResponse filter_frequency_response(const FilterParams& filt, double f);

/// Undamped resonance 1 / (2 pi sqrt(L C)).
[[nodiscard]] double filter_resonance(const FilterParams& filt);

/// Uniformly sampled record of one run. Column k of `series` / `i_mdl` is the
/// module k series flag / current.
struct SimTrace {
    double dt = 0.0;
    std::size_t n_modules = 0;
    std::vector<double> t;
    std::vector<double> v_dc1;
    std::vector<double> v_dc2;
    std::vector<double> i_L;
    std::vector<double> i_a;
    std::vector<double> i_b;
    std::vector<double> i_c;
    std::vector<double> i_inv;
    std::vector<double> p_load;
    std::vector<int> n_series;
    std::vector<GateVector> gates;
    std::vector<std::vector<std::uint8_t>> series;
    std::vector<std::vector<double>> i_mdl;

    /// Running integrals from t = 0 (full solver resolution).
    std::vector<double> e_source;   ///< int v_dc1 i_L dt
    std::vector<double> e_filter;   ///< int r_L i_L^2 dt
    std::vector<double> e_load;     ///< int (r i^2 + e i) dt over phases (or v_dc2^2/R)
    std::vector<double> q_node;     ///< int (i_L - i_inv) dt

    [[nodiscard]] std::size_t size() const { return t.size(); }
    void reserve(std::size_t n);
};

struct SimResult {
    SimTrace trace;
    std::vector<SwitchEvent> events;
    double solver_dt = 0.0;
    std::size_t overmodulated_steps = 0;
    std::size_t degenerate_steps = 0;
    bool soc_out_of_range = false;
    std::vector<double> soc_final;
    std::vector<double> module_charge;  ///< int i_k dt per module (C)
};

/// Largest solver step: every carrier edge gets >= 200 samples per effective
/// switching period.
[[nodiscard]] double max_time_step(double f_inv, std::size_t n_mdl, double f_mdl);

/// Closed-loop run of a validated scenario: references -> backend PSC ->
/// frontend comparator -> circuit step, decimated to the trace rate.
[[nodiscard]] SimResult simulate(const Scenario& scenario);

/// Backend driving the dc-link filter into a resistor at a constant m_dc.
/// A single-module backend is a synchronous buck converter.
struct DcBenchConfig {
    BackendConfig backend;
    double m_dc = 0.5;
    FilterParams filter;
    double r_load = 3.0;
    double duration = 10e-3;
    double trace_dt = 0.25e-6;
    double dt = 0.0;  ///< 0 selects max_time_step
};

[[nodiscard]] SimResult simulate_dc_bench(const DcBenchConfig& cfg);

}  // namespace pulsedrive
