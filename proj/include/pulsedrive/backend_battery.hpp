#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pulsedrive/types.hpp"

namespace pulsedrive {

/// One battery subunit behind its half-bridge.
struct ModuleSpec {
    double v_mdl = 0.0;         ///< open-circuit voltage (V)
    double r_int = 0.0;         ///< internal resistance (ohm)
    double capacity_ah = 1.0;   ///< capacity (Ah)
    double carrier_phase = 0.0; ///< PSC carrier phase (rad, [0, 2pi))
    double soc0 = 1.0;          ///< initial state of charge

    friend bool operator==(const ModuleSpec&, const ModuleSpec&) = default;
};

struct BackendConfig {
    double f_mdl = 5e3;  ///< per-module carrier frequency (Hz)
    std::vector<ModuleSpec> modules;

    [[nodiscard]] std::size_t n_mdl() const { return modules.size(); }
    /// Sum of module voltages; the largest v_dc1 the string can produce.
    [[nodiscard]] double total_voltage() const;

    friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

/// N identical modules with uniformly interleaved carriers 2*pi*k/N.
[[nodiscard]] BackendConfig uniform_backend(std::size_t n, double v_mdl, double f_mdl,
                                            double r_int = 0.0, double capacity_ah = 1.0,
                                            double soc0 = 1.0);

enum class ModuleSwitch : std::uint8_t { Bypass = 0, Series = 1 };

struct BackendState {
    std::vector<ModuleSwitch> states;
    std::vector<double> offsets;  ///< balancing offsets, sum zero
    std::vector<double> soc;

    [[nodiscard]] std::size_t n_series() const;
};

struct BackendIndex {
    double m_dc = 0.0;
    bool overmodulated = false;
};

/// Envelope of the references over the string voltage, clamped to [0,1].
[[nodiscard]] BackendIndex backend_mod_index(const PhaseTriple& p, const BackendConfig& cfg);

/// Fresh state: all modules bypassed, SoC at each module's soc0.
/// An empty `offsets` span means no balancing.
[[nodiscard]] BackendState initial_backend_state(const BackendConfig& cfg,
                                                 std::span<const double> offsets = {});

/// Phase-shifted-carrier rule: module k is in series iff
/// clamp(m_dc + offset_k) >= C_k(t). Updates `state.states` in place.
void update_psc_states(BackendState& state, double m_dc, double t, const BackendConfig& cfg);

[[nodiscard]] BackendState psc_states(double m_dc, double t, const BackendConfig& cfg,
                                      std::span<const double> offsets = {});

/// String voltage: sum over series modules of (v_mdl - i_dc * r_int).
[[nodiscard]] double vdc1_from_states(const BackendState& s, const BackendConfig& cfg,
                                      double i_dc);

/// Power moved onto module k by a duty offset: dm * v_mdl * i.
[[nodiscard]] constexpr double module_power_shift(double dm, double v_mdl, double i) {
    return dm * v_mdl * i;
}

/// Series modules carry the string current, bypassed modules carry none.
void module_currents(const BackendState& s, double i_dc, std::span<double> out);

struct SocUpdate {
    BackendState state;
    bool out_of_range = false;
};

/// Coulomb counting: soc_k -= i_k * dt / (3600 * capacity_k), clamped to [0,1].
[[nodiscard]] SocUpdate update_soc(BackendState s, std::span<const double> currents, double dt,
                                   const BackendConfig& cfg);

/// In-place variant used by the solver loop. Returns true if any SoC clamped.
bool update_soc_in_place(BackendState& s, std::span<const double> currents, double dt,
                         const BackendConfig& cfg);

}  // namespace pulsedrive
