#include "pulsedrive/backend_battery.hpp"

#include <algorithm>
#include <numeric>

#include "pulsedrive/carrier.hpp"
#include "pulsedrive/reference_gen.hpp"

namespace pulsedrive {

double BackendConfig::total_voltage() const {
    return std::accumulate(modules.begin(), modules.end(), 0.0,
                           [](double acc, const ModuleSpec& m) { return acc + m.v_mdl; });
}

BackendConfig uniform_backend(std::size_t n, double v_mdl, double f_mdl, double r_int,
                              double capacity_ah, double soc0) {
    BackendConfig cfg;
    cfg.f_mdl = f_mdl;
    cfg.modules.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        cfg.modules.push_back({v_mdl, r_int, capacity_ah,
                               kTwoPi * static_cast<double>(k) / static_cast<double>(n), soc0});
    }
    return cfg;
}

std::size_t BackendState::n_series() const {
    return static_cast<std::size_t>(std::count(states.begin(), states.end(), ModuleSwitch::Series));
}

BackendIndex backend_mod_index(const PhaseTriple& p, const BackendConfig& cfg) {
    const double m = envelope_dc_ref(p) / cfg.total_voltage();
    if (m > 1.0) return {1.0, true};
    return {std::max(m, 0.0), false};
}

BackendState initial_backend_state(const BackendConfig& cfg, std::span<const double> offsets) {
    const std::size_t n = cfg.n_mdl();
    BackendState s;
    s.states.assign(n, ModuleSwitch::Bypass);
    s.offsets.assign(n, 0.0);
    std::copy_n(offsets.begin(), std::min(offsets.size(), n), s.offsets.begin());
    s.soc.reserve(n);
    for (const auto& m : cfg.modules) s.soc.push_back(m.soc0);
    return s;
}

void update_psc_states(BackendState& state, double m_dc, double t, const BackendConfig& cfg) {
    const std::size_t n = cfg.n_mdl();
    for (std::size_t k = 0; k < n; ++k) {
        const double ref = std::clamp(m_dc + state.offsets[k], 0.0, 1.0);
        const double carrier = unipolar_carrier(t, cfg.f_mdl, cfg.modules[k].carrier_phase);
        state.states[k] = carrier_compare(ref, carrier) ? ModuleSwitch::Series : ModuleSwitch::Bypass;
    }
}

BackendState psc_states(double m_dc, double t, const BackendConfig& cfg,
                        std::span<const double> offsets) {
    BackendState s = initial_backend_state(cfg, offsets);
    update_psc_states(s, m_dc, t, cfg);
    return s;
}

double vdc1_from_states(const BackendState& s, const BackendConfig& cfg, double i_dc) {
    double v = 0.0;
    for (std::size_t k = 0; k < s.states.size(); ++k) {
        if (s.states[k] == ModuleSwitch::Series) {
            const auto& m = cfg.modules[k];
            v += m.v_mdl - i_dc * m.r_int;
        }
    }
    return v;
}

void module_currents(const BackendState& s, double i_dc, std::span<double> out) {
    for (std::size_t k = 0; k < s.states.size(); ++k) {
        out[k] = s.states[k] == ModuleSwitch::Series ? i_dc : 0.0;
    }
}

bool update_soc_in_place(BackendState& s, std::span<const double> currents, double dt,
                         const BackendConfig& cfg) {
    bool clamped = false;
    for (std::size_t k = 0; k < s.soc.size(); ++k) {
        double soc = s.soc[k] - currents[k] * dt / (3600.0 * cfg.modules[k].capacity_ah);
        // Reaching a bound while still pushing against it counts as out of range.
        if (soc < 0.0 || (soc == 0.0 && currents[k] > 0.0)) {
            soc = 0.0;
            clamped = true;
        } else if (soc > 1.0 || (soc == 1.0 && currents[k] < 0.0)) {
            soc = 1.0;
            clamped = true;
        }
        s.soc[k] = soc;
    }
    return clamped;
}

SocUpdate update_soc(BackendState s, std::span<const double> currents, double dt,
                     const BackendConfig& cfg) {
    const bool flag = update_soc_in_place(s, currents, dt, cfg);
    return {std::move(s), flag};
}

}  // namespace pulsedrive
