#include "pulsedrive/pwm_engine.hpp"

#include <cmath>

#include "pulsedrive/carrier.hpp"

namespace pulsedrive {

GateVector frontend_gates(const ModTriple& m, double t, double f_inv) {
    const double carrier = unipolar_carrier(t, f_inv);
    GateVector g;
    for (int x = 0; x < 3; ++x) {
        g.legs[static_cast<std::size_t>(x)] = carrier_compare(m[x], carrier) ? Leg::High : Leg::Low;
    }
    return g;
}

void append_commutation(std::vector<SwitchEvent>& out, double t, DeviceClass cls, int unit,
                        bool to_upper, double v_blocked, double i) {
    const Position incoming = to_upper ? Position::Upper : Position::Lower;
    const Position outgoing = to_upper ? Position::Lower : Position::Upper;
    out.push_back({t, {cls, unit, outgoing}, Edge::TurnOff, v_blocked, i});
    out.push_back({t, {cls, unit, incoming}, Edge::TurnOn, v_blocked, i});
}

void FrontendEventRecorder::push(double t, const GateVector& g, double v_dc2,
                                 const PhaseTriple& currents, std::vector<SwitchEvent>& out) {
    if (!primed_) {
        reset(g);
        return;
    }
    const std::array<double, 3> i{currents.a, currents.b, currents.c};
    for (int x = 0; x < 3; ++x) {
        const auto k = static_cast<std::size_t>(x);
        if (g.legs[k] != prev_.legs[k]) {
            append_commutation(out, t, DeviceClass::IGBT, x, g.legs[k] == Leg::High,
                               std::max(v_dc2, 0.0), i[k]);
        }
    }
    prev_ = g;
}

void BackendEventRecorder::push(double t, const BackendState& s, double i_dc,
                                const BackendConfig& cfg, std::vector<SwitchEvent>& out) {
    if (!primed_) {
        reset(s);
        return;
    }
    for (std::size_t k = 0; k < s.states.size(); ++k) {
        if (s.states[k] != prev_[k]) {
            append_commutation(out, t, DeviceClass::FET, static_cast<int>(k),
                               s.states[k] == ModuleSwitch::Series, cfg.modules[k].v_mdl, i_dc);
            prev_[k] = s.states[k];
        }
    }
}

std::vector<SwitchEvent> backend_gates(std::span<const BackendSample> stream,
                                       const BackendConfig& cfg) {
    std::vector<SwitchEvent> events;
    BackendEventRecorder rec;
    for (const auto& sample : stream) rec.push(sample.t, sample.state, sample.i_dc, cfg, events);
    return events;
}

bool integer_periods(double window, double f0) {
    const double periods = window * f0;
    return periods >= 1.0 - 1e-6 && std::abs(periods - std::round(periods)) < 1e-6;
}

SwitchingCounts switching_counts(std::span<const SwitchEvent> events, double window, double f0) {
    SwitchingCounts c;
    c.non_integer_window = !integer_periods(window, f0);
    for (const auto& e : events) {
        auto& d = c.per_device[e.device];
        if (e.edge == Edge::TurnOn) {
            ++d.turn_on;
            if (e.device.cls == DeviceClass::IGBT) {
                ++c.frontend_total;
            } else {
                ++c.backend_total;
            }
        } else {
            ++d.turn_off;
        }
    }
    const double periods = window * f0;
    if (periods > 0.0) {
        c.frontend_per_period = static_cast<double>(c.frontend_total) / periods;
        c.backend_per_period = static_cast<double>(c.backend_total) / periods;
    }
    return c;
}

}  // namespace pulsedrive
