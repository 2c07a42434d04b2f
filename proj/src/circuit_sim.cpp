#include "pulsedrive/circuit_sim.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "pulsedrive/reference_gen.hpp"
#include "pulsedrive/scenario.hpp"

namespace pulsedrive {

double inverter_current(const GateVector& g, const PhaseTriple& i) {
    double sum = 0.0;
    if (g.high(0)) sum += i.a;
    if (g.high(1)) sum += i.b;
    if (g.high(2)) sum += i.c;
    return sum;
}

PhaseTriple phase_voltages(const GateVector& g, double v_dc2) {
    const double va = g.high(0) ? v_dc2 : 0.0;
    const double vb = g.high(1) ? v_dc2 : 0.0;
    const double vc = g.high(2) ? v_dc2 : 0.0;
    const double star = (va + vb + vc) / 3.0;
    return {va - star, vb - star, vc - star};
}

namespace {

void check_finite(double t, double value, double limit, const char* name) {
    if (!std::isfinite(value) || std::abs(value) > limit) {
        throw NumericalBlowup(t, std::string(name) + " = " + std::to_string(value));
    }
}

/// Implicit-in-r update of the two independent phase currents; i_c closes the star.
PhaseTriple step_load(const PhaseTriple& i, const GateVector& gates, double v_dc2,
                      const LoadSpec& load, const PhaseTriple& emf, double dt) {
    // Leg-to-negative-rail voltage minus emf; the star-point shift is the mean.
    const double ua = (gates.high(0) ? v_dc2 : 0.0) - emf.a;
    const double ub = (gates.high(1) ? v_dc2 : 0.0) - emf.b;
    const double uc = (gates.high(2) ? v_dc2 : 0.0) - emf.c;
    const double star = (ua + ub + uc) / 3.0;
    const double drive_a = ua - star;
    const double drive_b = ub - star;

    PhaseTriple next;
    if (load.l > 0.0) {
        const double k = dt / load.l;
        const double damp = 1.0 + k * load.r;
        next.a = (i.a + k * drive_a) / damp;
        next.b = (i.b + k * drive_b) / damp;
    } else {
        next.a = drive_a / load.r;
        next.b = drive_b / load.r;
    }
    next.c = -next.a - next.b;
    return next;
}

}  // namespace

CircuitState step(const CircuitState& s, double v_dc1, const GateVector& gates,
                  const FilterParams& filt, const LoadSpec& load, const PhaseTriple& emf,
                  double dt, double nominal) {
    CircuitState next;
    next.t = s.t + dt;

    const PhaseTriple i_next = step_load(s.phase_currents(), gates, s.v_dc2, load, emf, dt);
    next.i_a = i_next.a;
    next.i_b = i_next.b;
    next.i_c = i_next.c;

    const double i_inv = inverter_current(gates, i_next);
    next.i_L = (s.i_L + dt / filt.L * (v_dc1 - s.v_dc2)) / (1.0 + dt * filt.r_L / filt.L);
    next.v_dc2 = s.v_dc2 + dt / filt.C * (next.i_L - i_inv);

    const double limit = 1e6 * nominal;
    check_finite(next.t, next.i_L, limit, "i_L");
    check_finite(next.t, next.v_dc2, limit, "v_dc2");
    check_finite(next.t, next.i_a, limit, "i_a");
    check_finite(next.t, next.i_b, limit, "i_b");
    return next;
}

FrequencyResponse filter_frequency_response(const FilterParams& filt, double f) {
    const double w = kTwoPi * f;
    const double detune = 1.0 - w * w * filt.L * filt.C;
    const bool unloaded = !std::isfinite(filt.r_eq) || filt.r_eq <= 0.0;

    std::complex<double> h;
    if (unloaded) {
        h = 1.0 / detune;
    } else {
        h = filt.r_eq / std::complex<double>(filt.r_eq * detune, w * filt.L);
    }
    FrequencyResponse r;
    r.gain = std::abs(h);
    r.phase_deg = std::arg(h) * 180.0 / kPi;
    r.resonance_warning = unloaded && std::abs(detune) < 1e-6;
    if (r.resonance_warning) {
        r.gain = std::numeric_limits<double>::infinity();
        r.phase_deg = -90.0;
    }
    return r;
}

double filter_resonance(const FilterParams& filt) {
    return 1.0 / (kTwoPi * std::sqrt(filt.L * filt.C));
}

void SimTrace::reserve(std::size_t n) {
    for (auto* v : {&t, &v_dc1, &v_dc2, &i_L, &i_a, &i_b, &i_c, &i_inv, &p_load, &e_source,
                    &e_filter, &e_load, &q_node}) {
        v->reserve(n);
    }
    n_series.reserve(n);
    gates.reserve(n);
    for (auto& col : series) col.reserve(n);
    for (auto& col : i_mdl) col.reserve(n);
}

double max_time_step(double f_inv, std::size_t n_mdl, double f_mdl) {
    double dt = 1.0 / (200.0 * f_inv);
    if (n_mdl > 0 && f_mdl > 0.0) {
        dt = std::min(dt, 1.0 / (200.0 * static_cast<double>(n_mdl) * f_mdl));
    }
    return dt;
}

namespace {

struct StepGrid {
    double dt = 0.0;
    std::size_t per_trace = 1;
    std::size_t trace_intervals = 0;
    std::size_t steps = 0;
};

/// Solver step that divides the trace interval exactly and does not exceed `dt_req`.
StepGrid make_grid(double dt_req, double trace_dt, double duration) {
    StepGrid g;
    g.per_trace = static_cast<std::size_t>(std::max(1.0, std::ceil(trace_dt / dt_req - 1e-9)));
    g.dt = trace_dt / static_cast<double>(g.per_trace);
    g.trace_intervals = static_cast<std::size_t>(std::llround(duration / trace_dt));
    g.steps = g.trace_intervals * g.per_trace;
    return g;
}

struct Accumulators {
    double e_source = 0.0;
    double e_filter = 0.0;
    double e_load = 0.0;
    double q_node = 0.0;
};

void record(SimTrace& tr, const CircuitState& s, double v_dc1, const GateVector& g,
            const BackendState* bs, const Accumulators& acc, double p_load) {
    tr.t.push_back(s.t);
    tr.v_dc1.push_back(v_dc1);
    tr.v_dc2.push_back(s.v_dc2);
    tr.i_L.push_back(s.i_L);
    tr.i_a.push_back(s.i_a);
    tr.i_b.push_back(s.i_b);
    tr.i_c.push_back(s.i_c);
    tr.i_inv.push_back(inverter_current(g, s.phase_currents()));
    tr.p_load.push_back(p_load);
    tr.gates.push_back(g);
    tr.e_source.push_back(acc.e_source);
    tr.e_filter.push_back(acc.e_filter);
    tr.e_load.push_back(acc.e_load);
    tr.q_node.push_back(acc.q_node);
    if (bs != nullptr) {
        tr.n_series.push_back(static_cast<int>(bs->n_series()));
        for (std::size_t k = 0; k < bs->states.size(); ++k) {
            const bool on = bs->states[k] == ModuleSwitch::Series;
            tr.series[k].push_back(on ? 1 : 0);
            tr.i_mdl[k].push_back(on ? s.i_L : 0.0);
        }
    } else {
        tr.n_series.push_back(0);
    }
}

PhaseTriple balanced(double amplitude, double angle) {
    return gen_three_phase_refs({amplitude, 1.0, angle, 0.0});
}

}  // namespace

SimResult simulate(const Scenario& sc) {
    validate(sc);
    const bool chb = sc.has_backend();
    const BackendConfig* cfg = chb ? &sc.backend_config() : nullptr;
    const std::size_t n_mdl = chb ? cfg->n_mdl() : 0;
    const double vdc_fixed = chb ? 0.0 : std::get<FixedDcLink>(sc.backend).voltage;
    const double dc_max = sc.dc_max();
    const double amplitude = sc.amplitude();
    const double eps = envelope_epsilon(amplitude);
    const double f0 = sc.reference.frequency;

    const double dt_req = sc.timing.dt > 0.0
                              ? sc.timing.dt
                              : max_time_step(sc.f_inv, n_mdl, chb ? cfg->f_mdl : 0.0);
    const StepGrid grid = make_grid(dt_req, sc.timing.trace_dt, sc.timing.duration);
    const double dt = grid.dt;

    const double z_load = std::hypot(sc.load.r, kTwoPi * f0 * sc.load.l);
    const double nominal = std::max({dc_max, dc_max / std::max(z_load, 1e-3), 1.0});

    SimResult res;
    res.solver_dt = dt;
    SimTrace& tr = res.trace;
    tr.dt = sc.timing.trace_dt;
    tr.n_modules = n_mdl;
    tr.series.assign(n_mdl, {});
    tr.i_mdl.assign(n_mdl, {});
    tr.reserve(grid.trace_intervals + 1);

    BackendState bs;
    if (chb) bs = initial_backend_state(*cfg, sc.offsets);
    std::vector<double> i_mdl(n_mdl, 0.0);
    res.module_charge.assign(n_mdl, 0.0);

    FrontendEventRecorder fe_rec;
    BackendEventRecorder be_rec;
    Accumulators acc;

    double theta = sc.reference.angle;
    auto ramp = [&](double t) {
        return sc.ramp_time > 0.0 ? std::min(1.0, t / sc.ramp_time) : 1.0;
    };

    CircuitState state;
    {
        const PhaseTriple p0 = balanced(amplitude * ramp(0.5 * dt), theta);
        state.v_dc2 = chb ? envelope_dc_ref(p0) : vdc_fixed;
    }

    for (std::size_t n = 0; n <= grid.steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        state.t = t;
        const double tm = t + 0.5 * dt;
        const double scale = ramp(tm);
        const double f_now = f0 * scale;
        const double theta_m = advance_angle(theta, f_now, 0.5 * dt);
        const PhaseTriple refs = balanced(amplitude * scale, theta_m);

        ModTriple duties;
        double v_dc1 = vdc_fixed;
        switch (sc.strategy) {
            case Strategy::Proposed: {
                const auto fm = frontend_mod_indices(refs, eps);
                duties = fm.m;
                if (fm.degenerate) ++res.degenerate_steps;
                const auto bi = backend_mod_index(refs, *cfg);
                if (bi.overmodulated) ++res.overmodulated_steps;
                update_psc_states(bs, bi.m_dc, tm, *cfg);
                v_dc1 = vdc1_from_states(bs, *cfg, state.i_L);
                break;
            }
            case Strategy::SVPWM: {
                const auto d = svpwm_refs(refs, vdc_fixed);
                duties = d.m;
                if (d.overmodulated) ++res.overmodulated_steps;
                break;
            }
            case Strategy::DPWM: {
                const auto d = dpwm_refs(refs, vdc_fixed);
                duties = d.m;
                if (d.overmodulated) ++res.overmodulated_steps;
                break;
            }
        }
        const GateVector gates = frontend_gates(duties, tm, sc.f_inv);
        fe_rec.push(t, gates, state.v_dc2, state.phase_currents(), res.events);
        if (chb) be_rec.push(t, bs, state.i_L, *cfg, res.events);

        if (n % grid.per_trace == 0) {
            const double p_load = state.v_dc2 * inverter_current(gates, state.phase_currents());
            record(tr, state, v_dc1, gates, chb ? &bs : nullptr, acc, p_load);
        }
        if (n == grid.steps) break;

        const PhaseTriple emf =
            sc.load.kind == LoadKind::RLBackEmf
                ? balanced(sc.load.emf_amplitude * scale, theta_m + sc.load.emf_phase)
                : PhaseTriple{};

        CircuitState next;
        if (chb) {
            next = step(state, v_dc1, gates, sc.filter, sc.load, emf, dt, nominal);
        } else {
            // Stiff link: the filter is bypassed and the source supplies i_inv directly.
            const PhaseTriple i_next =
                step_load(state.phase_currents(), gates, vdc_fixed, sc.load, emf, dt);
            next.t = t + dt;
            next.i_a = i_next.a;
            next.i_b = i_next.b;
            next.i_c = i_next.c;
            next.v_dc2 = vdc_fixed;
            next.i_L = inverter_current(gates, i_next);
            check_finite(next.t, next.i_a, 1e6 * nominal, "i_a");
            check_finite(next.t, next.i_b, 1e6 * nominal, "i_b");
        }

        const PhaseTriple i_new = next.phase_currents();
        const double i_inv = inverter_current(gates, i_new);
        acc.e_source += dt * v_dc1 * next.i_L;
        acc.e_filter += dt * sc.filter.r_L * next.i_L * next.i_L * (chb ? 1.0 : 0.0);
        acc.e_load += dt * (sc.load.r * (i_new.a * i_new.a + i_new.b * i_new.b + i_new.c * i_new.c) +
                            emf.a * i_new.a + emf.b * i_new.b + emf.c * i_new.c);
        acc.q_node += dt * (next.i_L - i_inv);

        if (chb) {
            module_currents(bs, next.i_L, i_mdl);
            for (std::size_t k = 0; k < n_mdl; ++k) res.module_charge[k] += dt * i_mdl[k];
            if (update_soc_in_place(bs, i_mdl, dt, *cfg)) res.soc_out_of_range = true;
        }

        state = next;
        theta = advance_angle(theta, f_now, dt);
    }

    if (chb) res.soc_final = bs.soc;
    return res;
}

SimResult simulate_dc_bench(const DcBenchConfig& cfg) {
    const std::size_t n_mdl = cfg.backend.n_mdl();
    const double dt_req = cfg.dt > 0.0 ? cfg.dt
                                       : 1.0 / (200.0 * static_cast<double>(n_mdl) * cfg.backend.f_mdl);
    const StepGrid grid = make_grid(dt_req, cfg.trace_dt, cfg.duration);
    const double dt = grid.dt;
    const bool loaded = std::isfinite(cfg.r_load) && cfg.r_load > 0.0;
    const double nominal = std::max(cfg.backend.total_voltage(), 1.0) *
                           (loaded ? std::max(1.0, 1.0 / cfg.r_load) : 1.0);

    SimResult res;
    res.solver_dt = dt;
    SimTrace& tr = res.trace;
    tr.dt = cfg.trace_dt;
    tr.n_modules = n_mdl;
    tr.series.assign(n_mdl, {});
    tr.i_mdl.assign(n_mdl, {});
    tr.reserve(grid.trace_intervals + 1);

    BackendState bs = initial_backend_state(cfg.backend);
    std::vector<double> i_mdl(n_mdl, 0.0);
    res.module_charge.assign(n_mdl, 0.0);
    BackendEventRecorder rec;
    Accumulators acc;

    // Start at the averaged operating point so the filter does not ring.
    CircuitState state;
    state.v_dc2 = cfg.m_dc * cfg.backend.total_voltage();
    state.i_L = loaded ? state.v_dc2 / cfg.r_load : 0.0;

    const GateVector idle;
    for (std::size_t n = 0; n <= grid.steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        state.t = t;
        update_psc_states(bs, cfg.m_dc, t + 0.5 * dt, cfg.backend);
        const double v_dc1 = vdc1_from_states(bs, cfg.backend, state.i_L);
        rec.push(t, bs, state.i_L, cfg.backend, res.events);

        if (n % grid.per_trace == 0) {
            const double p_load = loaded ? state.v_dc2 * state.v_dc2 / cfg.r_load : 0.0;
            record(tr, state, v_dc1, idle, &bs, acc, p_load);
        }
        if (n == grid.steps) break;

        CircuitState next;
        next.t = t + dt;
        next.i_L = (state.i_L + dt / cfg.filter.L * (v_dc1 - state.v_dc2)) /
                   (1.0 + dt * cfg.filter.r_L / cfg.filter.L);
        const double g = loaded ? dt / (cfg.filter.C * cfg.r_load) : 0.0;
        next.v_dc2 = (state.v_dc2 + dt / cfg.filter.C * next.i_L) / (1.0 + g);
        check_finite(next.t, next.i_L, 1e6 * nominal, "i_L");
        check_finite(next.t, next.v_dc2, 1e6 * nominal, "v_dc2");

        const double i_out = loaded ? next.v_dc2 / cfg.r_load : 0.0;
        acc.e_source += dt * v_dc1 * next.i_L;
        acc.e_filter += dt * cfg.filter.r_L * next.i_L * next.i_L;
        acc.e_load += dt * next.v_dc2 * i_out;
        acc.q_node += dt * (next.i_L - i_out);

        module_currents(bs, next.i_L, i_mdl);
        for (std::size_t k = 0; k < n_mdl; ++k) res.module_charge[k] += dt * i_mdl[k];
        if (update_soc_in_place(bs, i_mdl, dt, cfg.backend)) res.soc_out_of_range = true;
        state = next;
    }
    res.soc_final = bs.soc;
    return res;
}

}  // namespace pulsedrive
