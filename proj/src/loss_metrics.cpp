#include "pulsedrive/loss_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "pulsedrive/circuit_sim.hpp"
#include "pulsedrive/scenario.hpp"

namespace pulsedrive {

DeviceLossParams default_device(DeviceClass cls) {
    if (cls == DeviceClass::IGBT) {
        return {DeviceClass::IGBT, 0.8, 4.2e-3, 23.5e-3, 38.5e-3, 31e-3, 600.0, 300.0};
    }
    return {DeviceClass::FET, 0.0, 0.75e-3, 0.2e-3, 0.2e-3, 0.0, 40.0, 300.0};
}

double conduction_loss(const DeviceLossParams& device, double i_avg, double i_rms) {
    return device.v_on0 * i_avg + device.r_on * i_rms * i_rms;
}

double event_energy(const SwitchEvent& e, const DeviceLossParams& device) {
    if (e.device.cls != device.cls) return 0.0;
    if (!transistor_carries(e.device.pos, e.i_conducted)) return 0.0;
    const double scale = (e.v_blocked / device.v_ref) * (std::abs(e.i_conducted) / device.i_ref);
    if (e.edge == Edge::TurnOn) return (device.e_on_ref + device.e_rr_ref) * scale;
    return device.e_off_ref * scale;
}

SwitchingLoss switching_loss(std::span<const SwitchEvent> events, const DeviceLossParams& device,
                             double window, double f0) {
    SwitchingLoss out;
    out.non_integer_window = !integer_periods(window, f0);
    if (window <= 0.0) return out;
    double energy = 0.0;
    for (const auto& e : events) energy += event_energy(e, device);
    out.watts = energy / window;
    return out;
}

std::complex<double> fourier_coefficient(std::span<const double> x, std::size_t bin) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const double step = -kTwoPi * static_cast<double>(bin % n) / static_cast<double>(n);
    const std::complex<double> w = std::polar(1.0, step);
    std::complex<double> z = 1.0;
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k % 512 == 0) {
            // Re-anchor the rotating phasor to keep rounding error flat.
            const double arg = std::fmod(step * static_cast<double>(k), kTwoPi);
            z = std::polar(1.0, arg);
        }
        acc += x[k] * z;
        z *= w;
    }
    const double norm = bin == 0 ? 1.0 : 2.0;
    return acc * (norm / static_cast<double>(n));
}

namespace {

std::size_t periods_in(std::size_t samples, double sample_dt, double f0) {
    const double periods = static_cast<double>(samples) * sample_dt * f0;
    const double rounded = std::round(periods);
    if (rounded < 1.0 || std::abs(periods - rounded) > 1e-6) {
        throw WindowMismatch("window of " + std::to_string(periods) +
                             " periods is not an integer number of fundamental periods");
    }
    return static_cast<std::size_t>(rounded);
}

}  // namespace

double thd(std::span<const double> x, double sample_dt, double f0, int harmonics) {
    const std::size_t periods = periods_in(x.size(), sample_dt, f0);
    if (harmonics < 1) throw Error("thd: harmonic count must be >= 1");
    if (static_cast<double>(harmonics) * f0 >= 0.5 / sample_dt) {
        throw Error("thd: highest harmonic is above the Nyquist frequency");
    }
    const double fundamental = std::abs(fourier_coefficient(x, periods));
    double sum = 0.0;
    for (int h = 2; h <= harmonics; ++h) {
        sum += std::norm(fourier_coefficient(x, periods * static_cast<std::size_t>(h)));
    }
    if (fundamental == 0.0) return sum == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(sum) / fundamental;
}

std::complex<double> fundamental_phasor(std::span<const double> x, double sample_dt, double f0) {
    const std::size_t periods = periods_in(x.size(), sample_dt, f0);
    // A sin(wt + phi) has coefficient -j A e^{j phi}; rotate back to A e^{j phi}.
    return fourier_coefficient(x, periods) * std::complex<double>(0.0, 1.0);
}

double ripple_analytic(RippleTopology topology, double v_mdl, int n, double m_dc, double L,
                       double C, double f_s) {
    const double lc = 16.0 * L * C * f_s * f_s;
    if (topology == RippleTopology::Buck) {
        return static_cast<double>(n) * v_mdl * (1.0 - m_dc) * m_dc / lc;
    }
    const double level = m_dc * static_cast<double>(n);
    const double up = std::ceil(level) - level;
    const double down = level - std::floor(level);
    return v_mdl * up * down / (lc * static_cast<double>(n) * static_cast<double>(n));
}

std::vector<double> remove_low_band(std::span<const double> x, double sample_dt, double f_cut) {
    std::vector<double> out(x.begin(), x.end());
    const std::size_t n = x.size();
    if (n == 0) return out;
    const double window = static_cast<double>(n) * sample_dt;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    for (auto& v : out) v -= mean;
    for (std::size_t bin = 1; static_cast<double>(bin) / window < f_cut && bin < n / 2; ++bin) {
        const auto c = fourier_coefficient(x, bin);
        const double step = kTwoPi * static_cast<double>(bin) / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double arg = step * static_cast<double>(k);
            out[k] -= c.real() * std::cos(arg) - c.imag() * std::sin(arg);
        }
    }
    return out;
}

namespace {

double rms_where(std::span<const double> i, std::size_t begin, std::size_t end,
                 const std::function<bool(std::size_t)>& on) {
    double sum = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        if (on(k)) sum += i[k] * i[k];
    }
    return std::sqrt(sum / static_cast<double>(end - begin));
}

double abs_mean_where(std::span<const double> i, std::size_t begin, std::size_t end,
                      const std::function<bool(std::size_t)>& on) {
    double sum = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        if (on(k)) sum += std::abs(i[k]);
    }
    return sum / static_cast<double>(end - begin);
}

const std::vector<double>& phase_column(const SimTrace& tr, int x) {
    return x == 0 ? tr.i_a : (x == 1 ? tr.i_b : tr.i_c);
}

}  // namespace

double sur(const SimTrace& trace, const SurRatings& ratings, std::size_t begin, std::size_t end) {
    if (end <= begin || end > trace.size()) throw Error("sur: empty or out-of-range window");
    double p = 0.0;
    for (std::size_t k = begin; k < end; ++k) p += trace.p_load[k];
    p /= static_cast<double>(end - begin);

    double stress = 0.0;
    if (ratings.frontend_v > 0.0) {
        for (int x = 0; x < 3; ++x) {
            const auto& i = phase_column(trace, x);
            const auto ux = static_cast<std::size_t>(x);
            stress += ratings.frontend_v *
                      (rms_where(i, begin, end, [&](std::size_t k) { return trace.gates[k].legs[ux] == Leg::High; }) +
                       rms_where(i, begin, end, [&](std::size_t k) { return trace.gates[k].legs[ux] == Leg::Low; }));
        }
    }
    for (std::size_t m = 0; m < trace.n_modules && m < ratings.backend_v.size(); ++m) {
        const auto& s = trace.series[m];
        stress += ratings.backend_v[m] *
                  (rms_where(trace.i_L, begin, end, [&](std::size_t k) { return s[k] != 0; }) +
                   rms_where(trace.i_L, begin, end, [&](std::size_t k) { return s[k] == 0; }));
    }
    if (!(stress > 0.0)) throw Error("ZeroStress: no switch conducts in the window");
    return p / stress;
}

MetricsReport compute_metrics(const SimResult& result, const Scenario& sc) {
    const SimTrace& tr = result.trace;
    const double f0 = sc.reference.frequency;
    const double tdt = tr.dt;

    MetricsReport r;
    r.strategy = sc.strategy;
    r.m = sc.reference.index;
    if (tr.size() < 2) throw Error("compute_metrics: trace too short");

    // Loss window: the largest whole number of periods after settle_time,
    // ending at the last sample.
    const std::size_t last = tr.size() - 1;
    const double span = tr.t[last] - sc.timing.settle_time;
    const double periods = std::floor(span * f0 + 1e-9);
    if (periods < 1.0) throw WindowMismatch("compute_metrics: less than one period after settling");
    const double window = periods / f0;
    const auto n_window = static_cast<std::size_t>(std::llround(window / tdt));
    r.non_integer_window = std::abs(static_cast<double>(n_window) * tdt - window) > 1e-9 * window;
    const std::size_t end = last;
    const std::size_t begin = end - n_window;
    const double t_begin = tr.t[begin];
    const double t_end = tr.t[end];

    // Conduction: IGBT upper carries the phase current while High, lower while Low.
    for (int x = 0; x < 3; ++x) {
        const auto& i = phase_column(tr, x);
        const auto ux = static_cast<std::size_t>(x);
        for (const Leg leg : {Leg::High, Leg::Low}) {
            const auto on = [&](std::size_t k) { return tr.gates[k].legs[ux] == leg; };
            r.cond_igbt_w += conduction_loss(sc.igbt, abs_mean_where(i, begin, end, on),
                                             rms_where(i, begin, end, on));
        }
    }
    for (std::size_t m = 0; m < tr.n_modules; ++m) {
        const auto& s = tr.series[m];
        for (const bool series : {true, false}) {
            const auto on = [&](std::size_t k) { return (s[k] != 0) == series; };
            r.cond_fet_w += conduction_loss(sc.fet, abs_mean_where(tr.i_L, begin, end, on),
                                            rms_where(tr.i_L, begin, end, on));
        }
    }

    const auto first = std::lower_bound(result.events.begin(), result.events.end(), t_begin - 0.5 * result.solver_dt,
                                        [](const SwitchEvent& e, double t) { return e.t < t; });
    const auto stop = std::lower_bound(first, result.events.end(), t_end - 0.5 * result.solver_dt,
                                       [](const SwitchEvent& e, double t) { return e.t < t; });
    const std::span<const SwitchEvent> in_window(first, stop);
    const auto sw_igbt = switching_loss(in_window, sc.igbt, window, f0);
    const auto sw_fet = switching_loss(in_window, sc.fet, window, f0);
    r.sw_igbt_w = sw_igbt.watts;
    r.sw_fet_w = sw_fet.watts;
    r.total_loss_w = r.cond_igbt_w + r.cond_fet_w + r.sw_igbt_w + r.sw_fet_w;

    const auto counts = switching_counts(in_window, window, f0);
    r.commutations_frontend = counts.frontend_per_period;
    r.commutations_backend = counts.backend_per_period;
    r.non_integer_window = r.non_integer_window || counts.non_integer_window;

    double p = 0.0;
    for (std::size_t k = begin; k < end; ++k) p += tr.p_load[k];
    r.p_out_w = p / static_cast<double>(end - begin);

    // Phase-a fundamental of voltage and current over the loss window.
    std::vector<double> v_a(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
        const double ga = tr.gates[k].high(0) ? 1.0 : 0.0;
        const double mean = (ga + (tr.gates[k].high(1) ? 1.0 : 0.0) + (tr.gates[k].high(2) ? 1.0 : 0.0)) / 3.0;
        v_a[k - begin] = tr.v_dc2[k] * (ga - mean);
    }
    const std::span<const double> i_a(tr.i_a.data() + begin, end - begin);
    const auto v1 = fundamental_phasor(v_a, tdt, f0);
    const auto i1 = fundamental_phasor(i_a, tdt, f0);
    r.v_fund_rms = std::abs(v1) / std::sqrt(2.0);
    r.i_fund_rms = std::abs(i1) / std::sqrt(2.0);
    r.pf = (std::abs(v1) > 0.0 && std::abs(i1) > 0.0) ? std::cos(std::arg(v1) - std::arg(i1)) : 0.0;

    // THD and ripple over the last two fundamental periods.
    const auto n_two = static_cast<std::size_t>(std::llround(2.0 / f0 / tdt));
    const std::size_t tail = end - std::min(n_two, end);
    for (int x = 0; x < 3; ++x) {
        const auto& i = phase_column(tr, x);
        r.thd[static_cast<std::size_t>(x)] =
            thd(std::span<const double>(i.data() + tail, end - tail), tdt, f0, sc.thd_harmonics);
    }
    if (sc.has_backend()) {
        const auto ripple =
            remove_low_band(std::span<const double>(tr.v_dc2.data() + tail, end - tail), tdt, 2e3);
        const auto [lo, hi] = std::minmax_element(ripple.begin(), ripple.end());
        r.ripple_pp_v = *hi - *lo;
    }

    SurRatings ratings;
    ratings.frontend_v = sc.dc_max();
    if (sc.has_backend()) {
        for (const auto& m : sc.backend_config().modules) ratings.backend_v.push_back(m.v_mdl);
    }
    try {
        r.sur = sur(tr, ratings, begin, end);
    } catch (const Error&) {
        r.sur = 0.0;
    }
    return r;
}

}  // namespace pulsedrive
