#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pulsedrive/pwm_engine.hpp"
#include "pulsedrive/types.hpp"

namespace pulsedrive {

struct Scenario;
struct SimResult;
struct SimTrace;

/// Analytic device model in place of SPICE transients. Conduction is
/// v_on0 * i_avg + r_on * i_rms^2; a hard-switched edge dissipates its
/// reference energy scaled linearly by blocked voltage and current.
struct DeviceLossParams {
    DeviceClass cls = DeviceClass::IGBT;
    double v_on0 = 0.0;
    double r_on = 0.0;
    double e_on_ref = 0.0;
    double e_off_ref = 0.0;
    double e_rr_ref = 0.0;  ///< diode recovery charged on hard turn-on
    double v_ref = 1.0;
    double i_ref = 1.0;

    friend bool operator==(const DeviceLossParams&, const DeviceLossParams&) = default;
};

/// Default parameter sets: a 1200 V / 300 A IGBT half-bridge (datasheet values
/// at Tvj = 150 C, 600 V / 300 A) and a 60 V / 300 A trench FET at 40 V / 300 A.
[[nodiscard]] DeviceLossParams default_device(DeviceClass cls);

[[nodiscard]] double conduction_loss(const DeviceLossParams& device, double i_avg, double i_rms);

/// Energy of one edge. Edges where the antiparallel diode hands over the
/// current (soft edges) cost nothing.
[[nodiscard]] double event_energy(const SwitchEvent& e, const DeviceLossParams& device);

struct SwitchingLoss {
    double watts = 0.0;
    bool non_integer_window = false;
};

/// Mean switching power of the events that belong to `device.cls`.
[[nodiscard]] SwitchingLoss switching_loss(std::span<const SwitchEvent> events,
                                           const DeviceLossParams& device, double window,
                                           double f0);

/// Complex amplitude of the component at `bin` cycles per window.
[[nodiscard]] std::complex<double> fourier_coefficient(std::span<const double> x, std::size_t bin);

/// sqrt(sum_{h=2..H} |X_h|^2) / |X_1| with X_h taken at exact harmonic bins.
/// The samples must span an integer number of 1/f0 periods (WindowMismatch
/// otherwise) and H*f0 must stay below the Nyquist frequency.
[[nodiscard]] double thd(std::span<const double> x, double sample_dt, double f0, int harmonics);

/// Fundamental amplitude and phase (of a sine) over an integer-period window.
[[nodiscard]] std::complex<double> fundamental_phasor(std::span<const double> x, double sample_dt,
                                                      double f0);

enum class RippleTopology { CHB, Buck };

/// Switching ripple of v_dc2 behind the L-C filter for a cascaded half-bridge
/// string or a buck stage fed with N * V_mdl. The value is the ripple
/// semi-amplitude (half of peak-to-peak).
[[nodiscard]] double ripple_analytic(RippleTopology topology, double v_mdl, int n, double m_dc,
                                     double L, double C, double f_s);

/// Removes every Fourier component of the window below `f_cut` (dc included).
[[nodiscard]] std::vector<double> remove_low_band(std::span<const double> x, double sample_dt,
                                                  double f_cut);

struct SurRatings {
    double frontend_v = 0.0;           ///< peak voltage seen by each inverter switch
    std::vector<double> backend_v;     ///< per-module switch voltage
};

/// Delivered power over total active switch stress sum(V_j * I_j,rms),
/// evaluated on trace samples [begin, end). Throws Error("ZeroStress") when
/// no switch conducts.
[[nodiscard]] double sur(const SimTrace& trace, const SurRatings& ratings, std::size_t begin,
                         std::size_t end);

struct MetricsReport {
    Strategy strategy = Strategy::Proposed;
    double m = 0.0;
    double pf = 0.0;
    double p_out_w = 0.0;
    double cond_igbt_w = 0.0;
    double sw_igbt_w = 0.0;
    double cond_fet_w = 0.0;
    double sw_fet_w = 0.0;
    double total_loss_w = 0.0;
    std::array<double, 3> thd{};
    double ripple_pp_v = 0.0;
    double sur = 0.0;
    double commutations_frontend = 0.0;  ///< per fundamental period
    double commutations_backend = 0.0;   ///< per fundamental period
    double v_fund_rms = 0.0;
    double i_fund_rms = 0.0;
    bool non_integer_window = false;
    std::string error;

    [[nodiscard]] double thd_ia() const { return thd[0]; }
};

/// Post-processes one run over t >= settle_time. THD and ripple use the last
/// two fundamental periods of the run.
[[nodiscard]] MetricsReport compute_metrics(const SimResult& result, const Scenario& scenario);

}  // namespace pulsedrive
