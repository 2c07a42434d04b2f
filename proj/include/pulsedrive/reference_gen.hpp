#pragma once

#include <array>
#include <string_view>

#include "pulsedrive/types.hpp"

namespace pulsedrive {

/// Balanced sinusoidal reference: amplitude (V), electrical frequency (Hz),
/// electrical angle (rad, wrapped to [0, 2pi)) and the modulation index the
/// amplitude was derived from.
struct ReferenceState {
    double amplitude = 0.0;
    double frequency = 50.0;
    double angle = 0.0;
    double index = 0.0;

    friend bool operator==(const ReferenceState&, const ReferenceState&) = default;
};

/// Sectors are numbered after the line voltage that is largest within them:
/// I: v_ac, II: v_bc, III: v_ba, IV: v_ca, V: v_cb, VI: v_ab.
enum class Sector : int { I = 1, II = 2, III = 3, IV = 4, V = 5, VI = 6 };

[[nodiscard]] std::string_view to_string(Sector s);

[[nodiscard]] PhaseTriple gen_three_phase_refs(const ReferenceState& state);

/// max{va,vb,vc} - min{va,vb,vc}; the dc-link voltage that lets two legs rest.
[[nodiscard]] double envelope_dc_ref(const PhaseTriple& p);

/// The six signed line voltages in sector order {v_ac, v_bc, v_ba, v_ca, v_cb, v_ab}.
[[nodiscard]] std::array<double, 6> sector_line_voltages(const PhaseTriple& p);

/// Sector whose line voltage is largest. Ties resolve to the smallest sector id.
/// Throws DegenerateReference when the envelope is <= eps.
[[nodiscard]] Sector identify_sector(const PhaseTriple& p, double eps);

struct FrontendIndices {
    ModTriple m;
    bool degenerate = false;
};

/// Unipolar frontend references for the pulsating dc link:
/// m_x = (v_x - min) / (max - min). With a degenerate envelope all three
/// references fall back to 0.5 and the flag is set.
[[nodiscard]] FrontendIndices frontend_mod_indices(const PhaseTriple& p, double eps);

/// Discontinuous-PWM common-mode offset for bipolar references.
[[nodiscard]] double dpwm_common_mode(const ModTriple& bipolar);

struct DutyResult {
    ModTriple m;
    bool overmodulated = false;
};

/// Min-max injection (space-vector equivalent) duties for a fixed dc link.
[[nodiscard]] DutyResult svpwm_refs(const PhaseTriple& p, double vdc);

/// Discontinuous PWM duties for a fixed dc link: bipolar references v/(vdc/2)
/// shifted by dpwm_common_mode and mapped to [0,1].
[[nodiscard]] DutyResult dpwm_refs(const PhaseTriple& p, double vdc);

/// Largest balanced phase amplitude a dc link of `dc_max` volts can synthesise
/// without overmodulation. The same limit holds for all three strategies.
[[nodiscard]] constexpr double linear_max_amplitude(double dc_max) { return dc_max / kSqrt3; }

/// Envelope threshold below which references are treated as degenerate.
[[nodiscard]] constexpr double envelope_epsilon(double nominal_amplitude) {
    return 1e-9 * nominal_amplitude;
}

/// theta + 2*pi*f*dt wrapped into [0, 2pi).
[[nodiscard]] double advance_angle(double theta, double f, double dt);

}  // namespace pulsedrive
