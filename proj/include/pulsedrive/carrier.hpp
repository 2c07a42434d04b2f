#pragma once

#include <cmath>

#include "pulsedrive/types.hpp"

namespace pulsedrive {

/// Unipolar triangle in [0,1] with frequency `f` (Hz). It peaks at the start of
/// each period (phase 0) and reaches 0 half a period later; `phase` (rad)
/// advances the waveform.
[[nodiscard]] inline double unipolar_carrier(double t, double f, double phase = 0.0) {
    const double x = f * t + phase / kTwoPi;
    const double frac = x - std::floor(x);
    return std::abs(2.0 * frac - 1.0);
}

/// Comparator shared by the frontend legs and the backend modules: on when the
/// reference reaches the carrier. References at or below 0 never turn on and
/// references at or above 1 never turn off.
[[nodiscard]] inline bool carrier_compare(double reference, double carrier) {
    if (reference <= 0.0) return false;
    if (reference >= 1.0) return true;
    return reference >= carrier;
}

}  // namespace pulsedrive
