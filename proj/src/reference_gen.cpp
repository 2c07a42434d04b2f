#include "pulsedrive/reference_gen.hpp"

#include <cmath>

namespace pulsedrive {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Proposed: return "proposed";
        case Strategy::SVPWM: return "svpwm";
        case Strategy::DPWM: return "dpwm";
    }
    return "unknown";
}

std::optional<Strategy> strategy_from_string(std::string_view text) {
    if (text == "proposed") return Strategy::Proposed;
    if (text == "svpwm") return Strategy::SVPWM;
    if (text == "dpwm") return Strategy::DPWM;
    return std::nullopt;
}

std::string_view to_string(Sector s) {
    switch (s) {
        case Sector::I: return "I";
        case Sector::II: return "II";
        case Sector::III: return "III";
        case Sector::IV: return "IV";
        case Sector::V: return "V";
        case Sector::VI: return "VI";
    }
    return "?";
}

PhaseTriple gen_three_phase_refs(const ReferenceState& state) {
    constexpr double shift = kTwoPi / 3.0;
    const double m = state.amplitude;
    const double th = state.angle;
    return {m * std::sin(th), m * std::sin(th - shift), m * std::sin(th + shift)};
}

double envelope_dc_ref(const PhaseTriple& p) { return p.max() - p.min(); }

std::array<double, 6> sector_line_voltages(const PhaseTriple& p) {
    return {p.a - p.c, p.b - p.c, p.b - p.a, p.c - p.a, p.c - p.b, p.a - p.b};
}

Sector identify_sector(const PhaseTriple& p, double eps) {
    if (!(envelope_dc_ref(p) > eps)) {
        throw DegenerateReference("reference envelope below threshold; sector undefined");
    }
    const auto lines = sector_line_voltages(p);
    int best = 0;
    for (int k = 1; k < 6; ++k) {
        if (lines[k] > lines[best]) best = k;
    }
    return static_cast<Sector>(best + 1);
}

FrontendIndices frontend_mod_indices(const PhaseTriple& p, double eps) {
    const double lo = p.min();
    const double env = p.max() - lo;
    if (!(env > eps)) {
        return {{0.5, 0.5, 0.5}, true};
    }
    auto unify = [&](double v) {
        if (v == lo) return 0.0;
        if (v - lo == env) return 1.0;
        return (v - lo) / env;
    };
    return {{unify(p.a), unify(p.b), unify(p.c)}, false};
}

double dpwm_common_mode(const ModTriple& bipolar) {
    const double hi = bipolar.max();
    const double lo = bipolar.min();
    // The lower branch is written min - 1 in the source formula; only -1 - min
    // actually lands the minimum on the rail.
    return hi > -lo ? 1.0 - hi : -1.0 - lo;
}

namespace {

double clamp_unit(double x, bool& flagged) {
    if (x < 0.0) {
        flagged = true;
        return 0.0;
    }
    if (x > 1.0) {
        flagged = true;
        return 1.0;
    }
    return x;
}

}  // namespace

DutyResult svpwm_refs(const PhaseTriple& p, double vdc) {
    const double offset = 0.5 - (p.max() + p.min()) / (2.0 * vdc);
    DutyResult r;
    r.m.a = clamp_unit(p.a / vdc + offset, r.overmodulated);
    r.m.b = clamp_unit(p.b / vdc + offset, r.overmodulated);
    r.m.c = clamp_unit(p.c / vdc + offset, r.overmodulated);
    return r;
}

DutyResult dpwm_refs(const PhaseTriple& p, double vdc) {
    const ModTriple bipolar{2.0 * p.a / vdc, 2.0 * p.b / vdc, 2.0 * p.c / vdc};
    const double hi = bipolar.max();
    const double lo = bipolar.min();
    const bool clamp_high = hi > -lo;
    const double offset = dpwm_common_mode(bipolar);

    DutyResult r;
    auto map = [&](double b) {
        // The clamped phase lands exactly on the rail.
        if (clamp_high && b == hi) return 1.0;
        if (!clamp_high && b == lo) return 0.0;
        return clamp_unit(0.5 * (b + offset + 1.0), r.overmodulated);
    };
    r.m = {map(bipolar.a), map(bipolar.b), map(bipolar.c)};
    return r;
}

double advance_angle(double theta, double f, double dt) {
    double next = std::fmod(theta + kTwoPi * f * dt, kTwoPi);
    if (next < 0.0) next += kTwoPi;
    if (next >= kTwoPi) next = 0.0;
    return next;
}

}  // namespace pulsedrive
