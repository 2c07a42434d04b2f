#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pulsedrive {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt3 = std::numbers::sqrt3;

/// Instantaneous three-phase quantity (volts for references, amperes for currents).
struct PhaseTriple {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    [[nodiscard]] double max() const { return std::max({a, b, c}); }
    [[nodiscard]] double min() const { return std::min({a, b, c}); }
    [[nodiscard]] double sum() const { return a + b + c; }
    [[nodiscard]] bool finite() const {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
    }

    friend bool operator==(const PhaseTriple&, const PhaseTriple&) = default;
};

/// Per-leg duty references. Unipolar strategies live in [0,1], bipolar ones in [-1,1].
struct ModTriple {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    [[nodiscard]] double max() const { return std::max({a, b, c}); }
    [[nodiscard]] double min() const { return std::min({a, b, c}); }
    [[nodiscard]] double operator[](int i) const { return i == 0 ? a : (i == 1 ? b : c); }

    friend bool operator==(const ModTriple&, const ModTriple&) = default;
};

enum class Strategy { Proposed, SVPWM, DPWM };

[[nodiscard]] std::string_view to_string(Strategy s);
[[nodiscard]] std::optional<Strategy> strategy_from_string(std::string_view text);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the reference envelope is too small to identify a sector.
class DegenerateReference : public Error {
public:
    using Error::Error;
};

/// Raised by the solver when a state variable leaves the plausible range.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(double t, const std::string& what)
        : Error("numerical blow-up at t=" + std::to_string(t) + " s: " + what), time_(t) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Analysis window does not cover an integer number of fundamental periods.
class WindowMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace pulsedrive
