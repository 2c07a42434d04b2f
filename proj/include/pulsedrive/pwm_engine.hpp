#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "pulsedrive/backend_battery.hpp"
#include "pulsedrive/types.hpp"

namespace pulsedrive {

enum class Leg : std::uint8_t { Low = 0, High = 1 };

/// State of the three complementary inverter legs. A leg is either High
/// (upper device on) or Low (lower device on); shoot-through is unrepresentable.
struct GateVector {
    std::array<Leg, 3> legs{Leg::Low, Leg::Low, Leg::Low};

    [[nodiscard]] bool high(int leg) const { return legs[static_cast<std::size_t>(leg)] == Leg::High; }
    friend bool operator==(const GateVector&, const GateVector&) = default;
};

enum class DeviceClass : std::uint8_t { IGBT, FET };
enum class Position : std::uint8_t { Upper, Lower };
enum class Edge : std::uint8_t { TurnOn, TurnOff };

/// A switch position. `unit` is the inverter leg (0..2) for IGBTs or the
/// module index for backend FETs. For a module, Upper is the series switch.
struct DeviceId {
    DeviceClass cls = DeviceClass::IGBT;
    int unit = 0;
    Position pos = Position::Upper;

    friend auto operator<=>(const DeviceId&, const DeviceId&) = default;
};

struct SwitchEvent {
    double t = 0.0;
    DeviceId device;
    Edge edge = Edge::TurnOn;
    double v_blocked = 0.0;
    /// Signed current of the half-bridge output (leg current, or string current
    /// for a module). Positive flows out of the switching node.
    double i_conducted = 0.0;
};

/// Frontend comparator: leg x is High iff m_x reaches a shared unipolar
/// triangle at f_inv. m_x = 1 holds High and m_x = 0 holds Low.
[[nodiscard]] GateVector frontend_gates(const ModTriple& m, double t, double f_inv);

/// Whether the transistor at `pos` (rather than its antiparallel diode)
/// carries a half-bridge output current `i`.
[[nodiscard]] constexpr bool transistor_carries(Position pos, double i) {
    return pos == Position::Upper ? i > 0.0 : i < 0.0;
}

/// One commutation: the incoming device turns on and the outgoing one turns off.
void append_commutation(std::vector<SwitchEvent>& out, double t, DeviceClass cls, int unit,
                        bool to_upper, double v_blocked, double i);

/// Turns successive frontend gate vectors into switch events.
class FrontendEventRecorder {
public:
    void reset(const GateVector& initial) {
        prev_ = initial;
        primed_ = true;
    }
    void push(double t, const GateVector& g, double v_dc2, const PhaseTriple& currents,
              std::vector<SwitchEvent>& out);

private:
    GateVector prev_;
    bool primed_ = false;
};

/// Turns successive backend states into switch events; every module state
/// change yields one event pair blocking that module's voltage.
class BackendEventRecorder {
public:
    void reset(const BackendState& initial) {
        prev_ = initial.states;
        primed_ = true;
    }
    void push(double t, const BackendState& s, double i_dc, const BackendConfig& cfg,
              std::vector<SwitchEvent>& out);

private:
    std::vector<ModuleSwitch> prev_;
    bool primed_ = false;
};

struct BackendSample {
    double t = 0.0;
    BackendState state;
    double i_dc = 0.0;
};

/// Event extraction over a time-ordered stream of backend states.
[[nodiscard]] std::vector<SwitchEvent> backend_gates(std::span<const BackendSample> stream,
                                                     const BackendConfig& cfg);

struct DeviceCount {
    std::size_t turn_on = 0;
    std::size_t turn_off = 0;
};

struct SwitchingCounts {
    /// Commutations (one turn-on plus one turn-off) per fundamental period.
    double frontend_per_period = 0.0;
    double backend_per_period = 0.0;
    std::size_t frontend_total = 0;
    std::size_t backend_total = 0;
    std::map<DeviceId, DeviceCount> per_device;
    bool non_integer_window = false;
};

/// Tallies events over a window of `window` seconds and normalises to
/// fundamental periods of frequency f0.
[[nodiscard]] SwitchingCounts switching_counts(std::span<const SwitchEvent> events, double window,
                                               double f0);

/// True when window * f0 is within 1e-6 of an integer (and at least one).
[[nodiscard]] bool integer_periods(double window, double f0);

}  // namespace pulsedrive
