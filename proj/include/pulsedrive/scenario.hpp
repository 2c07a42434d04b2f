#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pulsedrive/backend_battery.hpp"
#include "pulsedrive/circuit_sim.hpp"
#include "pulsedrive/loss_metrics.hpp"
#include "pulsedrive/reference_gen.hpp"
#include "pulsedrive/types.hpp"

namespace pulsedrive {

/// Hard-wired battery: the inverter sees a stiff dc link of this voltage.
struct FixedDcLink {
    double voltage = 0.0;
    friend bool operator==(const FixedDcLink&, const FixedDcLink&) = default;
};

struct Timing {
    double dt = 0.0;  ///< solver step; 0 selects the largest admissible step
    double duration = 0.1;
    double settle_time = 0.06;
    double trace_dt = 1e-6;
    friend bool operator==(const Timing&, const Timing&) = default;
};

/// Complete parameterisation of one run.
struct Scenario {
    Strategy strategy = Strategy::Proposed;
    ReferenceState reference;  ///< amplitude follows from index and dc_max()
    double ramp_time = 0.0;    ///< amplitude and frequency ramp from zero over this time
    std::variant<BackendConfig, FixedDcLink> backend;
    std::vector<double> offsets;
    double f_inv = 10e3;
    FilterParams filter;
    LoadSpec load;
    double i_peak = 0.0;  ///< peak phase current targeted by load matching (0: unset)
    DeviceLossParams igbt = default_device(DeviceClass::IGBT);
    DeviceLossParams fet = default_device(DeviceClass::FET);
    Timing timing;
    int thd_harmonics = 1000;
    std::uint64_t seed = 0;

    [[nodiscard]] bool has_backend() const {
        return std::holds_alternative<BackendConfig>(backend);
    }
    [[nodiscard]] const BackendConfig& backend_config() const {
        return std::get<BackendConfig>(backend);
    }
    /// Largest dc-link voltage: string voltage or the fixed link.
    [[nodiscard]] double dc_max() const;
    [[nodiscard]] double amplitude() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Syntax problems and unknown keys, located by line and key.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string key, const std::string& message);
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

/// Every violated invariant of a document, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> issues);
    [[nodiscard]] const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// Flat `[section]` / `key = value` document. Keys are addressed as
/// "section.key"; later entries for the same key replace earlier ones.
class Document {
public:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
        std::size_t line = 0;  ///< 0 for command-line overrides

        [[nodiscard]] std::string path() const { return section + "." + key; }
    };

    [[nodiscard]] static Document parse(std::string_view text);

    /// Sets "section.key" (the section is everything before the last dot).
    void set(std::string_view path, std::string value, std::size_t line = 0);
    /// Applies a "section.key=value" override.
    void apply_override(std::string_view assignment);
    [[nodiscard]] const Entry* find(std::string_view path) const;
    void erase_section(std::string_view section);

    [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }

private:
    void put(std::string section, std::string key, std::string value, std::size_t line);

    std::vector<Entry> entries_;
};

/// Parses a decimal scalar with optional u, m or k suffix. The suffix shifts
/// the decimal exponent before conversion, so "30u" and "30e-6" give the same
/// double.
[[nodiscard]] double parse_scalar(std::string_view text);

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_double(double v);

/// Every violated invariant, each message starting with the offending key path.
[[nodiscard]] std::vector<std::string> validation_issues(const Scenario& s);
/// Throws ValidationError when validation_issues() is non-empty.
void validate(const Scenario& s);

[[nodiscard]] Scenario scenario_from_document(const Document& doc);
[[nodiscard]] Scenario parse_scenario(std::string_view text);
[[nodiscard]] std::string serialize_scenario(const Scenario& s);

/// Same operating point under another strategy. A baseline derived from a
/// battery-string scenario gets a fixed link at the string's full voltage.
[[nodiscard]] Scenario with_strategy(const Scenario& s, Strategy strategy);

}  // namespace pulsedrive
