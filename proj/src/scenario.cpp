#include "pulsedrive/scenario.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pulsedrive {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

ParseError::ParseError(std::size_t line, std::string key, const std::string& message)
    : Error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
            (key.empty() ? std::string() : key + ": ") + message),
      line_(line),
      key_(std::move(key)) {}

ValidationError::ValidationError(std::vector<std::string> issues)
    : Error("invalid scenario: " + join(issues, "; ")), issues_(std::move(issues)) {}

// ---------------------------------------------------------------- Document

Document Document::parse(std::string_view text) {
    Document doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) {
            line = line.substr(0, c);
        }
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ParseError(line_no, "", "malformed section header");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(line_no, std::string(line), "expected key = value");
            }
            const auto key = trim(line.substr(0, eq));
            if (key.empty()) throw ParseError(line_no, "", "empty key");
            if (section.empty()) {
                throw ParseError(line_no, std::string(key), "key outside of any section");
            }
            doc.put(section, std::string(key), std::string(trim(line.substr(eq + 1))), line_no);
        }
        if (end == text.size()) break;
    }
    return doc;
}

void Document::set(std::string_view path, std::string value, std::size_t line) {
    const auto dot = path.rfind('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == path.size()) {
        throw ParseError(line, std::string(path), "expected section.key");
    }
    put(std::string(path.substr(0, dot)), std::string(path.substr(dot + 1)), std::move(value), line);
}

void Document::put(std::string section, std::string key, std::string value, std::size_t line) {
    for (auto& e : entries_) {
        if (e.section == section && e.key == key) {
            e.value = std::move(value);
            e.line = line;
            return;
        }
    }
    entries_.push_back({std::move(section), std::move(key), std::move(value), line});
}

void Document::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ParseError(0, std::string(assignment), "override must be section.key=value");
    }
    set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))));
}

const Document::Entry* Document::find(std::string_view path) const {
    for (const auto& e : entries_) {
        if (e.path() == path) return &e;
    }
    return nullptr;
}

void Document::erase_section(std::string_view section) {
    std::erase_if(entries_, [&](const Entry& e) { return e.section == section; });
}

// ---------------------------------------------------------------- scalars

double parse_scalar(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("empty number");

    int shift = 0;
    switch (text.back()) {
        case 'u': shift = -6; break;
        case 'm': shift = -3; break;
        case 'k': shift = 3; break;
        default: break;
    }
    if (shift != 0) text.remove_suffix(1);

    std::string buffer(text);
    if (shift != 0) {
        // Move the decimal exponent rather than multiplying, so "30u" reads
        // exactly like "30e-6".
        int exponent = 0;
        const auto e = buffer.find_first_of("eE");
        if (e != std::string::npos) {
            const std::string_view exp_text(buffer.data() + e + 1, buffer.size() - e - 1);
            const auto [p, ec] =
                std::from_chars(exp_text.data() + (exp_text.starts_with('+') ? 1 : 0),
                                exp_text.data() + exp_text.size(), exponent);
            if (ec != std::errc() || p != exp_text.data() + exp_text.size()) {
                throw std::invalid_argument("bad exponent in '" + std::string(text) + "'");
            }
            buffer.resize(e);
        }
        buffer += "e" + std::to_string(exponent + shift);
    }

    double value = 0.0;
    const char* first = buffer.data();
    const char* last = buffer.data() + buffer.size();
    if (first != last && *first == '+') ++first;
    const auto [p, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || p != last) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return {buf.data(), p};
}

// ---------------------------------------------------------------- scenario

double Scenario::dc_max() const {
    if (has_backend()) return backend_config().total_voltage();
    return std::get<FixedDcLink>(backend).voltage;
}

double Scenario::amplitude() const { return reference.index * linear_max_amplitude(dc_max()); }

std::vector<std::string> validation_issues(const Scenario& s) {
    std::vector<std::string> issues;
    auto require = [&](bool ok, const std::string& message) {
        if (!ok) issues.push_back(message);
    };

    require(std::isfinite(s.reference.index) && s.reference.index >= 0.0,
            "reference.index must be >= 0");
    require(std::isfinite(s.reference.frequency) && s.reference.frequency > 0.0,
            "reference.frequency must be > 0");
    require(s.reference.angle >= 0.0 && s.reference.angle < kTwoPi,
            "reference.phase must lie in [0, 2pi)");
    require(s.ramp_time >= 0.0, "reference.ramp_time must be >= 0");

    if (s.has_backend()) {
        const auto& cfg = s.backend_config();
        require(s.strategy == Strategy::Proposed,
                "scenario.strategy: svpwm and dpwm require backend.kind = fixed");
        require(cfg.n_mdl() >= 1, "backend.modules must be >= 1");
        require(cfg.f_mdl > 0.0, "backend.f_mdl must be > 0");
        bool v_ok = true, r_ok = true, cap_ok = true, soc_ok = true, phase_ok = true;
        for (const auto& m : cfg.modules) {
            v_ok = v_ok && m.v_mdl > 0.0;
            r_ok = r_ok && m.r_int >= 0.0;
            cap_ok = cap_ok && m.capacity_ah > 0.0;
            soc_ok = soc_ok && m.soc0 >= 0.0 && m.soc0 <= 1.0;
            phase_ok = phase_ok && m.carrier_phase >= 0.0 && m.carrier_phase < kTwoPi;
        }
        require(v_ok, "backend.v_mdl must be > 0");
        require(r_ok, "backend.r_int must be >= 0");
        require(cap_ok, "backend.capacity must be > 0");
        require(soc_ok, "backend.soc0 must lie in [0, 1]");
        require(phase_ok, "backend carrier phases must lie in [0, 2pi)");
        if (!s.offsets.empty()) {
            require(s.offsets.size() == cfg.n_mdl(), "backend.offsets needs one value per module");
            const double sum = std::accumulate(s.offsets.begin(), s.offsets.end(), 0.0);
            require(std::abs(sum) <= 1e-12, "backend.offsets must sum to zero");
            for (double o : s.offsets) {
                if (std::abs(o) >= 1.0) {
                    issues.emplace_back("backend.offsets must lie in (-1, 1)");
                    break;
                }
            }
        }
    } else {
        require(std::get<FixedDcLink>(s.backend).voltage > 0.0, "backend.voltage must be > 0");
        require(s.strategy != Strategy::Proposed,
                "scenario.strategy: proposed requires backend.kind = chb");
        require(s.offsets.empty(), "backend.offsets requires backend.kind = chb");
    }

    require(s.f_inv > 0.0, "pwm.f_inv must be > 0");
    require(s.filter.L > 0.0, "filter.L must be > 0");
    require(s.filter.C > 0.0, "filter.C must be > 0");
    require(s.filter.r_L >= 0.0, "filter.r_L must be >= 0");
    require(s.filter.r_eq > 0.0, "filter.r_eq must be > 0");

    require(s.load.r >= 0.0, "load.r must be >= 0");
    require(s.load.l >= 0.0, "load.l must be >= 0");
    require(s.load.r > 0.0 || s.load.l > 0.0, "load.r: load impedance must be nonzero");
    if (s.load.kind == LoadKind::SeriesRL) {
        require(s.load.emf_amplitude == 0.0, "load.emf_amplitude requires load.kind = rl_emf");
    } else {
        require(s.load.emf_amplitude >= 0.0, "load.emf_amplitude must be >= 0");
    }
    require(s.i_peak >= 0.0, "load.i_peak must be >= 0");

    for (const auto* d : {&s.igbt, &s.fet}) {
        const std::string sec = d->cls == DeviceClass::IGBT ? "devices.igbt." : "devices.fet.";
        require(d->v_on0 >= 0.0, sec + "v_on0 must be >= 0");
        require(d->r_on >= 0.0, sec + "r_on must be >= 0");
        require(d->e_on_ref >= 0.0, sec + "e_on must be >= 0");
        require(d->e_off_ref >= 0.0, sec + "e_off must be >= 0");
        require(d->e_rr_ref >= 0.0, sec + "e_rr must be >= 0");
        require(d->v_ref > 0.0, sec + "v_ref must be > 0");
        require(d->i_ref > 0.0, sec + "i_ref must be > 0");
    }
    require(s.igbt.cls == DeviceClass::IGBT, "devices.igbt must describe an IGBT");
    require(s.fet.cls == DeviceClass::FET, "devices.fet must describe a FET");

    const auto& tm = s.timing;
    require(tm.duration > 0.0, "timing.duration must be > 0");
    require(tm.trace_dt > 0.0 && tm.trace_dt <= tm.duration,
            "timing.trace_dt must lie in (0, duration]");
    require(tm.settle_time >= 0.0 && tm.settle_time < tm.duration,
            "timing.settle_time must lie in [0, duration)");
    require(tm.dt >= 0.0, "timing.dt must be >= 0");
    if (s.f_inv > 0.0 && (!s.has_backend() || s.backend_config().f_mdl > 0.0)) {
        const double dt_max = max_time_step(s.f_inv, s.has_backend() ? s.backend_config().n_mdl() : 0,
                                            s.has_backend() ? s.backend_config().f_mdl : 0.0);
        require(tm.dt <= dt_max * (1.0 + 1e-12),
                "timing.dt exceeds the largest admissible step " + format_double(dt_max));
    }
    if (s.reference.frequency > 0.0) {
        require(tm.duration - tm.settle_time >= 2.0 / s.reference.frequency - 1e-12,
                "timing.settle_time must leave at least two fundamental periods");
    }

    require(s.thd_harmonics >= 1, "metrics.thd_harmonics must be >= 1");
    if (tm.trace_dt > 0.0) {
        require(s.thd_harmonics * s.reference.frequency < 0.5 / tm.trace_dt,
                "metrics.thd_harmonics must stay below the trace Nyquist frequency");
    }
    return issues;
}

void validate(const Scenario& s) {
    auto issues = validation_issues(s);
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

namespace {

/// Typed reader that records which entries were consumed and collects
/// conversion problems as ParseErrors.
class Reader {
public:
    explicit Reader(const Document& doc) : doc_(doc) {}

    const Document::Entry* get(std::string_view path) {
        const auto* e = doc_.find(path);
        if (e != nullptr) used_.emplace(e->path());
        return e;
    }

    bool number(std::string_view path, double& out) {
        const auto* e = get(path);
        if (e == nullptr) return false;
        try {
            out = parse_scalar(e->value);
        } catch (const std::invalid_argument& ex) {
            throw ParseError(e->line, e->path(), ex.what());
        }
        return true;
    }

    bool integer(std::string_view path, long long& out) {
        double v = 0.0;
        if (!number(path, v)) return false;
        if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 9.0e15) {
            const auto* e = doc_.find(path);
            throw ParseError(e->line, e->path(), "expected an integer");
        }
        out = static_cast<long long>(v);
        return true;
    }

    bool list(std::string_view path, std::vector<double>& out) {
        const auto* e = get(path);
        if (e == nullptr) return false;
        out.clear();
        std::string_view rest = e->value;
        if (trim(rest).empty()) return true;
        while (true) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            try {
                out.push_back(parse_scalar(item));
            } catch (const std::invalid_argument& ex) {
                throw ParseError(e->line, e->path(), ex.what());
            }
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return true;
    }

    /// First entry that no reader call consumed.
    void reject_unknown() const {
        for (const auto& e : doc_.entries()) {
            if (!used_.contains(e.path())) throw ParseError(e.line, e.path(), "unknown key");
        }
    }

private:
    const Document& doc_;
    struct PathSet {
        std::vector<std::string> items;
        void emplace(std::string p) {
            if (!contains(p)) items.push_back(std::move(p));
        }
        [[nodiscard]] bool contains(std::string_view p) const {
            return std::find(items.begin(), items.end(), p) != items.end();
        }
    } used_;
};

void read_device(Reader& r, const std::string& section, DeviceLossParams& d) {
    r.number(section + ".v_on0", d.v_on0);
    r.number(section + ".r_on", d.r_on);
    r.number(section + ".e_on", d.e_on_ref);
    r.number(section + ".e_off", d.e_off_ref);
    r.number(section + ".e_rr", d.e_rr_ref);
    r.number(section + ".v_ref", d.v_ref);
    r.number(section + ".i_ref", d.i_ref);
}

}  // namespace

Scenario scenario_from_document(const Document& doc) {
    Reader r(doc);
    Scenario s;
    std::vector<std::string> missing;

    if (const auto* e = r.get("scenario.strategy")) {
        const auto st = strategy_from_string(e->value);
        if (!st) throw ParseError(e->line, e->path(), "unknown strategy '" + e->value + "'");
        s.strategy = *st;
    } else {
        missing.emplace_back("scenario.strategy is required");
    }
    long long seed = 0;
    if (r.integer("scenario.seed", seed)) s.seed = static_cast<std::uint64_t>(seed);

    if (!r.number("reference.index", s.reference.index)) {
        missing.emplace_back("reference.index is required");
    }
    r.number("reference.frequency", s.reference.frequency);
    r.number("reference.phase", s.reference.angle);
    r.number("reference.ramp_time", s.ramp_time);

    std::string kind = "chb";
    if (const auto* e = r.get("backend.kind")) {
        if (e->value != "chb" && e->value != "fixed") {
            throw ParseError(e->line, e->path(), "expected chb or fixed");
        }
        kind = e->value;
    }
    if (kind == "chb") {
        long long n = 0;
        double v_mdl = 0.0;
        double f_mdl = 5e3;
        double r_int = 0.0;
        double capacity = 1.0;
        double soc0 = 1.0;
        if (!r.integer("backend.modules", n)) missing.emplace_back("backend.modules is required");
        if (!r.number("backend.v_mdl", v_mdl)) missing.emplace_back("backend.v_mdl is required");
        r.number("backend.f_mdl", f_mdl);
        r.number("backend.r_int", r_int);
        r.number("backend.capacity", capacity);
        r.number("backend.soc0", soc0);
        r.list("backend.offsets", s.offsets);
        if (n < 0 || n > 100000) {
            missing.emplace_back("backend.modules must be >= 1");
            n = 0;
        }
        s.backend = uniform_backend(static_cast<std::size_t>(n), v_mdl, f_mdl, r_int, capacity, soc0);
        if (n == 0) std::get<BackendConfig>(s.backend).f_mdl = f_mdl;
    } else {
        FixedDcLink link;
        if (!r.number("backend.voltage", link.voltage)) {
            missing.emplace_back("backend.voltage is required");
        }
        s.backend = link;
        if (const auto* e = r.get("backend.offsets")) {
            missing.push_back("backend.offsets requires backend.kind = chb (line " +
                              std::to_string(e->line) + ")");
        }
    }

    r.number("pwm.f_inv", s.f_inv);
    r.number("filter.L", s.filter.L);
    r.number("filter.C", s.filter.C);
    r.number("filter.r_L", s.filter.r_L);
    r.number("filter.r_eq", s.filter.r_eq);

    if (const auto* e = r.get("load.kind")) {
        if (e->value == "rl") {
            s.load.kind = LoadKind::SeriesRL;
        } else if (e->value == "rl_emf") {
            s.load.kind = LoadKind::RLBackEmf;
        } else {
            throw ParseError(e->line, e->path(), "expected rl or rl_emf");
        }
    }
    if (!r.number("load.r", s.load.r)) missing.emplace_back("load.r is required");
    r.number("load.l", s.load.l);
    r.number("load.emf_amplitude", s.load.emf_amplitude);
    r.number("load.emf_phase", s.load.emf_phase);
    r.number("load.i_peak", s.i_peak);

    read_device(r, "devices.igbt", s.igbt);
    read_device(r, "devices.fet", s.fet);

    r.number("timing.dt", s.timing.dt);
    r.number("timing.duration", s.timing.duration);
    if (!r.number("timing.settle_time", s.timing.settle_time)) {
        s.timing.settle_time = s.reference.frequency > 0.0 ? 3.0 / s.reference.frequency : 0.0;
    }
    r.number("timing.trace_dt", s.timing.trace_dt);

    long long harmonics = s.thd_harmonics;
    if (r.integer("metrics.thd_harmonics", harmonics)) {
        s.thd_harmonics = static_cast<int>(std::clamp<long long>(harmonics, -1, 1 << 30));
    }

    r.reject_unknown();

    auto issues = validation_issues(s);
    missing.insert(missing.end(), issues.begin(), issues.end());
    if (!missing.empty()) throw ValidationError(std::move(missing));
    return s;
}

Scenario parse_scenario(std::string_view text) { return scenario_from_document(Document::parse(text)); }

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    const auto num = [](double v) { return format_double(v); };

    out << "[scenario]\n"
        << "strategy = " << to_string(s.strategy) << "\n"
        << "seed = " << s.seed << "\n\n";
    out << "[reference]\n"
        << "index = " << num(s.reference.index) << "\n"
        << "frequency = " << num(s.reference.frequency) << "\n"
        << "phase = " << num(s.reference.angle) << "\n"
        << "ramp_time = " << num(s.ramp_time) << "\n\n";

    out << "[backend]\n";
    if (s.has_backend()) {
        const auto& cfg = s.backend_config();
        const ModuleSpec first = cfg.modules.empty() ? ModuleSpec{} : cfg.modules.front();
        out << "kind = chb\n"
            << "modules = " << cfg.n_mdl() << "\n"
            << "v_mdl = " << num(first.v_mdl) << "\n"
            << "f_mdl = " << num(cfg.f_mdl) << "\n"
            << "r_int = " << num(first.r_int) << "\n"
            << "capacity = " << num(first.capacity_ah) << "\n"
            << "soc0 = " << num(first.soc0) << "\n";
        if (!s.offsets.empty()) {
            out << "offsets = ";
            for (std::size_t k = 0; k < s.offsets.size(); ++k) {
                out << (k > 0 ? ", " : "") << num(s.offsets[k]);
            }
            out << "\n";
        }
    } else {
        out << "kind = fixed\n"
            << "voltage = " << num(std::get<FixedDcLink>(s.backend).voltage) << "\n";
    }
    out << "\n[pwm]\n"
        << "f_inv = " << num(s.f_inv) << "\n\n";
    out << "[filter]\n"
        << "L = " << num(s.filter.L) << "\n"
        << "C = " << num(s.filter.C) << "\n"
        << "r_L = " << num(s.filter.r_L) << "\n"
        << "r_eq = " << num(s.filter.r_eq) << "\n\n";
    out << "[load]\n"
        << "kind = " << (s.load.kind == LoadKind::SeriesRL ? "rl" : "rl_emf") << "\n"
        << "r = " << num(s.load.r) << "\n"
        << "l = " << num(s.load.l) << "\n";
    if (s.load.kind == LoadKind::RLBackEmf) {
        out << "emf_amplitude = " << num(s.load.emf_amplitude) << "\n"
            << "emf_phase = " << num(s.load.emf_phase) << "\n";
    }
    out << "i_peak = " << num(s.i_peak) << "\n\n";

    for (const auto* d : {&s.igbt, &s.fet}) {
        out << (d->cls == DeviceClass::IGBT ? "[devices.igbt]\n" : "[devices.fet]\n")
            << "v_on0 = " << num(d->v_on0) << "\n"
            << "r_on = " << num(d->r_on) << "\n"
            << "e_on = " << num(d->e_on_ref) << "\n"
            << "e_off = " << num(d->e_off_ref) << "\n"
            << "e_rr = " << num(d->e_rr_ref) << "\n"
            << "v_ref = " << num(d->v_ref) << "\n"
            << "i_ref = " << num(d->i_ref) << "\n\n";
    }
    out << "[timing]\n"
        << "dt = " << num(s.timing.dt) << "\n"
        << "duration = " << num(s.timing.duration) << "\n"
        << "settle_time = " << num(s.timing.settle_time) << "\n"
        << "trace_dt = " << num(s.timing.trace_dt) << "\n\n";
    out << "[metrics]\n"
        << "thd_harmonics = " << s.thd_harmonics << "\n";
    return out.str();
}

Scenario with_strategy(const Scenario& s, Strategy strategy) {
    Scenario out = s;
    out.strategy = strategy;
    if (strategy == Strategy::Proposed) return out;
    if (s.has_backend()) {
        out.backend = FixedDcLink{s.backend_config().total_voltage()};
        out.offsets.clear();
    }
    return out;
}

}  // namespace pulsedrive
