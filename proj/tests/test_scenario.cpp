#include <catch_amalgamated.hpp>

#include <string>

#include "pulsedrive/runner.hpp"
#include "pulsedrive/scenario.hpp"

using namespace pulsedrive;
using Catch::Approx;

namespace {

std::string string16_text() { return read_text_file(PULSEDRIVE_SCENARIO_DIR "/string16_rl.ini"); }

bool mentions(const ValidationError& e, std::string_view key) {
    for (const auto& issue : e.issues()) {
        if (issue.find(key) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("reference string document parses to its operating point") {
    const Scenario s = parse_scenario(string16_text());
    CHECK(s.strategy == Strategy::Proposed);
    REQUIRE(s.has_backend());
    const auto& cfg = s.backend_config();
    CHECK(cfg.n_mdl() == 16);
    CHECK(cfg.modules[0].v_mdl == 40.0);
    CHECK(cfg.total_voltage() == 640.0);
    CHECK(cfg.f_mdl == 5e3);
    CHECK(s.f_inv == 10e3);
    CHECK(s.filter.L == 30e-6);
    CHECK(s.filter.C == 60e-6);
    CHECK(s.load.kind == LoadKind::SeriesRL);
    CHECK(s.reference.index == 0.95);
    CHECK(s.dc_max() == 640.0);
    CHECK(s.amplitude() == Approx(0.95 * 640.0 / std::sqrt(3.0)));
}

TEST_CASE("missing load.r is named") {
    std::string text = string16_text();
    const auto pos = text.find("r = 1.75");
    REQUIRE(pos != std::string::npos);
    text.erase(pos, 8);
    try {
        (void)parse_scenario(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "load.r"));
    }
}

TEST_CASE("every violation is reported, not just the first") {
    Document doc = Document::parse(string16_text());
    doc.set("filter.L", "-1");
    doc.set("pwm.f_inv", "0");
    doc.set("timing.duration", "10m");
    try {
        (void)scenario_from_document(doc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "filter.L"));
        CHECK(mentions(e, "pwm.f_inv"));
        CHECK(mentions(e, "timing.settle_time"));
    }
}

TEST_CASE("serialised scenarios reparse identically") {
    const Scenario s = parse_scenario(string16_text());
    const std::string once = serialize_scenario(s);
    const Scenario back = parse_scenario(once);
    CHECK(back == s);
    CHECK(serialize_scenario(back) == once);

    Scenario odd = s;
    odd.reference.index = 0.1 + 0.2;
    odd.offsets = {0.05, 0.0, -0.05, 0.0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    odd.load = {LoadKind::RLBackEmf, 0.5, 200e-6, 123.456789012345, -0.7};
    odd.timing.dt = 1e-8;
    odd.seed = 42;
    CHECK(parse_scenario(serialize_scenario(odd)) == odd);

    const Scenario fixed = with_strategy(s, Strategy::SVPWM);
    CHECK(std::get<FixedDcLink>(fixed.backend).voltage == 640.0);
    CHECK(parse_scenario(serialize_scenario(fixed)) == fixed);
}

TEST_CASE("syntax errors carry line and key") {
    const std::string text = "[scenario]\nstrategy = proposed\n\n[load]\nr = 1\nbogus = 3\n";
    try {
        (void)parse_scenario(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 6);
        CHECK(e.key() == "load.bogus");
    }
    try {
        (void)parse_scenario("[load]\nr = 1.2.3\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.key() == "load.r");
    }
    CHECK_THROWS_AS(Document::parse("[load\nr = 1\n"), ParseError);
    CHECK_THROWS_AS(Document::parse("r = 1\n"), ParseError);
    CHECK_THROWS_AS(Document::parse("[load]\njunk\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[scenario]\nstrategy = spwm\n"), ParseError);
}

TEST_CASE("unit suffixes are exact decimal scalings") {
    CHECK(parse_scalar("30u") == 30e-6);
    CHECK(parse_scalar("60u") == 60e-6);
    CHECK(parse_scalar("0.75m") == 0.75e-3);
    CHECK(parse_scalar("5k") == 5e3);
    CHECK(parse_scalar("2.2e1k") == 2.2e4);
    CHECK(parse_scalar("1.5e-3m") == 1.5e-6);
    CHECK(parse_scalar(" -3 ") == -3.0);
    CHECK(parse_scalar("+4") == 4.0);
    CHECK(std::isinf(parse_scalar("inf")));
    CHECK_THROWS_AS(parse_scalar(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_scalar("k"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scalar("3x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scalar("3eu"), std::invalid_argument);
    for (const char* s : {"0.1", "1e-7", "3.3333333333333335", "123456789.125", "5e-324"}) {
        CHECK(parse_scalar(format_double(parse_scalar(s))) == parse_scalar(s));
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(30e-6) == "3e-05");
}

TEST_CASE("command-line overrides replace document values") {
    Document doc = Document::parse(string16_text());
    doc.apply_override("reference.index=0.5");
    doc.apply_override("devices.igbt.r_on = 4m");
    const Scenario s = scenario_from_document(doc);
    CHECK(s.reference.index == 0.5);
    CHECK(s.igbt.r_on == 4e-3);
    CHECK(doc.find("reference.index")->line == 0);
    CHECK_THROWS_AS(doc.apply_override("index=0.5"), ParseError);
    CHECK_THROWS_AS(doc.apply_override("reference.index"), ParseError);
    doc.apply_override("reference.unknown=1");
    CHECK_THROWS_AS(scenario_from_document(doc), ParseError);
}

TEST_CASE("every invariant is reachable by mutating a valid document") {
    struct Mutation {
        const char* path;
        const char* value;
        const char* named;
    };
    const Mutation cases[] = {
        {"scenario.strategy", "svpwm", "scenario.strategy"},
        {"reference.index", "-0.1", "reference.index"},
        {"reference.index", "nan", "reference.index"},
        {"reference.phase", "7", "reference.phase"},
        {"reference.frequency", "0", "reference.frequency"},
        {"reference.ramp_time", "-1", "reference.ramp_time"},
        {"backend.modules", "0", "backend.modules"},
        {"backend.v_mdl", "0", "backend.v_mdl"},
        {"backend.f_mdl", "0", "backend.f_mdl"},
        {"backend.r_int", "-1", "backend.r_int"},
        {"backend.capacity", "0", "backend.capacity"},
        {"backend.soc0", "1.5", "backend.soc0"},
        {"backend.offsets", "0.1, -0.1", "backend.offsets"},
        {"backend.offsets", "0.1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0", "backend.offsets"},
        {"pwm.f_inv", "0", "pwm.f_inv"},
        {"filter.L", "0", "filter.L"},
        {"filter.C", "-1u", "filter.C"},
        {"filter.r_L", "-1", "filter.r_L"},
        {"filter.r_eq", "0", "filter.r_eq"},
        {"load.r", "-1", "load.r"},
        {"load.l", "-1", "load.l"},
        {"load.emf_amplitude", "10", "load.emf_amplitude"},
        {"load.i_peak", "-1", "load.i_peak"},
        {"devices.igbt.v_on0", "-1", "devices.igbt.v_on0"},
        {"devices.igbt.r_on", "-1", "devices.igbt.r_on"},
        {"devices.igbt.e_on", "-1", "devices.igbt.e_on"},
        {"devices.igbt.e_off", "-1", "devices.igbt.e_off"},
        {"devices.igbt.e_rr", "-1", "devices.igbt.e_rr"},
        {"devices.igbt.v_ref", "0", "devices.igbt.v_ref"},
        {"devices.fet.i_ref", "0", "devices.fet.i_ref"},
        {"timing.duration", "0", "timing.duration"},
        {"timing.trace_dt", "0", "timing.trace_dt"},
        {"timing.settle_time", "-1", "timing.settle_time"},
        {"timing.settle_time", "90m", "timing.settle_time"},
        {"timing.dt", "-1", "timing.dt"},
        {"timing.dt", "1u", "timing.dt"},
        {"metrics.thd_harmonics", "0", "metrics.thd_harmonics"},
        {"metrics.thd_harmonics", "20000", "metrics.thd_harmonics"},
    };
    for (const auto& m : cases) {
        CAPTURE(m.path, m.value);
        Document doc = Document::parse(string16_text());
        doc.set(m.path, m.value);
        try {
            (void)scenario_from_document(doc);
            FAIL("mutation accepted");
        } catch (const ValidationError& e) {
            CHECK(mentions(e, m.named));
        }
    }

    // Fixed link: offsets and the proposed strategy are rejected.
    Document fixed = Document::parse(
        "[scenario]\nstrategy = svpwm\n[reference]\nindex = 0.5\n[backend]\nkind = fixed\n"
        "voltage = 640\n[load]\nr = 2\nl = 1m\n");
    CHECK_NOTHROW(scenario_from_document(fixed));
    fixed.set("scenario.strategy", "proposed");
    CHECK_THROWS_AS(scenario_from_document(fixed), ValidationError);
    fixed.set("scenario.strategy", "dpwm");
    fixed.set("backend.voltage", "0");
    CHECK_THROWS_AS(scenario_from_document(fixed), ValidationError);
    fixed.set("backend.voltage", "640");
    fixed.set("backend.offsets", "0");
    CHECK_THROWS_AS(scenario_from_document(fixed), ValidationError);
}

TEST_CASE("baselines derived from a battery string") {
    Scenario s = parse_scenario(string16_text());
    s.offsets.assign(16, 0.0);
    const Scenario d = with_strategy(s, Strategy::DPWM);
    CHECK(d.strategy == Strategy::DPWM);
    CHECK_FALSE(d.has_backend());
    CHECK(d.offsets.empty());
    CHECK(d.amplitude() == s.amplitude());
    CHECK(with_strategy(s, Strategy::Proposed) == s);
    CHECK_FALSE(validation_issues(with_strategy(d, Strategy::Proposed)).empty());
}
