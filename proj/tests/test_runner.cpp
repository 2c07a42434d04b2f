#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pulsedrive/runner.hpp"

using namespace pulsedrive;
namespace fs = std::filesystem;

namespace {

const char* kBase =
    "[scenario]\nstrategy = svpwm\n"
    "[reference]\nindex = 0.75\n"
    "[backend]\nkind = fixed\nvoltage = 640\n"
    "[load]\nr = 1.75\nl = 200u\n"
    "[timing]\nduration = 60m\nsettle_time = 20m\ntrace_dt = 2u\n";

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pulsedrive_test_runner_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string csv(const std::vector<MetricsReport>& rows) {
    std::ostringstream out;
    write_metrics_csv(out, rows);
    return out.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("identical scenarios give byte-identical rows") {
    const Scenario sc = parse_scenario(kBase);
    const auto a = run_scenario(sc);
    const auto b = run_scenario(sc);
    CHECK(csv({a.report}) == csv({b.report}));
    std::ostringstream ta;
    std::ostringstream tb;
    write_trace_csv(ta, a.result.trace);
    write_trace_csv(tb, b.result.trace);
    CHECK(ta.str() == tb.str());
}

TEST_CASE("single-point sweep equals one run") {
    const auto grid = parse_sweep(std::string(kBase) + "[sweep]\nreference.index = 0.75\n");
    REQUIRE(grid.point_count() == 1);
    const auto rows = sweep(grid);
    REQUIRE(rows.size() == 1);
    CHECK(csv(rows) == csv({run_scenario(parse_scenario(kBase)).report}));
}

TEST_CASE("sweep rows follow axis order with the last axis fastest") {
    const auto grid = parse_sweep(std::string(kBase) +
                                  "[sweep]\nreference.index = 0.3, 0.6\n"
                                  "scenario.strategy = svpwm, dpwm\nload.l = 200u\n");
    CHECK(grid.axes.size() == 3);
    CHECK(grid.point_count() == 4);
    const auto serial = sweep(grid, 1);
    const auto parallel = sweep(grid, 3);
    CHECK(csv(serial) == csv(parallel));
    REQUIRE(serial.size() == 4);
    CHECK(serial[0].m == 0.3);
    CHECK(serial[0].strategy == Strategy::SVPWM);
    CHECK(serial[1].m == 0.3);
    CHECK(serial[1].strategy == Strategy::DPWM);
    CHECK(serial[2].m == 0.6);
    CHECK(serial[3].strategy == Strategy::DPWM);
    for (const auto& r : serial) CHECK(r.error.empty());
}

TEST_CASE("one-value axis leaves the base run unchanged") {
    const auto base = run_scenario(parse_scenario(kBase)).report;
    const auto rows = sweep(parse_sweep(std::string(kBase) + "[sweep]\nload.r = 1.75\n"));
    CHECK(csv(rows) == csv({base}));
}

TEST_CASE("sweep failures stay in their row") {
    const auto rows = sweep(parse_sweep(std::string(kBase) + "[sweep]\nload.r = 1.75, -1\n"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].error.empty());
    CHECK(rows[1].error.find("load.r") != std::string::npos);
    const auto text = lines(csv(rows));
    REQUIRE(text.size() == 3);
    CHECK(text[2].back() != ',');
}

TEST_CASE("sweep size cap") {
    CHECK_THROWS_AS(parse_sweep(std::string(kBase) +
                                "[sweep]\nmax_points = 3\nreference.index = 0.1, 0.2\nload.r = 1, 2\n"),
                    ValidationError);
    CHECK_THROWS_AS(parse_sweep(std::string(kBase) + "[sweep]\nindex = 0.1\n"), ParseError);
    CHECK_THROWS_AS(parse_sweep(std::string(kBase) + "[sweep]\nreference.index = 0.1,,0.2\n"),
                    ParseError);
}

TEST_CASE("load matching draws the requested current") {
    const Scenario base = parse_scenario(kBase);
    Scenario sc = base;
    sc.i_peak = 100.0;
    const Scenario m = match_load(sc, 0.75, 0.8, 100.0);
    CHECK(m.load.kind == LoadKind::RLBackEmf);
    const auto rep = run_scenario(m).report;
    CHECK(rep.i_fund_rms * std::sqrt(2.0) == Catch::Approx(100.0).epsilon(0.02));
    CHECK_THROWS_AS(match_load(sc, 0.75, 0.0, 100.0), ValidationError);
    CHECK_THROWS_AS(match_load(sc, 0.75, 0.8, 0.0), ValidationError);
}

TEST_CASE("artifacts carry one row per sample plus a header") {
    const auto out = run_scenario(parse_scenario(kBase));
    const fs::path dir = scratch("artifacts") / "nested";
    emit_artifacts(out.result.trace, {out.report}, dir);
    const std::string trace = slurp(dir / "trace.csv");
    const auto rows = lines(trace);
    CHECK(rows.size() == out.result.trace.size() + 1);
    CHECK(rows.front() == "t,v_dc1,v_dc2,i_L,i_a,i_b,i_c,n_series,gate_a,gate_b,gate_c");
    CHECK(trace.find('\r') == std::string::npos);
    const auto metrics = lines(slurp(dir / "metrics.csv"));
    REQUIRE(metrics.size() == 2);
    CHECK(metrics[0] ==
          "strategy,m,pf,p_out_w,cond_igbt_w,sw_igbt_w,cond_fet_w,sw_fet_w,total_loss_w,thd_ia,"
          "ripple_pp_v,sur,commutations_frontend,commutations_backend,error");
    CHECK(metrics[1].rfind("svpwm,0.75,", 0) == 0);

    emit_artifacts(out.result.trace, {out.report}, dir);
    CHECK(slurp(dir / "trace.csv") == trace);
}

TEST_CASE("battery traces list every module current") {
    SimTrace tr;
    tr.n_modules = 2;
    tr.t = {0.0};
    tr.v_dc1 = {40.0};
    tr.v_dc2 = {39.5};
    tr.i_L = {1.5};
    tr.i_a = {0.1};
    tr.i_b = {0.2};
    tr.i_c = {-0.30000000000000004};
    tr.n_series = {1};
    tr.gates = {GateVector{{Leg::High, Leg::Low, Leg::Low}}};
    tr.i_mdl = {{1.5}, {0.0}};
    std::ostringstream out;
    write_trace_csv(out, tr);
    CHECK(out.str() ==
          "t,v_dc1,v_dc2,i_L,i_a,i_b,i_c,n_series,gate_a,gate_b,gate_c,i_mdl_1,i_mdl_2\n"
          "0,40,39.5,1.5,0.1,0.2,-0.30000000000000004,1,1,0,0,1.5,0\n");
}

TEST_CASE("io errors name the path") {
    const fs::path missing = scratch("io") / "absent.ini";
    try {
        (void)read_text_file(missing);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.path() == missing);
    }
    const fs::path blocker = scratch("io2") / "file";
    write(blocker, "x");
    CHECK_THROWS_AS(emit_artifacts(SimTrace{}, {}, blocker / "sub"), IoError);
}

#ifdef PULSEDRIVE_SIM_EXE
namespace {

int sim(const std::string& args, const fs::path& out) {
    const std::string cmd = std::string(PULSEDRIVE_SIM_EXE) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    write(dir / "ok.ini", kBase);
    write(dir / "bad.ini", std::string(kBase) + "[filter]\nC = -1\n");
    write(dir / "typo.ini", std::string(kBase) + "[load]\nrr = 1\n");
    const fs::path log = dir / "log.txt";

    CHECK(sim("run " + (dir / "ok.ini").string(), log) == 0);
    CHECK(lines(slurp(log)).size() == 2);
    CHECK(sim("run " + (dir / "ok.ini").string() + " --set reference.index=0.5 --out " +
                  (dir / "out").string(),
              log) == 0);
    CHECK(fs::exists(dir / "out" / "trace.csv"));
    CHECK(lines(slurp(dir / "out" / "metrics.csv"))[1].rfind("svpwm,0.5,", 0) == 0);

    CHECK(sim("run " + (dir / "bad.ini").string(), log) == 2);
    CHECK(slurp(log).find("filter.C") != std::string::npos);
    CHECK(sim("run " + (dir / "typo.ini").string(), log) == 2);
    CHECK(sim("run " + (dir / "ok.ini").string() + " --set reference.index=abc", log) == 2);
    CHECK(sim("run " + (dir / "missing.ini").string(), log) == 4);
    CHECK(sim("run", log) == 2);
    CHECK(sim("bogus", log) == 2);
    CHECK(sim("run " + (dir / "ok.ini").string() + " --set timing.duration=10 --set timing.dt=1e-3", log) == 2);

    CHECK(sim("freq-response --L 30u --C 60u --Req 3 --f 1k", log) == 0);
    const auto fr = lines(slurp(log));
    REQUIRE(fr.size() == 2);
    CHECK(fr[0] == "f,gain,phase_deg");
    CHECK(fr[1].rfind("1000,1.07", 0) == 0);
    CHECK(sim("freq-response --L 0 --C 60u --f 1k", log) == 2);

    write(dir / "sweep.ini", std::string(kBase) + "[sweep]\nreference.index = 0.4, 0.8\n");
    CHECK(sim("sweep " + (dir / "sweep.ini").string() + " --jobs 2", log) == 0);
    CHECK(lines(slurp(log)).size() == 3);
    write(dir / "sweep_bad.ini", std::string(kBase) + "[sweep]\nload.r = -1\n");
    CHECK(sim("sweep " + (dir / "sweep_bad.ini").string(), log) == 3);
}
#endif
