#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pucci/runner.hpp"

using namespace pucci;
namespace fs = std::filesystem;

namespace {

// fresh scratch directory per call; paths stay short enough for logs
fs::path scratch(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("runner_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunOutcome run_quiet(const LoadedConfig& cfg) {
    std::ostringstream log;
    return run(cfg, log);
}

size_t count_lines(const std::string& s) {
    size_t n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("an mc run writes the declared artifacts") {
    fs::path dir = scratch("mc");
    LoadedConfig cfg = parse_config_text(
        "[problem]\nlam = 1\nLam = 1\n"
        "[solver]\nsolver = mc_fixed_control\nn_paths = 500\ndt = 2e-3\nseed = 7\n"
        "eval_points = 0 0 ; 0.5 0\noutput = " + (dir / "out").string() + "\n");
    RunOutcome rc = run_quiet(cfg);
    CHECK(rc.exit_code == 0);

    std::string csv = slurp(dir / "out" / "values.csv");
    // header + one row per eval point, LF endings
    CHECK(count_lines(csv) == 3);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.rfind("x1,x2,estimate,stderr,solver,runtime_ms,seed\n", 0) == 0);
    CHECK(csv.find("mc_fixed_control") != std::string::npos);
    CHECK(csv.find(",0,7\n") != std::string::npos);  // runtime_ms pinned, seed echoed

    std::string rep = slurp(dir / "out" / "report.txt");
    CHECK(rep.find("mc_fixed_control") != std::string::npos);

    // the estimate at the center is near the disc closed form
    std::istringstream rows(csv.substr(csv.find('\n') + 1));
    std::string line;
    REQUIRE(std::getline(rows, line));
    double x1, x2, est, se;
    char comma;
    std::istringstream cells(line);
    cells >> x1 >> comma >> x2 >> comma >> est >> comma >> se;
    CHECK(x1 == 0.0);
    CHECK(std::fabs(est - 0.5) < 0.5);
    CHECK(se > 0.0);
}

TEST_CASE("grid solvers write grid.csv with node kinds") {
    fs::path dir = scratch("grid");
    LoadedConfig cfg = parse_config_text(
        "[solver]\nsolver = dpp_grid\nh = 0.1\noutput = " + (dir / "g").string() + "\n");
    CHECK(run_quiet(cfg).exit_code == 0);
    std::string grid = slurp(dir / "g" / "grid.csv");
    CHECK(grid.rfind("x1,x2,kind,value,policy\n", 0) == 0);
    CHECK(grid.find("interior") != std::string::npos);
    CHECK(grid.find("boundary_band") != std::string::npos);
    CHECK(grid.find("exterior") != std::string::npos);
    std::string csv = slurp(dir / "g" / "values.csv");
    CHECK(csv.find("dpp_grid") != std::string::npos);

    fs::path dir2 = scratch("grid_fd");
    LoadedConfig cfg2 = parse_config_text(
        "[solver]\nsolver = fd_oracle\nh = 0.1\noutput = " + (dir2 / "g").string() + "\n");
    CHECK(run_quiet(cfg2).exit_code == 0);
    CHECK(slurp(dir2 / "g" / "values.csv").find("fd_oracle") != std::string::npos);
}

TEST_CASE("values.csv is byte-identical across reruns and thread counts") {
    auto run_once = [](const std::string& tag, int threads) {
        fs::path dir = scratch(tag);
        LoadedConfig cfg = parse_config_text(
            "[problem]\nf = 1\ng = x1\n"
            "[solver]\nsolver = mc_fixed_control\nn_paths = 2000\ndt = 2e-3\nseed = 99\n"
            "threads = " + std::to_string(threads) + "\n"
            "eval_points = 0 0 ; 0.3 -0.2\noutput = " + (dir / "o").string() + "\n");
        REQUIRE(run_quiet(cfg).exit_code == 0);
        return slurp(dir / "o" / "values.csv");
    };
    std::string a = run_once("det_a", 1);
    std::string b = run_once("det_b", 1);
    std::string c = run_once("det_c", 3);
    CHECK(a == b);
    CHECK(a == c);

    auto run_grid = [](const std::string& tag, int threads) {
        fs::path dir = scratch(tag);
        LoadedConfig cfg = parse_config_text(
            "[solver]\nsolver = dpp_grid\nh = 0.1\nthreads = " + std::to_string(threads) +
            "\noutput = " + (dir / "o").string() + "\n");
        REQUIRE(run_quiet(cfg).exit_code == 0);
        return slurp(dir / "o" / "values.csv") + slurp(dir / "o" / "grid.csv");
    };
    std::string ga = run_grid("det_ga", 1);
    std::string gb = run_grid("det_gb", 2);
    CHECK(ga == gb);
}

TEST_CASE("declared consistency failures surface as exit code 2") {
    fs::path dir = scratch("fail");
    // one sweep cannot reach the fixed point from a cold start
    LoadedConfig cfg = parse_config_text(
        "[solver]\nsolver = dpp_grid\nh = 0.1\nmax_iter = 1\ncascade = off\noutput = " +
        (dir / "o").string() + "\n");
    RunOutcome rc = run_quiet(cfg);
    CHECK(rc.exit_code == 2);
    CHECK_FALSE(rc.note.empty());
    // artifacts are still written for post-mortems
    CHECK(fs::exists(dir / "o" / "values.csv"));
}

TEST_CASE("cross check runs all three lanes and stays consistent") {
    fs::path dir = scratch("cross");
    LoadedConfig cfg = parse_config_text(
        "[problem]\nf = -1\ng = x1/4\n"
        "[solver]\nsolver = cross_check\nh = 0.1\nn_paths = 2000\nseed = 5\noutput = " +
        (dir / "o").string() + "\n");
    RunOutcome rc = run_quiet(cfg);
    CHECK(rc.exit_code == 0);
    std::string csv = slurp(dir / "o" / "values.csv");
    CHECK(csv.find("dpp_grid") != std::string::npos);
    CHECK(csv.find("fd_oracle") != std::string::npos);
    CHECK(csv.find("mc_replay") != std::string::npos);
    CHECK(fs::exists(dir / "o" / "grid.csv"));
    CHECK(fs::exists(dir / "o" / "grid_fd.csv"));
}

TEST_CASE("the radial reference covers exactly the constant-ball family") {
    LoadedConfig c = parse_config_text("");
    CHECK(radial_reference(c.problem, {0.0, 0.0}) == doctest::Approx(0.5));
    CHECK(radial_reference(c.problem, {0.5, 0.0}) == doctest::Approx(0.375));
    LoadedConfig cneg = parse_config_text("[problem]\nf = -1\n");
    CHECK(radial_reference(cneg.problem, {0.0, 0.0}) == doctest::Approx(-0.25));
    LoadedConfig cg = parse_config_text("[problem]\nf = -1\ng = 2\n");
    CHECK(radial_reference(cg.problem, {0.0, 0.0}) == doctest::Approx(1.75));
    LoadedConfig cbox = parse_config_text("[problem]\ndomain = box\nlo = 0 0\nhi = 1 1\n");
    CHECK(std::isnan(radial_reference(cbox.problem, {0.5, 0.5})));
    LoadedConfig cf = parse_config_text("[problem]\nf = x1\n");
    CHECK(std::isnan(radial_reference(cf.problem, {0.0, 0.0})));
}

TEST_CASE("dt study on the disc shows the monitor bias shrinking") {
    fs::path dir = scratch("study_dt");
    LoadedConfig cfg = parse_config_text(
        "[problem]\nlam = 1\nLam = 1\n"
        "[solver]\nsolver = mc_fixed_control\nn_paths = 8000\nseed = 21\n"
        "eval_points = 0 0\noutput = " + (dir / "o").string() + "\n");
    std::ostringstream log;
    StudyResult st = convergence_study(cfg, "dt", {1e-2, 1e-3, 1e-4}, log);
    CHECK(st.knob == "dt");
    CHECK(st.have_exact);
    CHECK(st.exact == doctest::Approx(0.5));
    REQUIRE(st.rows.size() == 3);
    // the discrete-monitoring bias dominates the sampling noise here, so the
    // error column must fall monotonically as dt shrinks
    CHECK(st.rows[0].error > st.rows[1].error);
    CHECK(st.rows[1].error > st.rows[2].error);
    CHECK(st.rows[0].error < 0.12);
    CHECK(st.rows[2].error < 0.02);
    // the study table landed in the log
    CHECK(log.str().find("dt") != std::string::npos);
}

TEST_CASE("h study on an annulus shows first-order-or-better convergence") {
    // curvature in f and an off-node query keep the discretization error
    // well above the solver tolerance across the whole ladder
    fs::path dir = scratch("study_h");
    LoadedConfig cfg = parse_config_text(
        "[problem]\ndomain = annulus\ninner_radius = 0.4\nouter_radius = 1.4\n"
        "f = sin(3*x1)*cos(2*x2)\ng = x1/2\n"
        "[solver]\nsolver = fd_oracle\ntol = 1e-9\neval_points = 0.905 0.013\noutput = " +
        (dir / "o").string() + "\n");
    std::ostringstream log;
    StudyResult st = convergence_study(cfg, "h", {0.1, 0.05, 0.025}, log);
    CHECK_FALSE(st.have_exact);  // errors are against the finest run
    REQUIRE(st.rows.size() == 3);
    CHECK(st.rows[0].error > 0.0);
    CHECK(st.rows[1].error > 0.0);
    CHECK(st.rows[1].error < st.rows[0].error);
    double order = std::log2(st.rows[0].error / st.rows[1].error);
    CHECK(order > 0.8);
}

TEST_CASE("n_paths study echoes the ladder and stays near the value") {
    fs::path dir = scratch("study_n");
    LoadedConfig cfg = parse_config_text(
        "[problem]\nlam = 1\nLam = 1\n"
        "[solver]\nsolver = mc_fixed_control\ndt = 1e-3\nseed = 4\n"
        "eval_points = 0 0\noutput = " + (dir / "o").string() + "\n");
    std::ostringstream log;
    StudyResult st = convergence_study(cfg, "n_paths", {1000, 4000, 16000}, log);
    REQUIRE(st.rows.size() == 3);
    // the error column sits on the dt bias floor here, so no decay claim;
    // every rung must land within bias plus sampling noise of the value
    CHECK(st.rows[0].knob == 1000);
    CHECK(st.rows[2].knob == 16000);
    for (const StudyRow& r : st.rows) CHECK(std::fabs(r.estimate - 0.5) < 0.05);
}

TEST_CASE("unknown study knobs are rejected") {
    LoadedConfig cfg = parse_config_text("");
    std::ostringstream log;
    CHECK_THROWS_AS((void)convergence_study(cfg, "bananas", {1.0}, log), ConfigError);
    CHECK_THROWS_AS((void)convergence_study(cfg, "dt", {}, log), ConfigError);
}
