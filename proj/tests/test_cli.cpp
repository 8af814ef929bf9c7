#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "iafc/commands.hpp"

using namespace iafc;
using namespace iafc::cli;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("iafc_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(IAFC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

RunConfig quick(const fs::path& dir)
{
    RunConfig c;
    c.out_dir = dir.string();
    return c;
}

} // namespace

TEST_CASE("config text round-trips and rejects bad input", "[cli][config]")
{
    RunConfig c;
    std::istringstream in("# comment\n total_depth = 12.5 \nfinesses = 20, 40\n\nseed=9  # trailing\nplot = true\n");
    load_config(in, c);
    CHECK(c.total_depth == 12.5);
    CHECK(c.finesses == std::vector<double>{20.0, 40.0});
    CHECK(c.seed == 9);
    CHECK(c.plot);

    RunConfig back;
    std::istringstream text(c.to_text());
    load_config(text, back);
    CHECK(back.to_text() == c.to_text());
    CHECK(back.total_depth == c.total_depth);

    std::istringstream unknown("not_a_key = 1\n");
    CHECK_THROWS_AS(load_config(unknown, c), ValidationError);
    std::istringstream malformed("total_depth 1\n");
    CHECK_THROWS_AS(load_config(malformed, c), ValidationError);
    CHECK_THROWS_AS(c.set("total_depth", "abc"), ValidationError);
    CHECK_THROWS_AS(c.set("trials", "-3"), ValidationError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/iafc.cfg", c), IoError);

    RunConfig bad;
    bad.n_teeth = 4;
    CHECK_THROWS_AS(validate(bad, "simulate"), ValidationError);
    bad = RunConfig{};
    bad.delta = bad.gamma / 2.0;
    CHECK_THROWS_AS(validate(bad, "simulate"), FinesseError);
}

TEST_CASE("CSV writer and reader agree", "[cli][csv]")
{
    std::stringstream s;
    csv::Writer w(s);
    w.meta({{"command", "test"}, {"note", "a: b"}}).header({"x", "y"});
    w.row({0.1, 1.0 / 3.0});
    w.row({-2e-300, 5.0});
    const auto t = csv::read(s);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.metadata[0] == std::pair<std::string, std::string>{"command", "test"});
    CHECK(t.metadata[1].second == "a: b");
    CHECK(t.rows[0][1] == 1.0 / 3.0);
    CHECK(t.rows[1][0] == -2e-300);
    CHECK(t.column("y") == 1);
    CHECK_THROWS_AS(t.column("z"), ValidationError);

    std::istringstream ragged("x,y\n1,2\n3\n");
    CHECK_THROWS_AS(csv::read(ragged), ValidationError);
    std::istringstream text("x,y\n1,abc\n");
    CHECK_THROWS_AS(csv::read(text), ValidationError);
}

TEST_CASE("simulate writes traces with the echo at one period", "[cli][simulate]")
{
    const auto dir = scratch("simulate");
    auto c = quick(dir);
    c.plot = true;
    std::ostringstream log;
    const auto s = cmd_simulate(c, log);
    CHECK(s.peak.reliable);
    CHECK(std::abs(s.peak.time - units::two_pi / c.delta) <= units::two_pi / c.delta * 0.05);
    CHECK(s.efficiency > 0.0);
    CHECK(s.efficiency < 1.0);

    const auto summary = csv::read_file((dir / "simulate_summary.csv").string());
    CHECK(summary.rows.at(0).at(summary.column("eta")) == s.efficiency);
    const auto output = csv::read_file((dir / "simulate_output.csv").string());
    CHECK(output.header == std::vector<std::string>{"t", "re", "im", "intensity"});
    CHECK(output.rows.size() == 16384);
    CHECK(fs::exists(dir / "simulate_spectrum.csv"));
    CHECK(fs::exists(dir / "simulate_intensity.svg"));
    bool has_command = false;
    for (const auto& [k, v] : output.metadata) has_command |= k == "command" && v == "simulate";
    CHECK(has_command);
}

TEST_CASE("an empty comb gives zero efficiency", "[cli][simulate]")
{
    auto c = quick(scratch("zero"));
    c.total_depth = 0.0;
    std::ostringstream log;
    CHECK(cmd_simulate(c, log).efficiency < 1e-12);
}

TEST_CASE("a comb file drives the simulation", "[cli][simulate]")
{
    const auto dir = scratch("combfile");
    std::ostringstream file;
    write_comb(file, uniform_comb(7, units::from_mhz(100.0), units::from_mhz(5.0), 30.0));
    write_text(dir / "comb.txt", file.str());
    auto from_file = quick(dir);
    from_file.comb_file = (dir / "comb.txt").string();
    std::ostringstream log;
    const double a = cmd_simulate(from_file, log).efficiency;
    const double b = cmd_simulate(quick(dir), log).efficiency;
    CHECK(a == Approx(b).epsilon(1e-12));
}

TEST_CASE("sweep replay from the manifest reproduces every curve", "[cli][sweep]")
{
    const auto dir = scratch("sweep");
    auto c = quick(dir);
    c.strengths = {0.0, 10.0, 20.0};
    c.finesses = {20.0};
    c.trials = 12;
    c.seed = 5;
    std::ostringstream log;
    const auto curves = cmd_sweep(c, DisorderKind::spacing, false, log);
    REQUIRE(curves.size() == 1);

    const auto replay = dir / "replay";
    REQUIRE(run_cli("sweep-spacing --config " + (dir / "manifest.cfg").string() + " --out-dir " + replay.string()) ==
            0);
    const auto first = csv::read_file((dir / "sweep_spacing_F20.csv").string());
    const auto second = csv::read_file((replay / "sweep_spacing_F20.csv").string());
    CHECK(first.header == second.header);
    CHECK(first.rows == second.rows);

    // the zero-strength point is the clean simulation
    auto sim = quick(scratch("sweep_sim"));
    CHECK(curves[0].ordinate[0] == Approx(cmd_simulate(sim, log).efficiency).epsilon(1e-12));
    CHECK(curves[0].errors[0] == 0.0);
}

TEST_CASE("fit-backward on a file input and the gate exit code", "[cli][fit]")
{
    const auto dir = scratch("fit");
    std::ostringstream good;
    good << "L,eta\n";
    for (int i = 1; i <= 12; ++i) {
        const double x = 0.3 * i;
        good << i << "," << 0.9 * x * x * std::exp(-x) << "\n";
    }
    write_text(dir / "good.csv", good.str());
    auto c = quick(dir);
    c.input = (dir / "good.csv").string();
    std::ostringstream log;
    BackwardEstimate est;
    CHECK(cmd_fit_backward(c, log, &est) == cli::ok);
    CHECK(est.fit.eta0 == Approx(0.9).epsilon(1e-6));
    CHECK(est.fit.alpha_tilde == Approx(0.3).epsilon(1e-6));
    CHECK(fs::exists(dir / "backward.csv"));

    // a strongly non-model curve fails the gate
    std::ostringstream bad;
    bad << "L,eta\n";
    for (int i = 1; i <= 12; ++i) bad << i << "," << (i % 2 ? 0.6 : 0.1) << "\n";
    write_text(dir / "bad.csv", bad.str());
    c.input = (dir / "bad.csv").string();
    CHECK(cmd_fit_backward(c, log) == cli::gate_failed);
    CHECK(run_cli("fit-backward --set input=" + c.input + " --out-dir " + dir.string()) == 3);
    CHECK(run_cli("fit-backward --set input=" + c.input + " --set gate_threshold=10 --out-dir " + dir.string()) == 0);
}

TEST_CASE("thermal with equal energies is temperature independent", "[cli][thermal]")
{
    const auto dir = scratch("thermal");
    auto c = quick(dir);
    c.ground_energies = std::vector<double>(7, 0.0);
    c.temperatures = {4.0, 300.0};
    std::ostringstream log;
    const auto pts = cmd_thermal(c, log);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].efficiency == pts[1].efficiency);
    auto sim = quick(scratch("thermal_sim"));
    CHECK(pts[0].efficiency == cmd_simulate(sim, log).efficiency);

    // one ground state feeding every tooth also reproduces the clean comb
    c.ground_energies = {0.0};
    c.tooth_assignment = std::vector<std::size_t>(7, 0);
    const auto single = cmd_thermal(c, log);
    CHECK(single[0].weights == std::vector<double>{1.0});
    CHECK(single[0].efficiency == Approx(pts[0].efficiency).epsilon(1e-12));
    CHECK(fs::exists(dir / "thermal_weights.csv"));
}

TEST_CASE("analytic-table covers every finesse and the limit", "[cli][analytic]")
{
    const auto dir = scratch("table");
    auto c = quick(dir);
    c.table_points = 5;
    c.table_finesses = {20.0};
    std::ostringstream log;
    cmd_analytic_table(c, log);
    const auto t = csv::read_file((dir / "analytic_table.csv").string());
    CHECK(t.rows.size() == 10);
    CHECK(std::isinf(t.rows.back()[t.column("finesse")]));
    CHECK(t.rows[2][t.column("eta_f")] == Approx(analytic::eta_forward({t.rows[2][0], 20.0})).epsilon(1e-15));
}

TEST_CASE("command line exit codes", "[cli][exit]")
{
    const auto dir = scratch("exit");
    CHECK(run_cli("analytic-table --out-dir " + dir.string()) == 0);
    CHECK(run_cli("simulate --set comb_file=/nonexistent/comb.txt --out-dir " + dir.string()) == 2);
    CHECK(run_cli("simulate --set n_teeth=4 --out-dir " + dir.string()) == 2);
    CHECK(run_cli("simulate --set no_such_key=1") == 2);
    CHECK(run_cli("simulate --config /nonexistent/x.cfg") == 2);
    CHECK(run_cli("no-such-command") == 2);
    CHECK(run_cli("") == 2);
    write_text(dir / "broken.txt", "0 1\n");
    CHECK(run_cli("simulate --set comb_file=" + (dir / "broken.txt").string() + " --out-dir " + dir.string()) == 2);
}
