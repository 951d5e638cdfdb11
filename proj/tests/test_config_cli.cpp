#include "kftune/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kftune;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("kftune_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args) {
    std::vector<const char*> argv = {"kftune"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("flat config parsing, comments and overrides") {
    TempDir tmp("config");
    write(tmp.file("a.cfg"),
          "# comment\n"
          "tuning.n_seed = 4\n"
          "sim.true_process_var = 0.02, 0.02, 0.002  # inline comment\n"
          "\n"
          "cost.kind=jnees\n");
    FlatConfig cfg = FlatConfig::from_file(tmp.file("a.cfg"));
    CHECK(cfg.get_int("tuning.n_seed", 0) == 4);
    CHECK(cfg.get_doubles("sim.true_process_var", {}) == std::vector<double>{0.02, 0.02, 0.002});
    CHECK(cfg.get_string("cost.kind", "") == "jnees");

    cfg.set("tuning.n_seed=6");
    CHECK(cfg.get_int("tuning.n_seed", 0) == 6);
    CHECK_THROWS_AS(cfg.set("no_equals_sign"), ConfigError);
}

TEST_CASE("config errors carry the line number") {
    TempDir tmp("badcfg");
    write(tmp.file("bad.cfg"), "tuning.n_seed = 4\nthis line is broken\n");
    try {
        FlatConfig::from_file(tmp.file("bad.cfg"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("typed getters validate their input") {
    FlatConfig cfg;
    cfg.set("x", "abc");
    CHECK_THROWS_AS(cfg.get_double("x", 0.0), ConfigError);
    CHECK_THROWS_AS(cfg.get_int("x", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_bool("x", false), ConfigError);
    cfg.set("x", "true");
    CHECK(cfg.get_bool("x", false));
    CHECK(cfg.get_double("missing", 2.5) == 2.5);
}

TEST_CASE("presets pin the three experiment setups") {
    FlatConfig c1;
    apply_preset(c1, "skycrane-1d");
    CHECK(c1.get_string("tuning.parameterization", "") == "1d");
    CHECK(c1.get_int("tuning.n_seed", 0) == 10);
    CHECK(c1.get_int("tuning.max_iterations", 0) == 50);
    CHECK(c1.get_int("sim.n_runs", 0) == 200);
    const ExperimentConfig e1 = experiment_from_config(c1);
    CHECK(bounds_from_config(c1, e1).lower[0] == doctest::Approx(1e-2));
    CHECK(bounds_from_config(c1, e1).upper[0] == doctest::Approx(1.0));

    FlatConfig c2;
    apply_preset(c2, "skycrane-2d");
    CHECK(c2.get_int("tuning.n_seed", 0) == 20);
    CHECK(c2.get_int("tuning.max_iterations", 0) == 80);
    const ExperimentConfig e2 = experiment_from_config(c2);
    const BoxBounds b2 = bounds_from_config(c2, e2);
    CHECK(b2.lower[0] == doctest::Approx(1e-2));
    CHECK(b2.lower[1] == doctest::Approx(1e-3));
    CHECK(b2.upper[0] == doctest::Approx(1.0));
    CHECK(e2.fixed_q_zdd == doctest::Approx(0.1));

    FlatConfig c3;
    apply_preset(c3, "skycrane-3d");
    CHECK(c3.get_int("tuning.n_seed", 0) == 30);
    CHECK(c3.get_int("tuning.max_iterations", 0) == 100);
    const ExperimentConfig e3 = experiment_from_config(c3);
    const BoxBounds b3 = bounds_from_config(c3, e3);
    CHECK(b3.lower[2] == doctest::Approx(1e-3));
    CHECK(b3.upper[2] == doctest::Approx(1.0));

    FlatConfig c4;
    CHECK_THROWS_AS(apply_preset(c4, "nonsense"), ConfigError);
}

TEST_CASE("lqr command writes its report and exits cleanly") {
    TempDir tmp("lqr");
    CHECK(run({"lqr", "--out", tmp.path.string()}) == 0);
    CHECK(fs::exists(tmp.path / "lqr.json"));
    CHECK(fs::exists(tmp.path / "manifest.json"));
    const std::string report = slurp(tmp.file("lqr.json"));
    CHECK(report.find("\"within_tolerance\": true") != std::string::npos);
    CHECK(report.find("\"stable\": true") != std::string::npos);
}

TEST_CASE("lqr rejects a non positive definite input weight") {
    TempDir tmp("lqr2");
    CHECK(run({"lqr", "--set", "control.r_diag=-0.01,0.01", "--out", tmp.path.string()}) == 2);
}

TEST_CASE("altered state weights still stabilize") {
    TempDir tmp("lqr3");
    CHECK(run({"lqr", "--set", "control.q_diag=100,10,100,10,5000,10", "--out", tmp.path.string()}) == 0);
    const std::string report = slurp(tmp.file("lqr.json"));
    CHECK(report.find("\"stable\": true") != std::string::npos);
}

TEST_CASE("tune smoke run emits every output and is byte-deterministic") {
    TempDir tmp_a("tune_a");
    TempDir tmp_b("tune_b");
    const std::vector<std::string> common = {
        "tune", "--preset", "skycrane-1d",
        "--set", "sim.n_runs=8", "--set", "sim.t_steps=30",
        "--set", "tuning.n_seed=3", "--set", "tuning.max_iterations=2",
        "--set", "tuning.direct_evaluations=60",
        "--seed", "42", "--threads", "2",
    };
    auto with_out = [&](const TempDir& d) {
        auto args = common;
        args.push_back("--out");
        args.push_back(d.path.string());
        return args;
    };
    REQUIRE(run(with_out(tmp_a)) == 0);
    REQUIRE(run(with_out(tmp_b)) == 0);

    for (const char* name : {"trace.csv", "surrogate_samples.json", "best.json", "manifest.json"})
        CHECK(fs::exists(tmp_a.path / name));

    const std::string trace_a = slurp(tmp_a.file("trace.csv"));
    const std::string trace_b = slurp(tmp_b.file("trace.csv"));
    CHECK(trace_a == trace_b);
    CHECK(trace_a.rfind("iteration,q1,cost,incumbent_cost\n", 0) == 0);
    // 3 seeds + 2 proposals plus the header
    CHECK(std::count(trace_a.begin(), trace_a.end(), '\n') == 6);
}

TEST_CASE("validate consumes best.json and writes the report set") {
    TempDir tmp("validate");
    // A hand-written candidate at the matched point.
    write(tmp.file("best.json"), "{\"q\": [0.1], \"parameterization\": \"1d\", \"cost\": 0.0}\n");
    const int code = run({"validate", tmp.file("best.json"),
                          "--set", "sim.n_runs=40", "--set", "validate.rmse_repeats=10",
                          "--seed", "7", "--threads", "2",
                          "--out", tmp.path.string()});
    CHECK(code == 0);
    CHECK(fs::exists(tmp.path / "consistency.json"));
    CHECK(fs::exists(tmp.path / "consistency.csv"));
    CHECK(fs::exists(tmp.path / "rmse.csv"));
    const std::string csv = slurp(tmp.file("consistency.csv"));
    CHECK(csv.rfind("k,stat,lower,upper,flag\n", 0) == 0);
    const std::string json = slurp(tmp.file("consistency.json"));
    CHECK(json.find("consistent") != std::string::npos);
}

TEST_CASE("validate rejects empty and malformed candidate files") {
    TempDir tmp("validate2");
    write(tmp.file("empty.json"), "");
    CHECK(run({"validate", tmp.file("empty.json"), "--out", tmp.path.string()}) == 2);
    write(tmp.file("noq.json"), "{\"cost\": 1.0}");
    CHECK(run({"validate", tmp.file("noq.json"), "--out", tmp.path.string()}) == 2);
    CHECK(run({"validate", tmp.file("missing.json"), "--out", tmp.path.string()}) == 2);
}

TEST_CASE("replay round-trips the in-process NIS series") {
    TempDir tmp("replay");
    ExperimentConfig cfg = ExperimentConfig::make_default();
    cfg.n_runs = 1;
    cfg.t_steps = 40;
    cfg.master_seed = 11;
    const Rollout roll = simulate_truth(cfg, 0, 0);
    REQUIRE_FALSE(roll.excluded());

    std::ostringstream csv;
    csv << "t,z1,z2,z3,z4,u1,u2\n";
    csv.precision(17);
    for (size_t k = 0; k < roll.measurements.size(); ++k) {
        csv << 0.1 * static_cast<double>(k + 1);
        for (int i = 0; i < 4; ++i) csv << ',' << roll.measurements[k][i];
        for (int i = 0; i < 2; ++i) csv << ',' << roll.controls[k][i];
        csv << '\n';
    }
    write(tmp.file("log.csv"), csv.str());

    const ReplayResult res = replay_measurements(tmp.file("log.csv"), cfg, cfg.matched_q());
    REQUIRE(res.nis.size() == roll.nis.size());
    for (size_t k = 0; k < res.nis.size(); ++k)
        CHECK(res.nis[k] == doctest::Approx(roll.nis[k]).epsilon(1e-12));

    // And through the command itself.
    CHECK(run({"replay", tmp.file("log.csv"), "--out", tmp.path.string()}) == 0);
    CHECK(fs::exists(tmp.path / "nis_series.csv"));
}

TEST_CASE("replay rejects malformed and empty logs") {
    TempDir tmp("replay2");
    write(tmp.file("empty.csv"), "");
    CHECK(run({"replay", tmp.file("empty.csv"), "--out", tmp.path.string()}) == 2);

    write(tmp.file("headeronly.csv"), "t,z1,z2,z3,z4,u1,u2\n");
    CHECK(run({"replay", tmp.file("headeronly.csv"), "--out", tmp.path.string()}) == 2);

    write(tmp.file("bad.csv"), "t,z1,z2,z3,z4,u1,u2\n0.1,1,2,3,4,5\n");
    try {
        replay_measurements(tmp.file("bad.csv"), ExperimentConfig::make_default(),
                            Eigen::Vector3d(0.1, 0.1, 0.01));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("unknown preset and bad overrides exit with the usage code") {
    TempDir tmp("usage");
    CHECK(run({"tune", "--preset", "bogus", "--out", tmp.path.string()}) == 2);
    CHECK(run({"tune", "--set", "sim.n_runs=not_a_number", "--out", tmp.path.string()}) == 2);
    CHECK(run({"bogus-command"}) == 2);
}

}  // TEST_SUITE
