#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddft/diagnostics.hpp"
#include "ddft/run.hpp"

using namespace ddft;
namespace fs = std::filesystem;

namespace {

const char* kSampleConfig = R"(# sample run
[domain]
L = 1.0
N = 64
d = 1

[initial_density]
kind = gaussian
center = 0.45
width = 0.12

[potentials]
V1 = harmonic:center=0.5,stiffness=4
V2 = gaussian:amplitude=0.2,width=0.1

[hi_kernels]
Z1 = isotropic(gaussian:amplitude=0.3,width=0.2)
Z2 = isotropic(gaussian:amplitude=0.3,width=0.2)

[stepping]
dt = 1e-3
t_end = 0.01
record_every = 2

[equilibrium]
tol = 1e-12

[output]
directory = out
seed = 7
)";

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("config_cli");

TEST_CASE("INI config parses and the canonical echo round-trips") {
    const RunConfig cfg = parse_config_text(kSampleConfig);
    CHECK(cfg.N == 64);
    CHECK(cfg.stepping.dt == doctest::Approx(1e-3));
    CHECK(cfg.record_every == 2);
    CHECK(cfg.seed == 7);
    CHECK(cfg.model.V1.kind == KernelSpec::Kind::harmonic);
    CHECK(cfg.model.Z2.profile.amplitude == doctest::Approx(0.3));

    const RunConfig again = parse_config_text(config_to_text(cfg));
    CHECK(config_to_text(again) == config_to_text(cfg));
}

TEST_CASE("JSON config accepts the same schema") {
    const char* json = R"cfg({
      "domain": {"L": 1.0, "N": 64, "d": 1},
      "initial_density": {"kind": "gaussian", "center": 0.45, "width": 0.12},
      "potentials": {"V1": "harmonic:center=0.5,stiffness=4",
                     "V2": "gaussian:amplitude=0.2,width=0.1"},
      "hi_kernels": {"Z1": "isotropic(gaussian:amplitude=0.3,width=0.2)",
                     "Z2": "isotropic(gaussian:amplitude=0.3,width=0.2)"},
      "stepping": {"dt": 1e-3, "t_end": 0.01, "record_every": 2},
      "output": {"directory": "out", "seed": 7}
    })cfg";
    const RunConfig a = parse_config_text(json);
    const RunConfig b = parse_config_text(kSampleConfig);
    // identical canonical forms apart from the source echo
    RunConfig a2 = a, b2 = b;
    a2.source_text = b2.source_text = "";
    CHECK(config_to_text(a2) == config_to_text(b2));
}

TEST_CASE("malformed configs name the offending key") {
    CHECK_THROWS_WITH_AS(parse_config_text("[domain]\nL = 1\nwidth = 2\n"),
                         doctest::Contains("width"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("[dominion]\nL = 1\n"),
                         doctest::Contains("dominion"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[domain]\nN = 12.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("L = 1\n"), ConfigError);  // key outside section
    CHECK_THROWS_AS(parse_config_text("[stepping]\nscheme = rk9\n"), ConfigError);
}

TEST_CASE("initial densities: construction and normalization") {
    const Grid g = build_grid(1.0, 32, 1);
    std::vector<std::string> warnings;
    {
        InitialDensitySpec spec;  // uniform
        const Field rho = build_initial_density(g, spec, &warnings);
        for (double v : rho.v) CHECK(v == doctest::Approx(1.0));
    }
    {
        InitialDensitySpec spec;
        spec.kind = InitialDensitySpec::Kind::mixture;
        spec.centers = {0.3, 0.7};
        spec.widths = {0.08, 0.08};
        spec.weights = {0.7, 0.3};
        const Field rho = build_initial_density(g, spec, &warnings);
        CHECK(integrate(g, rho) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rho[9] > rho[16]);  // heavier left bump
    }
}

TEST_CASE("file densities: round-trip, normalization gate") {
    const Grid g = build_grid(1.0, 16, 1);
    TempDir tmp("ddft_cfg_density");
    {
        // snapshot-format file round-trips
        Field rho(16);
        for (int c = 0; c < 16; ++c) rho[c] = 1.0 + 0.2 * std::sin(6.28 * g.center(c).x[0]);
        const double mass = integrate(g, rho);
        for (auto& v : rho.v) v /= mass;
        std::ofstream out(tmp.path / "rho.csv", std::ios::binary);
        write_snapshot_csv(out, g, rho);
        out.close();
        InitialDensitySpec spec;
        spec.kind = InitialDensitySpec::Kind::file;
        spec.path = (tmp.path / "rho.csv").string();
        const Field back = build_initial_density(g, spec);
        for (int c = 0; c < 16; ++c) CHECK(back[c] == doctest::Approx(rho[c]).epsilon(1e-14));
    }
    {
        // mass off by more than 1e-6 is an error
        std::string body = "rho\n";
        for (int c = 0; c < 16; ++c) body += "1.001\n";
        InitialDensitySpec spec;
        spec.kind = InitialDensitySpec::Kind::file;
        spec.path = write_file(tmp.path / "bad.csv", body);
        CHECK_THROWS_AS(build_initial_density(g, spec), ConfigError);
    }
    {
        InitialDensitySpec spec;
        spec.kind = InitialDensitySpec::Kind::file;
        spec.path = (tmp.path / "missing.csv").string();
        CHECK_THROWS_AS(build_initial_density(g, spec), ConfigError);
    }
}

TEST_CASE("assumption gate: hard violations and soft warnings") {
    RunConfig cfg = parse_config_text(kSampleConfig);
    const Grid g = build_grid(cfg.L, cfg.N, cfg.d);
    {
        const ValidationReport rep = validate_assumptions(g, cfg);
        CHECK(rep.v2_small);
        CHECK(rep.contraction_ok);
        CHECK(rep.warnings.empty());
    }
    {
        RunConfig bad = cfg;
        bad.model.V2 = KernelSpec::harmonic({{0.3, 0.0}}, 1.0);  // not even
        CHECK_THROWS_AS(validate_assumptions(g, bad), ConfigError);
    }
    {
        RunConfig bad = cfg;
        bad.model.V2.modulation = {TimeModulation::Kind::sine, 0.1, 1.0};
        CHECK_THROWS_AS(validate_assumptions(g, bad), ConfigError);
    }
    {
        RunConfig warny = cfg;
        warny.model.V2 = KernelSpec::gaussian(0.5, 0.1);  // > 1/4
        warny.model.Z2 = TensorKernelSpec::isotropic(KernelSpec::gaussian(1.5, 0.2));
        const ValidationReport rep = validate_assumptions(g, warny);
        CHECK_FALSE(rep.v2_small);
        CHECK_FALSE(rep.contraction_ok);
        REQUIRE(rep.warnings.size() >= 2);
        bool found = false;
        for (const auto& w : rep.warnings)
            if (w.find("contraction condition violated") != std::string::npos) found = true;
        CHECK(found);
    }
}

TEST_CASE("content hash is stable") {
    CHECK(content_hash("") == "cbf29ce484222325");
    CHECK(content_hash("a") != content_hash("b"));
}

TEST_CASE("cmd_evolve writes outputs and is idempotent") {
    TempDir tmp("ddft_cli_evolve");
    const std::string cfg_path = write_file(tmp.path / "run.cfg", kSampleConfig);

    CliOverrides ov1;
    ov1.out_dir = (tmp.path / "out1").string();
    CHECK(cmd_evolve(cfg_path, ov1) == 0);
    CHECK(fs::exists(tmp.path / "out1" / "diagnostics.csv"));
    CHECK(fs::exists(tmp.path / "out1" / "run.json"));
    CHECK(fs::exists(tmp.path / "out1" / "snapshots" / "0000.csv"));

    CliOverrides ov2;
    ov2.out_dir = (tmp.path / "out2").string();
    CHECK(cmd_evolve(cfg_path, ov2) == 0);
    CHECK(slurp(tmp.path / "out1" / "diagnostics.csv") ==
          slurp(tmp.path / "out2" / "diagnostics.csv"));
    CHECK(slurp(tmp.path / "out1" / "snapshots" / "0000.csv") ==
          slurp(tmp.path / "out2" / "snapshots" / "0000.csv"));

    const std::string meta = slurp(tmp.path / "out1" / "run.json");
    CHECK(meta.find("config_hash") != std::string::npos);
    CHECK(meta.find("spectral_initial") != std::string::npos);
    CHECK(meta.find("\"rate\"") != std::string::npos);
}

TEST_CASE("cmd_evolve emits the contraction warning for inadmissible Z2") {
    TempDir tmp("ddft_cli_warn");
    std::string text(kSampleConfig);
    const auto pos = text.find("Z2 = isotropic(gaussian:amplitude=0.3,width=0.2)");
    text.replace(pos, std::string("Z2 = isotropic(gaussian:amplitude=0.3,width=0.2)").size(),
                 "Z2 = isotropic(gaussian:amplitude=2.0,width=0.2)");
    const std::string cfg_path = write_file(tmp.path / "run.cfg", text);
    CliOverrides ov;
    ov.out_dir = (tmp.path / "out").string();
    CHECK(cmd_evolve(cfg_path, ov) == 0);  // warning, not an error
    const std::string meta = slurp(tmp.path / "out" / "run.json");
    CHECK(meta.find("contraction condition violated") != std::string::npos);
}

TEST_CASE("cmd_evolve exit codes: config errors map to 1") {
    TempDir tmp("ddft_cli_err");
    const std::string bad = write_file(tmp.path / "bad.cfg", "[domain]\nL = -2\n");
    CHECK(cmd_evolve(bad, {}) == 1);
    CHECK(cmd_evolve((tmp.path / "missing.cfg").string(), {}) == 1);
}

TEST_CASE("cmd_equilibrium writes results; exhausted iterations exit 2") {
    TempDir tmp("ddft_cli_eq");
    const std::string cfg_path = write_file(tmp.path / "run.cfg", kSampleConfig);
    CliOverrides ov;
    ov.out_dir = (tmp.path / "out").string();
    CHECK(cmd_equilibrium(cfg_path, ov) == 0);
    CHECK(fs::exists(tmp.path / "out" / "equilibrium.json"));
    CHECK(fs::exists(tmp.path / "out" / "rho0.csv"));
    const std::string meta = slurp(tmp.path / "out" / "equilibrium.json");
    CHECK(meta.find("residual_history") != std::string::npos);
    CHECK(meta.find("\"converged\": true") != std::string::npos);

    std::string text(kSampleConfig);
    text.replace(text.find("tol = 1e-12"), 11, "tol = 1e-19\nmax_iter = 1");
    const std::string hard = write_file(tmp.path / "hard.cfg", text);
    CliOverrides ov2;
    ov2.out_dir = (tmp.path / "out2").string();
    CHECK(cmd_equilibrium(hard, ov2) == 2);
    // history preserved on failure
    CHECK(slurp(tmp.path / "out2" / "equilibrium.json").find("residual_history") !=
          std::string::npos);
}

TEST_CASE("cmd_particles: comparison metric and missing-reference error") {
    TempDir tmp("ddft_cli_part");
    std::string text(kSampleConfig);
    text += "\n[oracle]\nparticles = 400\ndt = 5e-4\nsteps = 2000\nthin = 500\n";
    const std::string cfg_path = write_file(tmp.path / "run.cfg", text);

    CliOverrides ov;
    ov.out_dir = (tmp.path / "out").string();
    REQUIRE(cmd_equilibrium(cfg_path, ov) == 0);

    CliOverrides ovp;
    ovp.out_dir = (tmp.path / "outp").string();
    CHECK(cmd_particles(cfg_path, ovp, (tmp.path / "out" / "rho0.csv").string(), true) == 0);
    CHECK(fs::exists(tmp.path / "outp" / "histogram.csv"));
    CHECK(slurp(tmp.path / "outp" / "particles.json").find("l1_vs_reference") !=
          std::string::npos);

    CHECK(cmd_particles(cfg_path, ovp, (tmp.path / "nope.csv").string(), true) == 1);
}

TEST_CASE("validate --list enumerates criteria; fault injection fails criterion 1") {
    std::ostringstream list;
    CHECK(cmd_validate(true, false, list) == 0);
    CHECK(list.str().find("mass_conservation") != std::string::npos);
    CHECK(list.str().find("functional_derivative_gradient") != std::string::npos);
}

TEST_CASE("CLI binary: argument parsing and exit codes") {
    TempDir tmp("ddft_cli_bin");
    const std::string cfg_path = write_file(tmp.path / "run.cfg", kSampleConfig);
    const std::string exe = DDFT_CLI_PATH;

    auto run = [&](const std::string& args) {
        const std::string cmd = exe + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    CHECK(run("validate --list") == 0);
    CHECK(run("evolve --config " + cfg_path + " --out " + (tmp.path / "o").string()) == 0);
    CHECK(run("evolve --config " + (tmp.path / "missing.cfg").string()) == 1);
    CHECK(run("bogus") != 0);
}

TEST_SUITE_END();
