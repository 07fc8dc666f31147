#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "ronsfp_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = scratch() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err = scratch() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string("\"") + RONSFP_CLI_PATH + "\" " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

std::string tiny_ou(const std::string& out_dir, const std::string& extra_time = "") {
    return std::string(R"({
      "problem": "ou",
      "drift": {"gamma": 1.0, "sigma": 1.0},
      "ansatz": {"r": 1, "init": {"kind": "ou-exact", "t0": 0.05}},
      "hilbert": {"mode": "l2-symbolic"},
      "alpha": 0.0,
      "time": {"t0": 0.05, "t_end": 0.35, "h0": 1e-4,
               "rtol": 1e-8, "atol": 1e-10, "output_dt": 0.1)") +
           extra_time + R"(},
      "output": {"dir": ")" + out_dir + R"("}
    })";
}

} // namespace

TEST_CASE("validate accepts a well-formed configuration") {
    const fs::path cfg =
        write_config("ok.json", tiny_ou((scratch() / "unused").string()));
    const CliResult r = run_cli("validate " + cfg.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find(": ok") != std::string::npos);
}

TEST_CASE("validate reports schema violations on stderr with exit code 2") {
    const fs::path cfg = write_config("bad.json", R"({
      "problem": "custom-polynomial",
      "drift": {
        "dim": 1,
        "nu": -0.5,
        "components": [[{"exponents": [1], "coeff": {"kind": "constant", "value": -1.0}}]]
      },
      "ansatz": {"r": 1, "init": {"kind": "explicit",
                                  "amp": [1.0], "width": [1.0], "center": [[0.0]]}},
      "hilbert": {"mode": "l2-symbolic"},
      "time": {"t0": 0.0, "t_end": 1.0}
    })");
    const CliResult r = run_cli("validate " + cfg.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("config error:") != std::string::npos);
    CHECK(r.err.find("$.drift.nu") != std::string::npos);
}

TEST_CASE("a missing config file exits with code 2") {
    const CliResult r = run_cli("run /nonexistent/rons.json");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("config error:") != std::string::npos);
}

TEST_CASE("run executes a small problem end to end") {
    const fs::path out_dir = scratch() / "run_ou";
    const fs::path cfg = write_config("run_ou.json", tiny_ou(out_dir.string()));
    const CliResult r = run_cli("run " + cfg.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out_dir / "report.json"));
    CHECK(fs::exists(out_dir / "trajectory.csv"));
    CHECK(r.out.find("wrote") != std::string::npos);

    SUBCASE("--out overrides the configured directory") {
        const fs::path other = scratch() / "run_ou_other";
        const CliResult r2 = run_cli("run " + cfg.string() + " --out " + other.string());
        CHECK(r2.exit_code == 0);
        CHECK(fs::exists(other / "report.json"));
    }
    SUBCASE("single-threaded reruns are byte-identical") {
        const fs::path a = scratch() / "det_a";
        const fs::path b = scratch() / "det_b";
        CHECK(run_cli("run " + cfg.string() + " --out " + a.string() +
                      " --threads 1").exit_code == 0);
        CHECK(run_cli("run " + cfg.string() + " --out " + b.string() +
                      " --threads 1").exit_code == 0);
        for (const char* name : {"trajectory.csv", "moments.csv", "conservation.csv"}) {
            CAPTURE(name);
            CHECK(slurp(a / name) == slurp(b / name));
        }
    }
}

TEST_CASE("a run that exhausts its step budget exits with code 1") {
    const fs::path out_dir = scratch() / "run_fail";
    const fs::path cfg = write_config(
        "run_fail.json", tiny_ou(out_dir.string(), ", \"max_steps\": 5"));
    const CliResult r = run_cli("run " + cfg.string());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("solver error:") != std::string::npos);
}

TEST_CASE("compare reports zero differences for identical runs") {
    const fs::path out_dir = scratch() / "cmp_base";
    const fs::path cfg = write_config("cmp.json", tiny_ou(out_dir.string()));
    REQUIRE(run_cli("run " + cfg.string()).exit_code == 0);
    const CliResult r =
        run_cli("compare " + out_dir.string() + " " + out_dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"mean_abs_diff_max\": 0") != std::string::npos);
}

TEST_CASE("compare fails cleanly on mismatched time grids") {
    const fs::path dir_a = scratch() / "cmp_a";
    const fs::path dir_b = scratch() / "cmp_b";
    const fs::path cfg_a = write_config("cmp_a.json", tiny_ou(dir_a.string()));
    std::string text_b = tiny_ou(dir_b.string());
    text_b.replace(text_b.find("\"output_dt\": 0.1"), 16, "\"output_dt\": 0.07");
    const fs::path cfg_b = write_config("cmp_b.json", text_b);
    REQUIRE(run_cli("run " + cfg_a.string()).exit_code == 0);
    REQUIRE(run_cli("run " + cfg_b.string()).exit_code == 0);
    const CliResult r = run_cli("compare " + dir_a.string() + " " + dir_b.string());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("time grids do not match") != std::string::npos);
}

TEST_CASE("bad invocations exit with code 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate x.json").exit_code == 2);
    const fs::path cfg =
        write_config("opt.json", tiny_ou((scratch() / "unused2").string()));
    CHECK(run_cli("run " + cfg.string() + " --frobnicate").exit_code == 2);
    CHECK(run_cli("run " + cfg.string() + " --threads 0").exit_code == 2);
}
