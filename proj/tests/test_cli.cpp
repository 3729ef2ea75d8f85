// End-to-end contract tests for the gph binary: exit codes, deterministic
// CSV output, config round-trips, and the term snapshot.  The binary's path
// arrives in $GPH_BIN (set by the build).

#include <catch2/catch_amalgamated.hpp>

#include <gph/lattice.hpp>
#include <gph/report.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string gph_bin() {
    const char* p = std::getenv("GPH_BIN");
    REQUIRE(p != nullptr);
    return p;
}

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cmd(const std::string& cmd) {
    CmdResult r;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& hint) {
    const auto ticks = std::chrono::steady_clock::now().time_since_epoch().count();
    fs::path dir = fs::temp_directory_path() / ("gph_cli_" + hint + "_" + std::to_string(ticks));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// a small, fast configuration used by most tests below
const std::string kSmallRun = " run thm1-ratio --cutoffs 2,4 --samples 5 --support 8";

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cmd(gph_bin()).exit_code == 2);
    CHECK(run_cmd(gph_bin() + " run").exit_code == 2);
    CHECK(run_cmd(gph_bin() + " run no-such-experiment").exit_code == 2);
    CHECK(run_cmd(gph_bin() + kSmallRun + " --no-such-flag 3").exit_code == 2);
}

TEST_CASE("a successful run reports, writes CSV+JSON, and exits 0") {
    const fs::path dir = fresh_dir("ok");
    CmdResult r = run_cmd(gph_bin() + kSmallRun + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("experiment: thm1-ratio") != std::string::npos);
    CHECK(r.output.find("revision:") != std::string::npos);
    CHECK(r.output.find("seed:") != std::string::npos);
    CHECK(r.output.find("verdict:") != std::string::npos);

    const std::string csv = slurp(dir / "thm1-ratio.csv");
    CHECK(csv.rfind("K,sample,ratio", 0) == 0);  // header row first
    CHECK(csv.find('\r') == std::string::npos);  // LF endings only
    CHECK(!slurp(dir / "thm1-ratio.json").empty());
    fs::remove_all(dir);
}

TEST_CASE("the assert flag turns a failing verdict into exit 3") {
    const fs::path dir = fresh_dir("assert");
    // an impossible tolerance forces verdict FAIL without breaking the run
    const std::string cmd = gph_bin() + " run boardgame-demo --set tol=1e-30 --out " + dir.string();
    CHECK(run_cmd(cmd).exit_code == 0);                  // reported, not fatal
    CHECK(run_cmd(cmd + " --assert").exit_code == 3);    // enforced
    fs::remove_all(dir);
}

TEST_CASE("reruns of one configuration produce byte-identical CSV") {
    const fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
    REQUIRE(run_cmd(gph_bin() + kSmallRun + " --out " + a.string()).exit_code == 0);
    REQUIRE(run_cmd(gph_bin() + kSmallRun + " --out " + b.string()).exit_code == 0);
    CHECK(slurp(a / "thm1-ratio.csv") == slurp(b / "thm1-ratio.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("emitted configs round-trip and flags override file entries") {
    const fs::path dir = fresh_dir("config");
    const fs::path cfg1 = dir / "cfg1.txt", cfg2 = dir / "cfg2.txt", cfg3 = dir / "cfg3.txt";

    REQUIRE(run_cmd(gph_bin() + kSmallRun + " --out " + dir.string() + " --emit-config " +
                    cfg1.string())
                .exit_code == 0);
    // feeding the emitted config back resolves to the identical config
    REQUIRE(run_cmd(gph_bin() + " run thm1-ratio --config " + cfg1.string() + " --out " +
                    dir.string() + " --emit-config " + cfg2.string())
                .exit_code == 0);
    CHECK(slurp(cfg1) == slurp(cfg2));

    // a flag on top of the config wins
    REQUIRE(run_cmd(gph_bin() + " run thm1-ratio --config " + cfg1.string() +
                    " --samples 7 --out " + dir.string() + " --emit-config " + cfg3.string())
                .exit_code == 0);
    CHECK(slurp(cfg3).find("samples=7") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("GPH_OUTPUT_DIR supplies the default output directory") {
    const fs::path dir = fresh_dir("envdir");
    CmdResult r = run_cmd("GPH_OUTPUT_DIR=" + dir.string() + " " + gph_bin() + kSmallRun);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "thm1-ratio.csv"));
    fs::remove_all(dir);
}

TEST_CASE("a missing output directory is created") {
    const fs::path dir = fresh_dir("mkout");
    const fs::path nested = dir / "a" / "b";
    CHECK(run_cmd(gph_bin() + kSmallRun + " --out " + nested.string()).exit_code == 0);
    CHECK(fs::exists(nested / "thm1-ratio.csv"));
    fs::remove_all(dir);
}

TEST_CASE("the term snapshot is a readable density matrix") {
    const fs::path dir = fresh_dir("dump");
    const fs::path term = dir / "term.txt";
    REQUIRE(run_cmd(gph_bin() +
                    " run duhamel-decay --mode independent --n-max 2 --set t-samples=2"
                    " --set support=8 --out " +
                    dir.string() + " --dump-term " + term.string())
                .exit_code == 0);

    std::ifstream in(term);
    gph::DensityMatrix m = gph::read_matrix(in);
    CHECK(m.order == 1);
    CHECK(m.box.d == 1);
    CHECK(m.coeffs.size() > 0);

    // the snapshot flag is rejected for experiments without one
    CHECK(run_cmd(gph_bin() + kSmallRun + " --out " + dir.string() + " --dump-term " +
                  term.string())
              .exit_code == 2);
    fs::remove_all(dir);
}
