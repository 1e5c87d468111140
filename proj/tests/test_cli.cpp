#include <doctest.h>

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cbc;
using namespace cbc::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cbc_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const json kVerhulst = {{"sigma", {{"quad", 0.5}, {"lin", 0.5}}}, {"psi", {{"lin", -1}}}, {"x0", 1}};
const json kGbm = {{"sigma", {{"quad", 0.5}}}, {"psi", {{"lin", -2}}}, {"x0", 1}};

RunConfig config(const json& model, const json& command, const json& mc = json::object()) {
    json doc = {{"model", model}, {"command", command}};
    if (!mc.empty()) doc["mc"] = mc;
    return parse_config(doc);
}

int run(const std::string& command, const RunConfig& rc, const fs::path& dir, Flags flags = {}) {
    std::ostringstream log;
    return run_command(command, rc, dir, flags, log);
}

int shell(const std::string& args) {
    const int status = std::system((std::string(CBC_BIN) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("overrides address nested fields") {
    json doc = {{"mc", {{"n", 10}}}};
    apply_override(doc, "mc.n=500");
    apply_override(doc, "sim.dt=0.01");
    apply_override(doc, "description=plain text");
    CHECK(doc["mc"]["n"] == 500);
    CHECK(doc["sim"]["dt"] == 0.01);
    CHECK(doc["description"] == "plain text");
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST_CASE("schema errors carry the field path") {
    json doc = {{"model", kVerhulst}, {"mc", {{"n", 100}, {"colour", 1}}}};
    try {
        parse_config(doc);
        FAIL("accepted an unknown field");
    } catch (const ConfigError& e) {
        CHECK(e.path().find("mc") == 0);
    }
    json bad = {{"model", {{"sigma", {{"quad", -1}}}, {"psi", {{"lin", -1}}}}}};
    CHECK_THROWS_AS(parse_config(bad), ValidationError);
}

TEST_CASE("hash ignores the worker count; the seed is mandatory for stochastic work") {
    const RunConfig a = config(kVerhulst, json::object(), {{"workers", 1}});
    const RunConfig b = config(kVerhulst, json::object(), {{"workers", 4}});
    const RunConfig c = config(kVerhulst, json::object(), {{"n", 7}});
    CHECK(a.hash == b.hash);
    CHECK(a.hash != c.hash);
    try {
        a.require_seed();
        FAIL("no seed given");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "mc.seed");
    }
}

TEST_CASE("classify on the Verhulst model reports a limit law") {
    const fs::path dir = scratch("classify");
    CHECK(run("classify", config(kVerhulst, json::object()), dir) == kOk);
    const std::string report = slurp(dir / "report.txt");
    CHECK(report.find("stationary: Limit") != std::string::npos);
    CHECK(fs::exists(dir / "series_stationary_laplace.csv"));
    CHECK(fs::exists(dir / "classify.csv"));
}

TEST_CASE("fpt row for GBM b = 2, a = 1 at theta = 1") {
    const fs::path dir = scratch("fpt");
    const RunConfig rc =
        config(kGbm, {{"thetas", {1}}, {"z", 2}, {"a", 1}, {"series", false}}, {{"n", 2000}, {"seed", 3}});
    CHECK(run("fpt", rc, dir, Flags{true}) == kOk);
    std::istringstream csv(slurp(dir / "fpt.csv"));
    std::string provenance, header, row;
    std::getline(csv, provenance);
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(provenance.rfind("# cbc ", 0) == 0);
    CHECK(provenance.find("seed=3") != std::string::npos);
    CHECK(header.rfind("theta,analytic,mc_estimate,mc_stderr,z_score", 0) == 0);
    CHECK(row.rfind("1,0.08469", 0) == 0);
}

TEST_CASE("reruns are byte-identical across worker counts") {
    const json cmd = {{"kind", "laplace"}, {"t", {0.5}}, {"x", {1}}, {"other", {1, 2}}};
    RunConfig one = config(kVerhulst, cmd, {{"n", 500}, {"seed", 11}, {"workers", 1}});
    RunConfig two = config(kVerhulst, cmd, {{"n", 500}, {"seed", 11}, {"workers", 2}});
    one.sim.dt = two.sim.dt = 1e-2;
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("rerun_c");
    run("duality", one, a);
    run("duality", one, b);
    run("duality", two, c);
    CHECK(slurp(a / "duality.csv") == slurp(b / "duality.csv"));
    CHECK(slurp(a / "duality.csv") == slurp(c / "duality.csv"));
    CHECK(slurp(a / "report.txt") == slurp(c / "report.txt"));
}

TEST_CASE("number formatting") {
    CHECK(num(0.5) == "0.5");
    CHECK(num(1.0 / 3.0) == "0.333333333333");
    CHECK(num(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(num(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(num(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("binary exit codes") {
    const fs::path dir = scratch("exit");
    const std::string cfg = (dir / "gbm.json").string();
    std::ofstream(cfg) << json{{"model", kGbm}, {"command", {{"thetas", {1}}, {"z", 2}, {"a", 1}}}}.dump();
    const std::string out = " --out " + (dir / "out").string();
    CHECK(shell("fpt --config " + cfg + out) == 0);
    CHECK(shell("fpt --config " + cfg + " --override 'command.thetas=[]'" + out) == 2);
    CHECK(shell("fpt --config " + cfg + " --override model.sigma.quad=-1" + out) == 2);
    CHECK(shell("fpt --config " + (dir / "missing.json").string() + out) == 2);
    CHECK(shell("fpt --config " + cfg + " --mc" + out) == 2);  // no seed
    CHECK(shell("stationary --config " + std::string(CBC_CONFIG_DIR) + "/c4_incomplete_gamma.json" + out) == 4);
    CHECK(shell("classify --config " + std::string(CBC_CONFIG_DIR) + "/c2_attracting_matrix.json" + out) == 0);
}
