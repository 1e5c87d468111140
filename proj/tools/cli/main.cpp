#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace cbc::cli;
    CLI::App app{"Boundary classification, passage transforms and Monte Carlo checks for branching processes with collisions"};
    app.set_version_flag("--version", version());

    std::string command, config, out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::vector<std::string> overrides;
    Flags flags;
    app.add_option("command", command, "classify | fpt | extinction | stationary | simulate | duality | report")
        ->required()
        ->check(CLI::IsMember(command_names()));
    app.add_option("--config", config, "JSON configuration file")->required();
    app.add_option("--seed", seed, "master seed (overrides mc.seed)");
    app.add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--override", overrides, "key=value with a dotted key, repeatable")->allow_extra_args(false);
    app.add_flag("--mc", flags.mc, "fpt: add Monte Carlo estimates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    try {
        if (seed) overrides.push_back("mc.seed=" + std::to_string(*seed));
        if (workers) overrides.push_back("mc.workers=" + std::to_string(*workers));
        const RunConfig rc = load_config(config, overrides);
        return run_command(command, rc, out, flags, std::cout);
    } catch (const cbc::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return kValidation;
    } catch (const cbc::InconclusiveError& e) {
        std::cerr << "inconclusive: " << e.what() << '\n';
        return kInconclusive;
    } catch (const cbc::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kInconclusive;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
}
