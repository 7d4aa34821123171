// orbitkernel <command> [--config FILE] [--seed N] [--out PATH] [--format csv|json]
//
// Exit codes: 0 every check passed, 1 a check failed, 2 configuration error.

#include "orbitkernel/errors.hpp"
#include "orbitkernel/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace orbitkernel;

int main(int argc, char** argv)
{
    CLI::App app{"Verification harness for the SO(2) kernel reduction"};
    app.set_version_flag("--version", version_string());
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string format;
    app.add_option("command", command, "geometry-check | generator-check | sde-check | verify-relation | sweep")
        ->required();
    app.add_option("--config", config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed, "overrides sim.seed");
    app.add_option("--out", out_path, "report path (default: stdout)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        cfg.command = parse_command(command);
        if (*seed_opt) cfg.sim.seed = seed;
        if (!out_path.empty()) cfg.output_path = out_path;
        if (!format.empty()) cfg.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
        cfg.validate();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    RunOutcome outcome;
    try {
        outcome = run_command(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }

    if (cfg.output_path.empty()) {
        std::cout << outcome.report;
    } else {
        std::ofstream out(cfg.output_path, std::ios::binary);
        if (!out) {
            std::cerr << "config error: cannot write " << cfg.output_path << "\n";
            return 2;
        }
        out << outcome.report;
    }
    for (const auto& c : outcome.summary.checks) {
        std::fprintf(stderr, "%s  %-22s residual %-12.4g tolerance %-12.4g %.2f s\n", c.pass ? "PASS" : "FAIL",
                     c.name.c_str(), c.residual, c.tolerance, c.wall_seconds);
    }
    return outcome.summary.all_pass() ? 0 : 1;
}
