// Command-line front end: packet inspection, trajectory evolution,
// classical-limit scans, chain reports and the built-in verification
// suite.

#include "mepack/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"maximum-entropy packet toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool quiet = false;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* copt = sub->add_option("--config", config_path, "run configuration file");
        if (needs_config) copt->required();
        sub->add_option("--out", out_path, "override the configured output path");
        sub->add_option("--seed", seed, "override the configured random seed");
        sub->add_flag("--quiet", quiet, "suppress diagnostics on standard error");
    };

    CLI::App* packet = app.add_subcommand("packet", "inspect a packet configuration");
    add_common(packet, true);
    CLI::App* evolve = app.add_subcommand("evolve", "evolve a packet and write a trajectory CSV");
    add_common(evolve, true);
    CLI::App* scan = app.add_subcommand("scan", "quantum-classical deviation vs variance scale");
    add_common(scan, true);
    CLI::App* chain = app.add_subcommand("chain", "oscillator-chain thermodynamics report");
    add_common(chain, true);
    CLI::App* verify = app.add_subcommand("verify", "run the built-in verification suite");
    add_common(verify, false);

    CLI11_PARSE(app, argc, argv);

    mepack::CliOptions opt;
    opt.config_path = config_path;
    opt.quiet = quiet;
    if (!out_path.empty()) opt.out_override = out_path;
    if (app.count_all() && (evolve->count("--seed") || scan->count("--seed") ||
                            packet->count("--seed") || chain->count("--seed")))
        opt.seed_override = seed;

    if (packet->parsed()) return mepack::cmd_packet(opt, std::cout, std::cerr);
    if (evolve->parsed()) return mepack::cmd_evolve(opt, std::cerr);
    if (scan->parsed()) return mepack::cmd_scan(opt, std::cout, std::cerr);
    if (chain->parsed()) return mepack::cmd_chain(opt, std::cout, std::cerr);
    if (verify->parsed()) return mepack::cmd_verify(std::cout, std::cerr);
    return mepack::kExitValidation;
}
