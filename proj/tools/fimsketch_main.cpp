#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fimsketch/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void add_override_flags(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>& kvs) {
    static const std::vector<std::string> keys = {
        "scenario", "nx",  "alpha", "mode", "sampler",    "init",
        "c",        "iterations", "iters", "criterion", "seed", "outdir",
        "dt0",      "eps", "beta",  "dt",   "init_sigma", "gamma"};
    for (const auto& key : keys) {
        cmd->add_option_function<std::string>(
            "--" + key,
            [&kvs, key](const std::string& v) { kvs.emplace_back(key, v); });
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FIM row-sampling experimental design toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;

    auto* run = app.add_subcommand("run", "run one scenario and emit artifacts");
    run->add_option("config", config_path, "flat key=value config file");
    add_override_flags(run, overrides);

    auto* density =
        app.add_subcommand("density", "emit the optimal sampling density");
    std::string density_out = "density.csv";
    density->add_option("config", config_path, "flat key=value config file");
    density->add_option("-o,--output", density_out, "output CSV path");
    add_override_flags(density, overrides);

    auto* tables = app.add_subcommand(
        "tables", "multi-seed design comparison with medians and IQR");
    std::string seeds_arg = "1,2,3,4,5";
    std::string tables_out;
    tables->add_option("config", config_path, "flat key=value config file");
    tables->add_option("--seeds", seeds_arg, "comma-separated seed list");
    tables->add_option("-o,--output", tables_out, "output CSV path (default stdout)");
    add_override_flags(tables, overrides);

    CLI11_PARSE(app, argc, argv);

    fimsketch::ScenarioConfig cfg;
    try {
        if (!config_path.empty()) cfg = fimsketch::load_config(config_path);
        for (const auto& [k, v] : overrides) fimsketch::apply_override(cfg, k, v);
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (run->parsed()) {
            fimsketch::run_scenario(cfg);
            std::cout << "wrote artifacts to " << cfg.outdir << "\n";
        } else if (density->parsed()) {
            const auto setup = fimsketch::make_fixed_setup(cfg);
            fimsketch::emit_density(setup, density_out);
            std::cout << "wrote " << density_out << "\n";
        } else if (tables->parsed()) {
            const auto seeds = parse_seed_list(seeds_arg);
            if (seeds.empty()) {
                std::cerr << "config error: empty seed list\n";
                return kExitConfig;
            }
            const std::string table = fimsketch::reproduce_tables(cfg, seeds);
            if (tables_out.empty()) {
                std::cout << table;
            } else {
                std::ofstream(tables_out) << table;
                std::cout << "wrote " << tables_out << "\n";
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
