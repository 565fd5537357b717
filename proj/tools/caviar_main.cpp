#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "caviar/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitEstimation = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    bool has_seed = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "RNG seed (overrides config)")
        ->each([&args](const std::string&) { args.has_seed = true; });
}

int run_fit(const CommonArgs& args) {
    caviar::RunConfig cfg = caviar::load_run_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.has_seed) cfg.seed = args.seed;
    caviar::run(cfg, [](const std::string& line) { std::cerr << line << '\n'; });
    return 0;
}

int run_mc(const CommonArgs& args) {
    caviar::McConfig cfg = caviar::load_mc_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.has_seed) cfg.dgp.seed = args.seed;
    caviar::run_mc(cfg, [](const std::string& line) { std::cerr << line << '\n'; });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional autoregressive Value-at-Risk estimation"};
    app.require_subcommand(1);

    CommonArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "fit quantile regimes to a return series");
    add_common(fit, fit_args);

    CommonArgs mc_args;
    CLI::App* mc = app.add_subcommand("mc", "run a Monte Carlo validation experiment");
    add_common(mc, mc_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return run_fit(fit_args);
        return run_mc(mc_args);
    } catch (const caviar::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const caviar::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    }
}
