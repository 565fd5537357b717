#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caviar/dq_backtest.hpp"
#include "caviar/market_data.hpp"
#include "caviar/mc_validation.hpp"
#include "caviar/models.hpp"
#include "caviar/optimizer.hpp"

namespace caviar {

// Failure categories mapped to CLI exit codes: ConfigError -> 2,
// DataError -> 3, anything else thrown during a run -> 4.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One estimation run: input series, split, the (regime, theta) grid, and
// optimizer/backtest knobs. Parsed from a JSON config file; relative paths
// resolve against the config file's directory.
struct RunConfig {
    std::string input_path;
    CsvSchema schema;
    std::size_t split = 0;  // in-sample count; 0 = everything in-sample
    std::vector<Regime> regimes;
    std::vector<double> thetas;
    OptimizerConfig optimizer;
    InstrumentSpec instruments;
    std::optional<double> bandwidth;  // overrides the data-driven rule
    InitRule init;
    double adaptive_g = 10.0;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 1;

    void validate() const;
};

// Monte Carlo experiment request.
struct McConfig {
    enum class Experiment { Consistency, Coverage, DqSize };
    Experiment experiment = Experiment::Consistency;
    SyntheticDGP dgp;
    std::vector<std::size_t> sizes;  // consistency only
    std::size_t t_obs = 0;           // coverage / dq_size
    std::size_t reps = 0;
    std::optional<Regime> fit_regime;  // dq_size misspecification runs
    ExperimentConfig experiment_cfg;
    std::filesystem::path out_dir = ".";

    void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
McConfig parse_mc_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Reads and parses the file, resolving relative paths against its directory.
RunConfig load_run_config(const std::string& path);
McConfig load_mc_config(const std::string& path);

// Fits every (regime, theta) pair, runs inference and both DQ tests, writes
// per-pair VaR-path and news-impact CSVs, a per-theta unconditional-quantile
// baseline CSV, and one consolidated report.json under out_dir. Returns the
// report. Deterministic for a fixed config and seed; no timestamps.
nlohmann::json run(const RunConfig& cfg, const LogSink& log = {});

// Dispatches the requested Monte Carlo experiment and writes mc_summary.json
// under out_dir.
nlohmann::json run_mc(const McConfig& cfg, const LogSink& log = {});

// News-impact anchor for the previous-period quantile: the two-sided normal
// critical value at level theta (-2.576 at 1%, -1.960 at 5%).
double news_impact_anchor(double theta);

}  // namespace caviar
