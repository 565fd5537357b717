#include "caviar/pipeline.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "caviar/inference.hpp"
#include "caviar/objective.hpp"
#include "caviar/stats.hpp"

namespace caviar {

namespace {

using nlohmann::json;

// Round-trip-exact text for CSV artifacts, so every report figure can be
// recomputed from the emitted files.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string theta_tag(double theta) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", theta);
    return buf;
}

void info(const LogSink& log, const std::string& line) {
    if (log) log(line);
}

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
}

void parse_optimizer(const json& j, OptimizerConfig& oc) {
    if (j.contains("n_starts")) oc.n_starts = j.at("n_starts").get<std::size_t>();
    if (j.contains("m_keep")) oc.m_keep = j.at("m_keep").get<std::size_t>();
    if (j.contains("rq_tol")) oc.rq_tol = j.at("rq_tol").get<double>();
    if (j.contains("max_alternations"))
        oc.max_alternations = j.at("max_alternations").get<std::size_t>();
    if (j.contains("simplex_max_iter"))
        oc.simplex_max_iter = j.at("simplex_max_iter").get<std::size_t>();
    if (j.contains("qn_grad_step")) oc.qn_grad_step = j.at("qn_grad_step").get<double>();
    if (j.contains("qn_max_iter")) oc.qn_max_iter = j.at("qn_max_iter").get<std::size_t>();
}

DgpKind dgp_kind_from_name(std::string name) {
    for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (name == "constantquantile" || name == "constant") return DgpKind::ConstantQuantile;
    if (name == "garch11" || name == "garch11-gaussian" || name == "garch")
        return DgpKind::Garch11;
    if (name == "sav-true" || name == "savtrue" || name == "sav") return DgpKind::SavTrue;
    throw ConfigError("unknown DGP kind: " + name);
}

std::string dgp_kind_name(DgpKind k) {
    switch (k) {
        case DgpKind::ConstantQuantile: return "ConstantQuantile";
        case DgpKind::Garch11: return "GARCH11-Gaussian";
        case DgpKind::SavTrue: return "SAV-true";
    }
    return "?";
}

void write_var_csv(const std::filesystem::path& path, const ReturnSeries& series,
                   const std::vector<double>& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "date,return,quantile,var,hit\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::string date = t < series.dates.size() ? series.dates[t] : "";
        out << date << ',' << fmt(series.returns[t]) << ',' << fmt(f[t]) << ',' << fmt(-f[t])
            << ',' << (series.returns[t] < f[t] ? 1 : 0) << '\n';
    }
}

void write_news_csv(const std::filesystem::path& path, const NewsImpactCurve& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "lagged_return,quantile,var\n";
    for (std::size_t i = 0; i < curve.x.size(); ++i)
        out << fmt(curve.x[i]) << ',' << fmt(curve.var_next[i]) << ',' << fmt(-curve.var_next[i])
            << '\n';
}

void write_baseline_csv(const std::filesystem::path& path, const ReturnSeries& series,
                        const std::vector<double>& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "date,return,quantile,var\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::string date = t < series.dates.size() ? series.dates[t] : "";
        out << date << ',' << fmt(series.returns[t]) << ',' << fmt(f[t]) << ',' << fmt(-f[t])
            << '\n';
    }
}

json hit_rate_block(const HitRateResult& h) {
    return json{{"rate", h.rate}, {"hits", h.n_hits}, {"binomial_p", h.binomial_p}};
}

json dq_block(const DqStatistic& dq, const std::string& instruments) {
    return json{{"statistic", dq.statistic},
                {"dof", dq.dof},
                {"p_value", dq.p_value},
                {"formula", dq.formula},
                {"instruments", instruments}};
}

// For some regimes the estimation correction exactly reproduces the
// constant and f_t instruments (their span lies inside the gradient span of
// the recursion), which makes M M' singular. Retry with progressively
// smaller instrument sets before giving up, and report the set used.
json dq_in_with_fallback(const HitSeries& hit, const std::vector<double>& y,
                         const std::vector<double>& f, const Eigen::MatrixXd& grads,
                         const CovarianceEstimates& cov, const InstrumentSpec& requested,
                         const LogSink& log) {
    std::vector<InstrumentSpec> attempts{requested};
    if (requested.include_var) {
        InstrumentSpec s = attempts.back();
        s.include_var = false;
        if (s.include_constant || s.lags > 0) attempts.push_back(s);
    }
    if (requested.include_constant) {
        InstrumentSpec s = attempts.back();
        s.include_constant = false;
        if (s.lags > 0) attempts.push_back(s);
    }
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        InstrumentMatrix x = build_instruments(hit, f, attempts[i]);
        try {
            DqStatistic dq = dq_in_sample(hit, x, y, f, grads, cov);
            if (i > 0)
                info(log, "  in-sample DQ instruments reduced to: " + x.description);
            return dq_block(dq, x.description);
        } catch (const std::runtime_error&) {
            if (i + 1 == attempts.size()) throw;
            info(log, "  in-sample DQ: " + x.description +
                          " is singular after the estimation correction; retrying");
        }
    }
    return nullptr;  // unreachable
}

// The out-of-sample instruments can be exactly collinear too: a constant
// regime's f_t column is a multiple of the constant column. Same retry
// ladder as in-sample, without the estimation correction.
json dq_out_with_fallback(const HitSeries& hit, const std::vector<double>& f,
                          const InstrumentSpec& requested, const LogSink& log) {
    std::vector<InstrumentSpec> attempts{requested};
    if (requested.include_var) {
        InstrumentSpec s = attempts.back();
        s.include_var = false;
        if (s.include_constant || s.lags > 0) attempts.push_back(s);
    }
    if (requested.include_constant) {
        InstrumentSpec s = attempts.back();
        s.include_constant = false;
        if (s.lags > 0) attempts.push_back(s);
    }
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        InstrumentMatrix x = build_instruments(hit, f, attempts[i]);
        try {
            DqStatistic dq = dq_out_of_sample(hit, x);
            if (i > 0)
                info(log, "  out-of-sample DQ instruments reduced to: " + x.description);
            return dq_block(dq, x.description);
        } catch (const std::runtime_error&) {
            if (i + 1 == attempts.size()) throw;
            info(log, "  out-of-sample DQ: " + x.description + " is collinear; retrying");
        }
    }
    return nullptr;  // unreachable
}

json summary_block(const MCSummary& s) {
    json out{{"replications", s.replications},
             {"failed_replications", s.failed_replications},
             {"nonconvergence_rate", s.nonconvergence_rate},
             {"valid", s.valid}};
    if (!s.rmse_by_t.empty()) {
        json rmse = json::object();
        for (const auto& [t_obs, v] : s.rmse_by_t) rmse[std::to_string(t_obs)] = v;
        out["rmse_by_t"] = rmse;
    }
    if (!s.coverage_95.empty()) out["coverage_95"] = s.coverage_95;
    if (s.rmse_by_t.empty() && s.coverage_95.empty())
        out["dq_rejection_rate"] = s.dq_rejection_rate;
    return out;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

double news_impact_anchor(double theta) {
    // Two-sided normal critical values, matching the figures the curves
    // reproduce; the exact inverse-CDF value is used away from 1% and 5%.
    if (std::abs(theta - 0.01) < 1e-12) return -2.576;
    if (std::abs(theta - 0.05) < 1e-12) return -1.960;
    return stats::normal_quantile(theta / 2.0);
}

void RunConfig::validate() const {
    if (input_path.empty()) throw ConfigError("input path is required");
    if (regimes.empty()) throw ConfigError("at least one regime is required");
    if (thetas.empty()) throw ConfigError("at least one theta is required");
    for (double t : thetas)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("theta must lie in (0, 1)");
    if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(adaptive_g > 0.0)) throw ConfigError("adaptive smoothing constant must be positive");
    try {
        optimizer.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

void McConfig::validate() const {
    try {
        dgp.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (reps == 0) throw ConfigError("at least one replication is required");
    if (experiment == Experiment::Consistency) {
        if (sizes.empty()) throw ConfigError("consistency experiment needs a sizes list");
        for (std::size_t s : sizes)
            if (s == 0) throw ConfigError("sample sizes must be positive");
    } else if (t_obs == 0) {
        throw ConfigError("t_obs is required for this experiment");
    }
    try {
        experiment_cfg.optimizer.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    try {
        const json& input = j.at("input");
        cfg.input_path = (base_dir / input.at("path").get<std::string>()).string();
        if (input.contains("date_column"))
            cfg.schema.date_column = input.at("date_column").get<std::string>();
        if (input.contains("value_column"))
            cfg.schema.value_column = input.at("value_column").get<std::string>();
        if (input.contains("mode")) {
            const std::string mode = input.at("mode").get<std::string>();
            if (mode == "price")
                cfg.schema.value_mode = CsvSchema::ValueMode::Price;
            else if (mode == "return")
                cfg.schema.value_mode = CsvSchema::ValueMode::Return;
            else
                throw ConfigError("input mode must be \"price\" or \"return\"");
        } else if (cfg.schema.value_column == "return") {
            cfg.schema.value_mode = CsvSchema::ValueMode::Return;
        }

        if (j.contains("split")) cfg.split = j.at("split").get<std::size_t>();
        for (const auto& r : j.at("regimes"))
            cfg.regimes.push_back(regime_from_name(r.get<std::string>()));
        for (const auto& t : j.at("thetas")) cfg.thetas.push_back(t.get<double>());
        if (j.contains("optimizer")) parse_optimizer(j.at("optimizer"), cfg.optimizer);
        if (j.contains("instruments")) {
            const json& ji = j.at("instruments");
            if (ji.contains("lags")) cfg.instruments.lags = ji.at("lags").get<std::size_t>();
            if (ji.contains("include_constant"))
                cfg.instruments.include_constant = ji.at("include_constant").get<bool>();
            if (ji.contains("include_var"))
                cfg.instruments.include_var = ji.at("include_var").get<bool>();
        }
        if (j.contains("bandwidth") && !j.at("bandwidth").is_null())
            cfg.bandwidth = j.at("bandwidth").get<double>();
        if (j.contains("init")) {
            const json& ji = j.at("init");
            const std::string kind = ji.at("kind").get<std::string>();
            if (kind == "empirical")
                cfg.init = InitRule::empirical();
            else if (kind == "fixed")
                cfg.init = InitRule::fixed(ji.at("value").get<double>());
            else
                throw ConfigError("init kind must be \"empirical\" or \"fixed\"");
        }
        if (j.contains("adaptive_g")) cfg.adaptive_g = j.at("adaptive_g").get<double>();
        if (j.contains("out")) cfg.out_dir = base_dir / j.at("out").get<std::string>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

McConfig parse_mc_config(const json& j, const std::filesystem::path& base_dir) {
    McConfig cfg;
    try {
        const std::string kind = j.at("experiment").get<std::string>();
        if (kind == "consistency")
            cfg.experiment = McConfig::Experiment::Consistency;
        else if (kind == "coverage")
            cfg.experiment = McConfig::Experiment::Coverage;
        else if (kind == "dq_size")
            cfg.experiment = McConfig::Experiment::DqSize;
        else
            throw ConfigError("unknown experiment kind: " + kind);

        const json& dgp = j.at("dgp");
        cfg.dgp.kind = dgp_kind_from_name(dgp.at("kind").get<std::string>());
        if (dgp.contains("params"))
            cfg.dgp.true_params = dgp.at("params").get<std::vector<double>>();
        if (dgp.contains("theta")) cfg.dgp.theta = dgp.at("theta").get<double>();

        if (j.contains("sizes")) cfg.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        if (j.contains("t_obs")) cfg.t_obs = j.at("t_obs").get<std::size_t>();
        cfg.reps = j.at("reps").get<std::size_t>();
        if (j.contains("fit_regime"))
            cfg.fit_regime = regime_from_name(j.at("fit_regime").get<std::string>());
        if (j.contains("seed")) cfg.dgp.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("optimizer")) parse_optimizer(j.at("optimizer"), cfg.experiment_cfg.optimizer);
        if (j.contains("out")) cfg.out_dir = base_dir / j.at("out").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(parse_file(path), std::filesystem::path(path).parent_path());
}

McConfig load_mc_config(const std::string& path) {
    return parse_mc_config(parse_file(path), std::filesystem::path(path).parent_path());
}

json run(const RunConfig& cfg, const LogSink& log) {
    cfg.validate();

    ReturnSeries series;
    try {
        if (cfg.schema.value_mode == CsvSchema::ValueMode::Price) {
            series = to_returns(load_csv(cfg.input_path, cfg.schema));
        } else {
            series = load_returns_csv(cfg.input_path, cfg.schema);
        }
        series = split(series, cfg.split > 0 ? cfg.split : series.size());
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    info(log, "loaded " + std::to_string(series.size()) + " returns (" +
                  std::to_string(series.in_sample_size()) + " in-sample)");

    std::filesystem::create_directories(cfg.out_dir);

    json report;
    report["data"] = {{"input", cfg.input_path},
                      {"observations", series.size()},
                      {"in_sample", series.in_sample_size()},
                      {"out_of_sample", series.out_of_sample_size()}};
    if (!series.dates.empty())
        report["data"]["date_range"] = {series.dates.front(), series.dates.back()};
    report["config"] = {{"seed", cfg.seed},
                        {"thetas", cfg.thetas},
                        {"instrument_lags", cfg.instruments.lags},
                        {"bandwidth_override", cfg.bandwidth ? json(*cfg.bandwidth) : json()},
                        {"optimizer",
                         {{"n_starts", cfg.optimizer.n_starts},
                          {"m_keep", cfg.optimizer.m_keep},
                          {"rq_tol", cfg.optimizer.rq_tol},
                          {"max_alternations", cfg.optimizer.max_alternations}}}};
    json regime_names = json::array();
    for (Regime r : cfg.regimes) regime_names.push_back(regime_name(r));
    report["config"]["regimes"] = regime_names;

    // News-impact and VaR-path grids share the return scale of the data.
    std::vector<double> news_grid;
    for (int i = 0; i <= 200; ++i) news_grid.push_back(-10.0 + 0.1 * i);

    json fits = json::array();
    std::size_t job = 0;
    for (Regime regime : cfg.regimes) {
        for (double theta : cfg.thetas) {
            ModelSpec spec;
            spec.regime = regime;
            spec.theta = theta;
            spec.adaptive_g = cfg.adaptive_g;
            spec.init = cfg.init;

            OptimizerConfig oc = cfg.optimizer;
            oc.seed = cfg.seed + job;
            oc.log = log;
            info(log, "fitting " + regime_name(regime) + " at theta=" + theta_tag(theta));
            FitOutcome fit = fit_model(spec, series, oc);
            info(log, "  loss " + fmt(fit.loss) + (fit.converged ? "" : " (not converged)"));

            QuantilePath path = eval_path(spec, fit.beta_hat, series);
            CovarianceEstimates cov =
                estimate_covariance(spec, fit.beta_hat, series, path, cfg.bandwidth);

            const std::size_t n_in = series.in_sample_size();
            const std::vector<double> y_in = series.in_sample();
            const std::vector<double> f_in(path.f.begin(),
                                           path.f.begin() + static_cast<std::ptrdiff_t>(n_in));
            HitSeries hit_in = hit_series(theta, y_in, f_in);

            json block;
            block["regime"] = regime_name(regime);
            block["theta"] = theta;
            block["beta_hat"] = fit.beta_hat;
            block["std_errors"] = cov.se;
            block["t_stats"] = cov.t_stats;
            block["p_values"] = cov.p_values;
            block["loss"] = fit.loss;
            block["converged"] = fit.converged;
            block["alternations"] = fit.alternations_used;
            block["bandwidth"] = cov.bandwidth_used;

            json in_block;
            in_block["hit_rate"] = hit_rate_block(hit_rate(hit_in));
            {
                Eigen::MatrixXd grads_in = path.grad.topRows(static_cast<Eigen::Index>(n_in));
                in_block["dq"] =
                    dq_in_with_fallback(hit_in, y_in, f_in, grads_in, cov, cfg.instruments, log);
            }
            block["in_sample"] = in_block;

            const std::size_t n_out = series.out_of_sample_size();
            if (n_out > 0) {
                const std::vector<double> y_out = series.out_of_sample();
                const std::vector<double> f_out(
                    path.f.begin() + static_cast<std::ptrdiff_t>(n_in), path.f.end());
                HitSeries hit_out = hit_series(theta, y_out, f_out);
                json out_block;
                out_block["hit_rate"] = hit_rate_block(hit_rate(hit_out));
                const std::size_t cols = (cfg.instruments.include_constant ? 1 : 0) +
                                         cfg.instruments.lags +
                                         (cfg.instruments.include_var ? 1 : 0);
                if (n_out > cfg.instruments.lags + cols) {
                    out_block["dq"] = dq_out_with_fallback(hit_out, f_out, cfg.instruments, log);
                } else {
                    out_block["dq"] = nullptr;
                    info(log, "  out-of-sample window too short for the DQ test");
                }
                block["out_of_sample"] = out_block;
            } else {
                block["out_of_sample"] = nullptr;
            }

            const std::string tag = regime_name(regime) + "_" + theta_tag(theta);
            const std::string var_name = "var_" + tag + ".csv";
            const std::string news_name = "news_" + tag + ".csv";
            write_var_csv(cfg.out_dir / var_name, series, path.f);
            NewsImpactCurve curve =
                news_impact(spec, fit.beta_hat, news_impact_anchor(theta), news_grid);
            write_news_csv(cfg.out_dir / news_name, curve);
            block["news_impact_anchor"] = curve.var_prev;
            block["files"] = {{"var_path", var_name}, {"news_impact", news_name}};

            fits.push_back(block);
            ++job;
        }
    }
    report["fits"] = fits;

    json baselines = json::array();
    for (double theta : cfg.thetas) {
        const std::string name = "unconditional_" + std::string(theta_tag(theta)) + ".csv";
        write_baseline_csv(cfg.out_dir / name, series,
                           unconditional_quantile_var(series, theta, std::nullopt));
        baselines.push_back({{"theta", theta}, {"file", name}, {"window", "expanding"}});
    }
    report["baselines"] = baselines;

    write_json_file(cfg.out_dir / "report.json", report);
    info(log, "report written to " + (cfg.out_dir / "report.json").string());
    return report;
}

json run_mc(const McConfig& cfg, const LogSink& log) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    json out;
    out["dgp"] = {{"kind", dgp_kind_name(cfg.dgp.kind)},
                  {"params", cfg.dgp.true_params},
                  {"theta", cfg.dgp.theta},
                  {"seed", cfg.dgp.seed}};
    out["reps"] = cfg.reps;

    MCSummary summary;
    switch (cfg.experiment) {
        case McConfig::Experiment::Consistency:
            out["experiment"] = "consistency";
            out["sizes"] = cfg.sizes;
            info(log, "consistency experiment: " + std::to_string(cfg.sizes.size()) +
                          " sizes x " + std::to_string(cfg.reps) + " reps");
            summary = consistency_experiment(cfg.dgp, cfg.sizes, cfg.reps, cfg.experiment_cfg);
            break;
        case McConfig::Experiment::Coverage:
            out["experiment"] = "coverage";
            out["t_obs"] = cfg.t_obs;
            info(log, "coverage experiment: T=" + std::to_string(cfg.t_obs) + ", " +
                          std::to_string(cfg.reps) + " reps");
            summary = coverage_experiment(cfg.dgp, cfg.t_obs, cfg.reps, cfg.experiment_cfg);
            break;
        case McConfig::Experiment::DqSize:
            out["experiment"] = "dq_size";
            out["t_obs"] = cfg.t_obs;
            if (cfg.fit_regime) out["fit_regime"] = regime_name(*cfg.fit_regime);
            info(log, "DQ size experiment: T=" + std::to_string(cfg.t_obs) + ", " +
                          std::to_string(cfg.reps) + " reps");
            summary =
                dq_size_experiment(cfg.dgp, cfg.t_obs, cfg.reps, cfg.fit_regime, cfg.experiment_cfg);
            break;
    }
    out["true_regime_params"] = true_regime_params(cfg.dgp);
    out["summary"] = summary_block(summary);

    write_json_file(cfg.out_dir / "mc_summary.json", out);
    info(log, "summary written to " + (cfg.out_dir / "mc_summary.json").string());
    return out;
}

}  // namespace caviar
