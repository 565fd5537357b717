#include "caviar/mc_validation.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "caviar/dq_backtest.hpp"
#include "caviar/inference.hpp"
#include "caviar/objective.hpp"
#include "caviar/rng.hpp"
#include "caviar/stats.hpp"

namespace caviar {

namespace {

constexpr std::size_t kBurnIn = 500;

double z_theta(double theta) { return stats::normal_quantile(theta); }

// Mean of |eps| for standard normal eps; bounds the SAV-true contraction.
const double kMeanAbsNormal = std::sqrt(2.0 / M_PI);

// A seed stream for the optimizer distinct from the simulation stream.
std::uint64_t optimizer_seed(std::uint64_t sim_seed) { return sim_seed ^ 0x9e3779b97f4a7c15ULL; }

struct RepResult {
    bool ok = false;         // produced an estimate
    bool converged = false;  // met the loss tolerance within the alternation cap
    ParamVector beta;
    SimulatedSeries sim;
    FitOutcome fit;
};

RepResult run_rep(const SyntheticDGP& dgp, Regime regime, const ExperimentConfig& cfg) {
    RepResult rep;
    rep.sim = simulate(dgp);
    ModelSpec spec;
    spec.regime = regime;
    spec.theta = dgp.theta;
    OptimizerConfig oc = cfg.optimizer;
    oc.seed = optimizer_seed(dgp.seed);
    try {
        rep.fit = fit_model(spec, rep.sim.series, oc);
    } catch (const std::exception&) {
        return rep;
    }
    rep.ok = true;
    rep.converged = rep.fit.converged;
    rep.beta = rep.fit.beta_hat;
    return rep;
}

void finalize_convergence(MCSummary& s, std::size_t total, std::size_t nonconverged,
                          std::size_t failed) {
    s.replications = total;
    s.failed_replications = failed;
    s.nonconvergence_rate =
        total == 0 ? 0.0 : static_cast<double>(nonconverged) / static_cast<double>(total);
    s.valid = s.nonconvergence_rate <= 0.20;
}

}  // namespace

void SyntheticDGP::validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
    if (t_obs == 0) throw std::invalid_argument("sample size must be positive");
    switch (kind) {
        case DgpKind::ConstantQuantile:
            if (!true_params.empty())
                throw std::invalid_argument("constant-quantile DGP takes no parameters");
            return;
        case DgpKind::Garch11: {
            if (true_params.size() != 3)
                throw std::invalid_argument("GARCH(1,1) DGP needs {omega, alpha, beta}");
            const double omega = true_params[0], alpha = true_params[1], beta = true_params[2];
            if (!(omega > 0.0)) throw std::invalid_argument("GARCH omega must be positive");
            if (alpha < 0.0 || beta < 0.0)
                throw std::invalid_argument("GARCH alpha and beta must be nonnegative");
            if (!(alpha + beta < 1.0))
                throw std::invalid_argument("GARCH requires alpha + beta < 1 for stationarity");
            return;
        }
        case DgpKind::SavTrue: {
            if (true_params.size() != 3)
                throw std::invalid_argument("SAV-true DGP needs {b1, b2, b3}");
            const double b1 = true_params[0], b2 = true_params[1], b3 = true_params[2];
            if (!(b1 > 0.0)) throw std::invalid_argument("SAV-true b1 must be positive");
            if (b2 < 0.0 || b3 < 0.0)
                throw std::invalid_argument("SAV-true b2 and b3 must be nonnegative");
            const double contraction = b2 + b3 * kMeanAbsNormal / std::abs(z_theta(theta));
            if (!(contraction < 1.0))
                throw std::invalid_argument("SAV-true recursion is not mean-stationary");
            return;
        }
    }
    throw std::invalid_argument("unknown DGP kind");
}

Regime matching_regime(const SyntheticDGP& dgp) {
    switch (dgp.kind) {
        case DgpKind::ConstantQuantile: return Regime::Constant;
        case DgpKind::Garch11: return Regime::IndirectGARCH;
        case DgpKind::SavTrue: return Regime::SAV;
    }
    throw std::invalid_argument("unknown DGP kind");
}

ParamVector true_regime_params(const SyntheticDGP& dgp) {
    const double z = z_theta(dgp.theta);
    switch (dgp.kind) {
        case DgpKind::ConstantQuantile:
            return {z};
        case DgpKind::Garch11: {
            // sigma_t^2 = omega + alpha y^2 + beta sigma^2 and q_t = z sigma_t
            // give q_t^2 = omega z^2 + beta q_{t-1}^2 + alpha z^2 y^2.
            const double omega = dgp.true_params[0], alpha = dgp.true_params[1],
                         beta = dgp.true_params[2];
            return {omega * z * z, beta, alpha * z * z};
        }
        case DgpKind::SavTrue:
            // q_t = -v_t turns the magnitude recursion into the quantile-scale
            // one with negated intercept and return slope.
            return {-dgp.true_params[0], dgp.true_params[1], -dgp.true_params[2]};
    }
    throw std::invalid_argument("unknown DGP kind");
}

SimulatedSeries simulate(const SyntheticDGP& dgp) {
    dgp.validate();
    Rng rng(dgp.seed);
    SimulatedSeries out;
    out.series.returns.reserve(dgp.t_obs);
    out.true_quantile.reserve(dgp.t_obs);
    const double z = z_theta(dgp.theta);

    switch (dgp.kind) {
        case DgpKind::ConstantQuantile: {
            for (std::size_t t = 0; t < dgp.t_obs; ++t) {
                out.series.returns.push_back(rng.normal());
                out.true_quantile.push_back(z);
            }
            break;
        }
        case DgpKind::Garch11: {
            const double omega = dgp.true_params[0], alpha = dgp.true_params[1],
                         beta = dgp.true_params[2];
            double var = omega / (1.0 - alpha - beta);  // start at the unconditional variance
            for (std::size_t t = 0; t < kBurnIn + dgp.t_obs; ++t) {
                const double sigma = std::sqrt(var);
                const double y = sigma * rng.normal();
                if (t >= kBurnIn) {
                    out.series.returns.push_back(y);
                    out.true_quantile.push_back(sigma * z);
                }
                var = omega + alpha * y * y + beta * var;
            }
            break;
        }
        case DgpKind::SavTrue: {
            const double b1 = dgp.true_params[0], b2 = dgp.true_params[1], b3 = dgp.true_params[2];
            const double zabs = std::abs(z);
            double v = b1 / (1.0 - b2);  // burn-in erases the start value
            for (std::size_t t = 0; t < kBurnIn + dgp.t_obs; ++t) {
                const double y = (v / zabs) * rng.normal();
                if (t >= kBurnIn) {
                    out.series.returns.push_back(y);
                    out.true_quantile.push_back(-v);
                }
                v = b1 + b2 * v + b3 * std::abs(y);
            }
            break;
        }
    }
    out.series.split_index = out.series.returns.size();
    return out;
}

MCSummary consistency_experiment(const SyntheticDGP& dgp, const std::vector<std::size_t>& sizes,
                                 std::size_t reps, const ExperimentConfig& cfg) {
    dgp.validate();
    if (sizes.empty()) throw std::invalid_argument("at least one sample size is required");
    if (reps == 0) throw std::invalid_argument("at least one replication is required");

    const Regime regime = matching_regime(dgp);
    const ParamVector beta0 = true_regime_params(dgp);
    const std::size_t p = beta0.size();

    MCSummary summary;
    std::size_t nonconverged = 0, failed = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        std::vector<double> sq_err(p, 0.0);
        std::size_t n_ok = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            SyntheticDGP d = dgp;
            d.t_obs = sizes[b];
            d.seed = dgp.seed + b * reps + r;
            RepResult rep = run_rep(d, regime, cfg);
            if (!rep.ok) {
                ++failed;
                ++nonconverged;
                continue;
            }
            if (!rep.converged) ++nonconverged;
            for (std::size_t j = 0; j < p; ++j) {
                const double e = rep.beta[j] - beta0[j];
                sq_err[j] += e * e;
            }
            ++n_ok;
        }
        if (n_ok == 0)
            throw std::runtime_error("no replication produced an estimate at T=" +
                                     std::to_string(sizes[b]));
        std::vector<double> rmse(p);
        for (std::size_t j = 0; j < p; ++j) rmse[j] = std::sqrt(sq_err[j] / static_cast<double>(n_ok));
        summary.rmse_by_t[sizes[b]] = rmse;
    }
    finalize_convergence(summary, sizes.size() * reps, nonconverged, failed);
    return summary;
}

MCSummary coverage_experiment(const SyntheticDGP& dgp, std::size_t t_obs, std::size_t reps,
                              const ExperimentConfig& cfg) {
    dgp.validate();
    if (reps == 0) throw std::invalid_argument("at least one replication is required");

    const Regime regime = matching_regime(dgp);
    const ParamVector beta0 = true_regime_params(dgp);
    const std::size_t p = beta0.size();
    const double z95 = -stats::normal_quantile(0.025);

    MCSummary summary;
    std::vector<std::size_t> covered(p, 0);
    std::size_t nonconverged = 0, failed = 0, n_ok = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        SyntheticDGP d = dgp;
        d.t_obs = t_obs;
        d.seed = dgp.seed + r;
        RepResult rep = run_rep(d, regime, cfg);
        if (rep.ok) {
            ModelSpec spec;
            spec.regime = regime;
            spec.theta = dgp.theta;
            try {
                QuantilePath path = eval_path(spec, rep.beta, rep.sim.series);
                CovarianceEstimates cov =
                    estimate_covariance(spec, rep.beta, rep.sim.series, path, std::nullopt);
                for (std::size_t j = 0; j < p; ++j)
                    if (std::abs(rep.beta[j] - beta0[j]) <= z95 * cov.se[j]) ++covered[j];
                ++n_ok;
                if (!rep.converged) ++nonconverged;
                continue;
            } catch (const std::exception&) {
                // covariance failure counts as a failed replication below
            }
        }
        ++failed;
        ++nonconverged;
    }
    if (n_ok == 0) throw std::runtime_error("no replication produced a covariance estimate");
    summary.coverage_95.resize(p);
    for (std::size_t j = 0; j < p; ++j)
        summary.coverage_95[j] = static_cast<double>(covered[j]) / static_cast<double>(n_ok);
    finalize_convergence(summary, reps, nonconverged, failed);
    return summary;
}

MCSummary dq_size_experiment(const SyntheticDGP& dgp, std::size_t t_obs, std::size_t reps,
                             std::optional<Regime> fit_regime, const ExperimentConfig& cfg) {
    dgp.validate();
    if (reps == 0) throw std::invalid_argument("at least one replication is required");

    const Regime regime = fit_regime.value_or(matching_regime(dgp));
    InstrumentSpec instruments;  // lagged hits only; see header
    instruments.lags = 4;
    instruments.include_constant = false;
    instruments.include_var = false;

    MCSummary summary;
    std::size_t rejections = 0, nonconverged = 0, failed = 0, n_ok = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        SyntheticDGP d = dgp;
        d.t_obs = t_obs;
        d.seed = dgp.seed + r;
        RepResult rep = run_rep(d, regime, cfg);
        if (rep.ok) {
            ModelSpec spec;
            spec.regime = regime;
            spec.theta = dgp.theta;
            try {
                QuantilePath path = eval_path(spec, rep.beta, rep.sim.series);
                CovarianceEstimates cov =
                    estimate_covariance(spec, rep.beta, rep.sim.series, path, std::nullopt);
                HitSeries hit = hit_series(dgp.theta, rep.sim.series.returns, path.f);
                InstrumentMatrix x = build_instruments(hit, path.f, instruments);
                DqStatistic dq =
                    dq_in_sample(hit, x, rep.sim.series.returns, path.f, path.grad, cov);
                if (dq.p_value < 0.05) ++rejections;
                ++n_ok;
                if (!rep.converged) ++nonconverged;
                continue;
            } catch (const std::exception&) {
            }
        }
        ++failed;
        ++nonconverged;
    }
    if (n_ok == 0) throw std::runtime_error("no replication produced a DQ statistic");
    summary.dq_rejection_rate = static_cast<double>(rejections) / static_cast<double>(n_ok);
    finalize_convergence(summary, reps, nonconverged, failed);
    return summary;
}

}  // namespace caviar
