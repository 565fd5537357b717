#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "caviar/market_data.hpp"
#include "caviar/models.hpp"

namespace caviar {

using Objective = std::function<double(const std::vector<double>&)>;
using LogSink = std::function<void(const std::string&)>;

struct OptimizerConfig {
    std::size_t n_starts = 100;    // uniform [0,1]^p candidates
    std::size_t m_keep = 10;       // best candidates refined
    double rq_tol = 1e-10;         // convergence tolerance on the loss
    std::size_t max_alternations = 20;
    double simplex_reflection = 1.0;
    double simplex_expansion = 2.0;
    double simplex_contraction = 0.5;
    double simplex_shrink = 0.5;
    std::size_t simplex_max_iter = 0;  // 0 = 250 * dimension
    double qn_grad_step = 1e-7;        // forward-difference step
    std::size_t qn_max_iter = 60;
    std::uint64_t seed = 0;
    LogSink log;  // optional diagnostics sink

    void validate() const;
};

struct FitOutcome {
    ParamVector beta_hat;
    double loss = 0.0;
    std::size_t alternations_used = 0;
    bool converged = false;
    std::size_t start_rank = 0;  // generation index of the winning candidate
    std::vector<double> loss_history;  // incumbent loss per alternation
};

// Solves B * step = -grad. A symmetric-positive-definite B uses its
// Cholesky factor; a singular or indefinite B is reset to the identity
// (step = -grad) and the event is reported through the sink.
Eigen::VectorXd qn_step(const Eigen::VectorXd& grad, Eigen::MatrixXd& hessian_approx,
                        const LogSink& log = {});

// Simplex / quasi-Newton alternation from a fixed starting point. Loss is
// non-increasing across stages; converged means the last full alternation
// improved by less than rq_tol.
FitOutcome refine(const Objective& f, const ParamVector& beta0, const OptimizerConfig& cfg);

// Seeded multi-start search: n_starts uniform candidates on [0,1]^dim,
// the m_keep best refined, overall minimum returned (ties break toward the
// lowest start rank). Deterministic given seed. Throws if every candidate
// is infeasible.
FitOutcome multistart(const Objective& f, std::size_t dim, const OptimizerConfig& cfg);

// Multi-start fit of a quantile regime on the in-sample segment of y.
FitOutcome fit_model(const ModelSpec& spec, const ReturnSeries& y, const OptimizerConfig& cfg);

}  // namespace caviar
