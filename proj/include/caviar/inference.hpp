#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "caviar/market_data.hpp"
#include "caviar/models.hpp"

namespace caviar {

// Asymptotic covariance pieces for beta_hat:
//   A_hat = T^{-1} theta(1-theta) sum grad_t' grad_t
//   D_hat = (2 c T)^{-1} sum I(|y_t - f_t| < c) grad_t' grad_t
//   V_hat = T^{-1} D_hat^{-1} A_hat D_hat^{-1}
// with a uniform kernel of bandwidth c for the error density at zero.
struct CovarianceEstimates {
    Eigen::MatrixXd a_hat;
    Eigen::MatrixXd d_hat;
    Eigen::MatrixXd v_hat;
    double bandwidth_used = 0.0;
    std::vector<double> se;
    std::vector<double> t_stats;    // beta_i / se_i
    std::vector<double> p_values;   // two-sided normal test of beta_i = 0
};

// c = median(|residuals|) * T^(-1/3); scale-adaptive and within the
// admissible shrink rate. Requires T >= 30 and a non-degenerate fit.
double default_bandwidth(const std::vector<double>& residuals);

// Covariance of beta_hat over the in-sample range. path must be the full
// eval_path at beta_hat (gradients are the analytic recursive ones).
// bandwidth overrides the default rule when set.
CovarianceEstimates estimate_covariance(const ModelSpec& spec, const ParamVector& beta_hat,
                                        const ReturnSeries& y, const QuantilePath& path,
                                        std::optional<double> bandwidth = std::nullopt);

}  // namespace caviar
