#include "caviar/inference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "caviar/stats.hpp"

namespace caviar {

double default_bandwidth(const std::vector<double>& residuals) {
    const auto T = residuals.size();
    if (T < 30) {
        throw std::invalid_argument("default_bandwidth: need at least 30 residuals, got " +
                                    std::to_string(T));
    }
    const double med = stats::median_abs(residuals);
    if (!(med > 0.0)) {
        throw std::runtime_error("default_bandwidth: residuals are degenerate (median |e| = 0)");
    }
    return med * std::pow(static_cast<double>(T), -1.0 / 3.0);
}

CovarianceEstimates estimate_covariance(const ModelSpec& spec, const ParamVector& beta_hat,
                                        const ReturnSeries& y, const QuantilePath& path,
                                        std::optional<double> bandwidth) {
    spec.validate();
    validate_params(spec, beta_hat);
    const std::size_t T = y.split_index;
    if (T == 0) throw std::invalid_argument("estimate_covariance: no in-sample observations");
    if (path.f.size() < T || path.grad.rows() < static_cast<Eigen::Index>(T)) {
        throw std::invalid_argument("estimate_covariance: path shorter than the in-sample range");
    }

    std::vector<double> residuals(T);
    for (std::size_t t = 0; t < T; ++t) residuals[t] = y.returns[t] - path.f[t];

    const double c = bandwidth ? *bandwidth : default_bandwidth(residuals);
    if (!(c > 0.0)) throw std::invalid_argument("estimate_covariance: bandwidth must be > 0");

    const auto p = static_cast<Eigen::Index>(regime_dim(spec.regime));
    const double theta = spec.theta;
    const double tn = static_cast<double>(T);

    Eigen::MatrixXd a_sum = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd d_sum = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t t = 0; t < T; ++t) {
        const auto row = path.grad.row(static_cast<Eigen::Index>(t));
        const Eigen::MatrixXd outer = row.transpose() * row;
        a_sum += outer;
        if (std::fabs(residuals[t]) < c) d_sum += outer;
    }

    CovarianceEstimates est;
    est.bandwidth_used = c;
    est.a_hat = (theta * (1.0 - theta) / tn) * a_sum;
    est.d_hat = d_sum / (2.0 * c * tn);

    // D must be comfortably invertible before the sandwich makes sense.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(est.d_hat);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin > 1e12) {
        throw std::runtime_error(
            "estimate_covariance: D_hat is numerically singular; too few residuals fall inside "
            "the kernel window -- try a larger bandwidth");
    }

    const Eigen::MatrixXd d_inv = est.d_hat.inverse();
    est.v_hat = (d_inv * est.a_hat * d_inv) / tn;
    est.v_hat = 0.5 * (est.v_hat + est.v_hat.transpose()).eval();

    est.se.resize(static_cast<std::size_t>(p));
    est.t_stats.resize(static_cast<std::size_t>(p));
    est.p_values.resize(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        const double var = std::max(est.v_hat(i, i), 0.0);
        const double se = std::sqrt(var);
        est.se[static_cast<std::size_t>(i)] = se;
        const double tstat = se > 0.0 ? beta_hat[static_cast<std::size_t>(i)] / se
                                      : std::numeric_limits<double>::infinity();
        est.t_stats[static_cast<std::size_t>(i)] = tstat;
        est.p_values[static_cast<std::size_t>(i)] = 2.0 * stats::normal_cdf(-std::fabs(tstat));
    }
    return est;
}

}  // namespace caviar
