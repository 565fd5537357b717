#include "caviar/dq_backtest.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "caviar/stats.hpp"

namespace caviar {

namespace {

Eigen::VectorXd hit_vector(const HitSeries& hit, std::size_t start) {
    const std::size_t n = hit.hits.size() - start;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = hit.hits[start + i];
    return v;
}

double theta_scale(double theta) { return theta * (1.0 - theta); }

}  // namespace

InstrumentMatrix build_instruments(const HitSeries& hit, const std::vector<double>& f,
                                   const InstrumentSpec& spec) {
    const std::size_t n = hit.hits.size();
    if (f.size() != n) throw std::invalid_argument("hit series and quantile path lengths differ");
    if (spec.lags >= n) throw std::invalid_argument("not enough observations for instrument lags");
    if (!spec.include_constant && spec.lags == 0 && !spec.include_var)
        throw std::invalid_argument("instrument set is empty");

    const std::size_t rows = n - spec.lags;
    const std::size_t cols = (spec.include_constant ? 1 : 0) + spec.lags + (spec.include_var ? 1 : 0);
    InstrumentMatrix out;
    out.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    out.start_row = spec.lags;

    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t t = spec.lags + i;
        Eigen::Index c = 0;
        if (spec.include_constant) out.x(static_cast<Eigen::Index>(i), c++) = 1.0;
        for (std::size_t lag = 1; lag <= spec.lags; ++lag)
            out.x(static_cast<Eigen::Index>(i), c++) = hit.hits[t - lag];
        if (spec.include_var) out.x(static_cast<Eigen::Index>(i), c++) = f[t];
    }

    std::ostringstream desc;
    bool first = true;
    if (spec.include_constant) {
        desc << "constant";
        first = false;
    }
    if (spec.lags > 0) {
        if (!first) desc << ", ";
        desc << spec.lags << " hit lag" << (spec.lags > 1 ? "s" : "");
        first = false;
    }
    if (spec.include_var) {
        if (!first) desc << ", ";
        desc << "quantile estimate";
    }
    out.description = desc.str();
    return out;
}

DqStatistic dq_in_sample(const HitSeries& hit, const InstrumentMatrix& instruments,
                         const std::vector<double>& y, const std::vector<double>& f,
                         const Eigen::MatrixXd& grads, const CovarianceEstimates& cov) {
    const std::size_t n = hit.hits.size();
    if (y.size() != n || f.size() != n)
        throw std::invalid_argument("hit, return, and quantile series lengths differ");
    if (static_cast<std::size_t>(grads.rows()) != n)
        throw std::invalid_argument("gradient row count does not match hit series");
    if (instruments.start_row + instruments.rows() != n)
        throw std::invalid_argument("instrument rows do not align with hit series");

    const double t_obs = static_cast<double>(n);
    const double c = cov.bandwidth_used;
    if (!(c > 0.0)) throw std::invalid_argument("bandwidth must be positive");

    const Eigen::MatrixXd& x = instruments.x;
    const Eigen::Index q = x.cols();
    const Eigen::Index p = grads.cols();

    // X' H grad with H diagonal: kernel weight I(|y_t - f_t| < c) / (2c).
    Eigen::MatrixXd xhg = Eigen::MatrixXd::Zero(q, p);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const std::size_t t = instruments.start_row + static_cast<std::size_t>(i);
        if (std::abs(y[t] - f[t]) < c) xhg += x.row(i).transpose() * grads.row(static_cast<Eigen::Index>(t)) / (2.0 * c);
    }

    // M = X' - (T^{-1} X' H grad) D^{-1} grad', using rows aligned with X.
    Eigen::MatrixXd grad_seg = grads.bottomRows(x.rows());
    Eigen::MatrixXd correction = (xhg / t_obs) * cov.d_hat.ldlt().solve(grad_seg.transpose());
    Eigen::MatrixXd m = x.transpose() - correction;

    Eigen::MatrixXd mmt = m * m.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mmt);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw std::runtime_error(
            "instrument covariance is numerically singular after the estimation correction; "
            "try fewer or different instruments");

    const Eigen::VectorXd hit_v = hit_vector(hit, instruments.start_row);
    const Eigen::VectorXd xh = x.transpose() * hit_v;
    DqStatistic out;
    out.statistic = xh.dot(mmt.ldlt().solve(xh)) / theta_scale(hit.theta);
    out.dof = static_cast<std::size_t>(q);
    out.p_value = 1.0 - stats::chi_squared_cdf(out.statistic, static_cast<double>(out.dof));
    out.formula = "Hit'X (MM')^{-1} X'Hit / (theta(1-theta))";
    return out;
}

DqStatistic dq_out_of_sample(const HitSeries& hit, const InstrumentMatrix& instruments) {
    if (instruments.start_row + instruments.rows() != hit.hits.size())
        throw std::invalid_argument("instrument rows do not align with hit series");

    const Eigen::MatrixXd& x = instruments.x;
    Eigen::MatrixXd xtx = x.transpose() * x;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xtx);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw std::runtime_error(
            "instrument matrix is numerically singular; try fewer or different instruments");

    const Eigen::VectorXd hit_v = hit_vector(hit, instruments.start_row);
    const Eigen::VectorXd xh = x.transpose() * hit_v;
    DqStatistic out;
    out.statistic = xh.dot(xtx.ldlt().solve(xh)) / theta_scale(hit.theta);
    out.dof = instruments.cols();
    out.p_value = 1.0 - stats::chi_squared_cdf(out.statistic, static_cast<double>(out.dof));
    out.formula = "Hit'X (X'X)^{-1} X'Hit / (theta(1-theta))";
    return out;
}

HitRateResult hit_rate(const HitSeries& hit) {
    if (hit.hits.empty()) throw std::invalid_argument("hit series is empty");
    HitRateResult out;
    for (std::size_t t = 0; t < hit.hits.size(); ++t)
        if (hit.is_hit(t)) ++out.n_hits;
    out.rate = static_cast<double>(out.n_hits) / static_cast<double>(hit.hits.size());
    out.binomial_p = stats::binomial_two_sided_pvalue(static_cast<int>(out.n_hits),
                                                      static_cast<int>(hit.hits.size()), hit.theta);
    return out;
}

}  // namespace caviar
