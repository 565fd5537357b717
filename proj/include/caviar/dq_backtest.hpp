#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "caviar/inference.hpp"
#include "caviar/objective.hpp"

namespace caviar {

// Instrument columns for the dynamic quantile tests. Row i corresponds to
// period start_row + i of the hit/path segment it was built from; the first
// `lags` periods are dropped for lag history.
struct InstrumentMatrix {
    Eigen::MatrixXd x;
    std::size_t start_row = 0;
    std::string description;

    std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
};

struct DqStatistic {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    std::string formula;  // audit record of the exact expression used
};

struct HitRateResult {
    double rate = 0.0;
    std::size_t n_hits = 0;
    double binomial_p = 1.0;  // exact two-sided test of rate = theta
};

struct DQReport {
    HitRateResult in_sample;
    HitRateResult out_of_sample;
    DqStatistic dq_in;
    DqStatistic dq_out;
    std::string instruments_used;
};

// Options for instrument construction; the default set is a constant, four
// lagged hits, and the contemporaneous quantile estimate.
struct InstrumentSpec {
    std::size_t lags = 4;
    bool include_constant = true;
    bool include_var = true;  // contemporaneous f_t column
};

// Columns [1, Hit_{t-1} .. Hit_{t-lags}, f_t] over a hit/path segment of
// equal length; rows without full lag history are dropped.
InstrumentMatrix build_instruments(const HitSeries& hit, const std::vector<double>& f,
                                   const InstrumentSpec& spec = {});

// In-sample dynamic quantile test. The instrument matrix is corrected for
// parameter estimation through
//   M = X' - (T^{-1} X' H grad) D^{-1} grad'
// with H the diagonal kernel density weights I(|y_t - f_t| < c) / (2c) at
// the covariance bandwidth, and
//   DQ = Hit' X (M M')^{-1} X' Hit / (theta (1 - theta))  ~  chi2(q).
DqStatistic dq_in_sample(const HitSeries& hit, const InstrumentMatrix& instruments,
                         const std::vector<double>& y, const std::vector<double>& f,
                         const Eigen::MatrixXd& grads, const CovarianceEstimates& cov);

// Out-of-sample dynamic quantile test with parameters frozen at the
// in-sample estimate: DQ = Hit' X (X'X)^{-1} X' Hit / (theta(1-theta)),
// chi-squared with q degrees of freedom. No density or gradient correction.
DqStatistic dq_out_of_sample(const HitSeries& hit, const InstrumentMatrix& instruments);

// Fraction of exceedances plus an exact binomial two-sided p-value for
// rate = theta.
HitRateResult hit_rate(const HitSeries& hit);

}  // namespace caviar
