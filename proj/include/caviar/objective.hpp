#pragma once

#include <vector>

#include "caviar/market_data.hpp"
#include "caviar/models.hpp"

namespace caviar {

// Hit_t = I(y_t < f_t) - theta: (1 - theta) on exceedance, -theta otherwise.
// Ties count as non-exceedance (strict inequality).
struct HitSeries {
    std::vector<double> hits;
    double theta = 0.0;

    std::size_t size() const { return hits.size(); }
    bool is_hit(std::size_t t) const { return hits[t] > 0.0; }
};

// Mean regression-quantile (pinball) loss:
//   T^{-1} sum_t [theta - I(y_t < f_t)] * (y_t - f_t).
// Nonnegative, zero iff y == f element-wise.
double rq_loss(double theta, const std::vector<double>& y, const std::vector<double>& f);

HitSeries hit_series(double theta, const std::vector<double>& y, const std::vector<double>& f);

// In-sample pinball loss of the recursive model at beta. Infeasible
// parameters (rejected by the path recursion) come back as +infinity so
// derivative-free search can step around them.
double objective(const ModelSpec& spec, const ParamVector& beta, const ReturnSeries& y);

}  // namespace caviar
