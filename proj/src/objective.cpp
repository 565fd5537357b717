#include "caviar/objective.hpp"

#include <limits>
#include <stdexcept>

namespace caviar {

double rq_loss(double theta, const std::vector<double>& y, const std::vector<double>& f) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("rq_loss: theta must lie in (0,1)");
    }
    if (y.empty()) throw std::invalid_argument("rq_loss: empty input");
    if (y.size() != f.size()) {
        throw std::invalid_argument("rq_loss: length mismatch (" + std::to_string(y.size()) +
                                    " vs " + std::to_string(f.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double u = y[t] - f[t];
        sum += (u < 0.0) ? (theta - 1.0) * u : theta * u;
    }
    return sum / static_cast<double>(y.size());
}

HitSeries hit_series(double theta, const std::vector<double>& y, const std::vector<double>& f) {
    if (y.size() != f.size()) {
        throw std::invalid_argument("hit_series: length mismatch (" + std::to_string(y.size()) +
                                    " vs " + std::to_string(f.size()) + ")");
    }
    HitSeries h;
    h.theta = theta;
    h.hits.resize(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        h.hits[t] = (y[t] < f[t] ? 1.0 : 0.0) - theta;
    }
    return h;
}

double objective(const ModelSpec& spec, const ParamVector& beta, const ReturnSeries& y) {
    validate_params(spec, beta);
    if (y.split_index == 0) throw std::invalid_argument("objective: no in-sample observations");
    try {
        const auto f = eval_path_values(spec, beta, y, y.split_index);
        const auto yin = y.in_sample();
        return rq_loss(spec.theta, yin, f);
    } catch (const InfeasibleParameters&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace caviar
