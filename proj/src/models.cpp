#include "caviar/models.hpp"

#include <algorithm>
#include <cmath>

#include "caviar/stats.hpp"

namespace caviar {

namespace {

// Logistic 1 / (1 + exp(g*u)) without overflow for large |g*u|.
double smoothed_indicator(double g, double u) {
    const double gu = g * u;
    if (gu >= 0.0) {
        const double e = std::exp(-gu);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(gu));
}

}  // namespace

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Constant: return "Constant";
        case Regime::SAV: return "SAV";
        case Regime::AS: return "AS";
        case Regime::IndirectGARCH: return "IndirectGARCH";
        case Regime::Adaptive: return "Adaptive";
    }
    throw std::logic_error("regime_name: unknown regime");
}

Regime regime_from_name(const std::string& name) {
    if (name == "Constant") return Regime::Constant;
    if (name == "SAV") return Regime::SAV;
    if (name == "AS") return Regime::AS;
    if (name == "IndirectGARCH") return Regime::IndirectGARCH;
    if (name == "Adaptive") return Regime::Adaptive;
    throw std::invalid_argument("unknown regime name: '" + name + "'");
}

std::size_t regime_dim(Regime r) {
    switch (r) {
        case Regime::Constant: return 1;
        case Regime::SAV: return 3;
        case Regime::AS: return 4;
        case Regime::IndirectGARCH: return 3;
        case Regime::Adaptive: return 1;
    }
    throw std::logic_error("regime_dim: unknown regime");
}

void ModelSpec::validate() const {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("ModelSpec: theta must lie in (0,1)");
    }
    if (regime == Regime::Adaptive && !(adaptive_g > 0.0)) {
        throw std::invalid_argument("ModelSpec: adaptive smoothing constant must be > 0");
    }
}

void validate_params(const ModelSpec& spec, const ParamVector& beta) {
    if (beta.size() != regime_dim(spec.regime)) {
        throw std::invalid_argument("parameter vector has dimension " +
                                    std::to_string(beta.size()) + ", regime " +
                                    regime_name(spec.regime) + " needs " +
                                    std::to_string(regime_dim(spec.regime)));
    }
    for (double b : beta) {
        if (!std::isfinite(b)) {
            throw std::invalid_argument("parameter vector has non-finite entry");
        }
    }
}

double initial_quantile(const ModelSpec& spec, const ReturnSeries& y) {
    if (spec.init.kind == InitRule::Kind::Fixed) return spec.init.value;
    const std::size_t n0 = std::min<std::size_t>(300, y.split_index);
    std::vector<double> head(y.returns.begin(), y.returns.begin() + static_cast<std::ptrdiff_t>(n0));
    return stats::lower_quantile(head, spec.theta);
}

QuantilePath eval_path(const ModelSpec& spec, const ParamVector& beta, const ReturnSeries& y) {
    spec.validate();
    validate_params(spec, beta);
    if (y.size() == 0) throw std::invalid_argument("eval_path: empty return series");

    const std::size_t T = y.size();
    const std::size_t p = regime_dim(spec.regime);
    QuantilePath path;
    path.f.resize(T);
    path.grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(p));

    if (spec.regime == Regime::Constant) {
        std::fill(path.f.begin(), path.f.end(), beta[0]);
        path.grad.setOnes();
        return path;
    }

    path.f[0] = initial_quantile(spec, y);
    const double theta = spec.theta;

    for (std::size_t t = 1; t < T; ++t) {
        const double yl = y.returns[t - 1];
        const double fl = path.f[t - 1];
        switch (spec.regime) {
            case Regime::SAV: {
                path.f[t] = beta[0] + beta[1] * fl + beta[2] * std::fabs(yl);
                path.grad(t, 0) = 1.0 + beta[1] * path.grad(t - 1, 0);
                path.grad(t, 1) = fl + beta[1] * path.grad(t - 1, 1);
                path.grad(t, 2) = std::fabs(yl) + beta[1] * path.grad(t - 1, 2);
                break;
            }
            case Regime::AS: {
                const double yp = std::max(yl, 0.0);
                const double yn = -std::min(yl, 0.0);
                path.f[t] = beta[0] + beta[1] * fl + beta[2] * yp + beta[3] * yn;
                path.grad(t, 0) = 1.0 + beta[1] * path.grad(t - 1, 0);
                path.grad(t, 1) = fl + beta[1] * path.grad(t - 1, 1);
                path.grad(t, 2) = yp + beta[1] * path.grad(t - 1, 2);
                path.grad(t, 3) = yn + beta[1] * path.grad(t - 1, 3);
                break;
            }
            case Regime::IndirectGARCH: {
                const double s = beta[0] + beta[1] * fl * fl + beta[2] * yl * yl;
                if (s < 0.0) {
                    throw InfeasibleParameters(
                        "IndirectGARCH inner expression negative at t=" + std::to_string(t + 1));
                }
                const double root = std::sqrt(s);
                path.f[t] = -root;  // lower-quantile branch
                if (root > 0.0) {
                    const double scale = -0.5 / root;
                    const double carry = 2.0 * beta[1] * fl;
                    path.grad(t, 0) = scale * (1.0 + carry * path.grad(t - 1, 0));
                    path.grad(t, 1) = scale * (fl * fl + carry * path.grad(t - 1, 1));
                    path.grad(t, 2) = scale * (yl * yl + carry * path.grad(t - 1, 2));
                }  // s == 0: cusp, leave the row zero
                break;
            }
            case Regime::Adaptive: {
                const double g = spec.adaptive_g;
                const double l = smoothed_indicator(g, yl - fl);
                path.f[t] = fl + beta[0] * (l - theta);
                path.grad(t, 0) =
                    path.grad(t - 1, 0) * (1.0 + beta[0] * g * l * (1.0 - l)) + (l - theta);
                break;
            }
            case Regime::Constant:
                break;  // handled above
        }
        if (!std::isfinite(path.f[t])) {
            throw InfeasibleParameters("non-finite quantile at t=" + std::to_string(t + 1));
        }
    }
    return path;
}

std::vector<double> eval_path_values(const ModelSpec& spec, const ParamVector& beta,
                                     const ReturnSeries& y, std::size_t count) {
    spec.validate();
    validate_params(spec, beta);
    if (y.size() == 0) throw std::invalid_argument("eval_path_values: empty return series");
    const std::size_t T = (count == 0) ? y.size() : std::min(count, y.size());

    std::vector<double> f(T);
    if (spec.regime == Regime::Constant) {
        std::fill(f.begin(), f.end(), beta[0]);
        return f;
    }

    f[0] = initial_quantile(spec, y);
    const double theta = spec.theta;
    for (std::size_t t = 1; t < T; ++t) {
        const double yl = y.returns[t - 1];
        const double fl = f[t - 1];
        switch (spec.regime) {
            case Regime::SAV:
                f[t] = beta[0] + beta[1] * fl + beta[2] * std::fabs(yl);
                break;
            case Regime::AS:
                f[t] = beta[0] + beta[1] * fl + beta[2] * std::max(yl, 0.0) -
                       beta[3] * std::min(yl, 0.0);
                break;
            case Regime::IndirectGARCH: {
                const double s = beta[0] + beta[1] * fl * fl + beta[2] * yl * yl;
                if (s < 0.0) {
                    throw InfeasibleParameters(
                        "IndirectGARCH inner expression negative at t=" + std::to_string(t + 1));
                }
                f[t] = -std::sqrt(s);
                break;
            }
            case Regime::Adaptive:
                f[t] = fl + beta[0] * (smoothed_indicator(spec.adaptive_g, yl - fl) - theta);
                break;
            case Regime::Constant:
                break;
        }
        if (!std::isfinite(f[t])) {
            throw InfeasibleParameters("non-finite quantile at t=" + std::to_string(t + 1));
        }
    }
    return f;
}

NewsImpactCurve news_impact(const ModelSpec& spec, const ParamVector& beta, double var_prev,
                            const std::vector<double>& x_grid) {
    spec.validate();
    validate_params(spec, beta);
    if (x_grid.empty()) throw std::invalid_argument("news_impact: empty grid");
    if (!std::is_sorted(x_grid.begin(), x_grid.end())) {
        throw std::invalid_argument("news_impact: grid must be sorted ascending");
    }

    NewsImpactCurve curve;
    curve.x = x_grid;
    curve.var_prev = var_prev;
    curve.var_next.resize(x_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        const double x = x_grid[i];
        switch (spec.regime) {
            case Regime::Constant:
                curve.var_next[i] = beta[0];
                break;
            case Regime::SAV:
                curve.var_next[i] = beta[0] + beta[1] * var_prev + beta[2] * std::fabs(x);
                break;
            case Regime::AS:
                curve.var_next[i] = beta[0] + beta[1] * var_prev + beta[2] * std::max(x, 0.0) -
                                    beta[3] * std::min(x, 0.0);
                break;
            case Regime::IndirectGARCH: {
                const double s = beta[0] + beta[1] * var_prev * var_prev + beta[2] * x * x;
                if (s < 0.0) {
                    throw InfeasibleParameters("IndirectGARCH inner expression negative at x=" +
                                               std::to_string(x));
                }
                curve.var_next[i] = -std::sqrt(s);
                break;
            }
            case Regime::Adaptive:
                curve.var_next[i] =
                    var_prev +
                    beta[0] * (smoothed_indicator(spec.adaptive_g, x - var_prev) - spec.theta);
                break;
        }
    }
    return curve;
}

std::vector<double> unconditional_quantile_var(const ReturnSeries& y, double theta,
                                               std::optional<std::size_t> window) {
    if (y.size() == 0) throw std::invalid_argument("unconditional_quantile_var: empty series");
    if (window && (*window == 0 || *window > y.size())) {
        throw std::invalid_argument("unconditional_quantile_var: window " +
                                    std::to_string(*window) + " out of range for length " +
                                    std::to_string(y.size()));
    }
    std::vector<double> out(y.size());
    std::vector<double> buf;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const std::size_t w = window ? std::min(*window, t + 1) : t + 1;
        buf.assign(y.returns.begin() + static_cast<std::ptrdiff_t>(t + 1 - w),
                   y.returns.begin() + static_cast<std::ptrdiff_t>(t + 1));
        out[t] = stats::lower_quantile(buf, theta);
    }
    return out;
}

}  // namespace caviar
