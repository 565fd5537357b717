#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caviar/market_data.hpp"

namespace caviar {

// Conditional-quantile recursions. Constant is the degenerate no-dynamics
// case (f_t = beta_1 for every t); the other four are the autoregressive
// specifications estimated in the CLI.
enum class Regime { Constant, SAV, AS, IndirectGARCH, Adaptive };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// Parameter dimension: Constant 1, SAV 3, AS 4, IndirectGARCH 3, Adaptive 1.
std::size_t regime_dim(Regime r);

using ParamVector = std::vector<double>;

// How f_1 is seeded. EmpiricalQuantile uses the lower theta-quantile of the
// first 300 in-sample returns (or all of them if fewer); Fixed pins a value.
struct InitRule {
    enum class Kind { EmpiricalQuantile, Fixed };
    Kind kind = Kind::EmpiricalQuantile;
    double value = 0.0;

    static InitRule empirical() { return {}; }
    static InitRule fixed(double v) { return {Kind::Fixed, v}; }
};

struct ModelSpec {
    Regime regime = Regime::SAV;
    double theta = 0.05;
    double adaptive_g = 10.0;  // logistic smoothing constant, Adaptive only
    InitRule init;

    void validate() const;
};

// Thrown when a candidate parameter vector cannot produce a valid path
// (negative inner expression in Indirect GARCH, or non-finite propagation).
// The objective maps it to an infinite loss.
class InfeasibleParameters : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Conditional theta-quantile path f_t and its recursive gradient d f_t / d beta
// (T x p, row t). f_t sits on the return scale: negative for small theta.
struct QuantilePath {
    std::vector<double> f;
    Eigen::MatrixXd grad;
};

// One-step response of the quantile to the lagged return, at a fixed
// previous quantile. Matches the regime recursion with f_{t-1} = var_prev.
struct NewsImpactCurve {
    std::vector<double> x;
    std::vector<double> var_next;
    double var_prev = 0.0;
};

// Throws std::invalid_argument unless beta is finite with the regime's dimension.
void validate_params(const ModelSpec& spec, const ParamVector& beta);

// Initial quantile f_1 under the configured init rule.
double initial_quantile(const ModelSpec& spec, const ReturnSeries& y);

// Full path with analytic recursive gradients (chain rule through f_{t-1};
// the init value carries zero gradient).
QuantilePath eval_path(const ModelSpec& spec, const ParamVector& beta, const ReturnSeries& y);

// Values-only recursion over the first `count` periods (count = 0 means all).
// The optimization hot path; identical recursion, no gradient storage.
std::vector<double> eval_path_values(const ModelSpec& spec, const ParamVector& beta,
                                     const ReturnSeries& y, std::size_t count = 0);

NewsImpactCurve news_impact(const ModelSpec& spec, const ParamVector& beta, double var_prev,
                            const std::vector<double>& x_grid);

// Per-period empirical theta-quantile of the trailing window (or of the
// expanding history when window is nullopt). The window fills from the left:
// entry t uses the last min(window, t+1) observations.
std::vector<double> unconditional_quantile_var(const ReturnSeries& y, double theta,
                                               std::optional<std::size_t> window);

}  // namespace caviar
