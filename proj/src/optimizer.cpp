#include "caviar/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "caviar/objective.hpp"
#include "caviar/rng.hpp"

namespace caviar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded_eval(const Objective& f, const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return kInf;
    }
    const double fx = f(x);
    return std::isnan(fx) ? kInf : fx;
}

struct StageResult {
    std::vector<double> x;
    double fx;
};

// Nelder-Mead from x0 until the simplex values spread below tol.
StageResult nelder_mead(const Objective& f, const std::vector<double>& x0, double fx0,
                        const OptimizerConfig& cfg) {
    const std::size_t n = x0.size();
    const std::size_t max_iter =
        cfg.simplex_max_iter ? cfg.simplex_max_iter : 250 * std::max<std::size_t>(n, 1);
    const double alpha = cfg.simplex_reflection;
    const double gamma = cfg.simplex_expansion;
    const double rho = cfg.simplex_contraction;
    const double sigma = cfg.simplex_shrink;

    // vertex 0 is the start; the rest perturb one coordinate each
    std::vector<std::vector<double>> x(n + 1, x0);
    std::vector<double> fx(n + 1);
    fx[0] = fx0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i + 1][i] += (x0[i] != 0.0) ? 0.05 * std::fabs(x0[i]) : 0.00025;
        fx[i + 1] = guarded_eval(f, x[i + 1]);
    }

    std::vector<std::size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> xc(n), xr(n), xt(n);

    for (std::size_t it = 0; it < max_iter; ++it) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const double fbest = fx[idx[0]];
        const double fworst = fx[idx[n]];
        if (!std::isfinite(fbest)) break;  // nothing feasible to work with
        if (std::isfinite(fworst) && fworst - fbest <= cfg.rq_tol) break;

        // centroid of all but the worst vertex
        std::fill(xc.begin(), xc.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) xc[j] += x[idx[i]][j];
        }
        for (std::size_t j = 0; j < n; ++j) xc[j] /= static_cast<double>(n);

        const std::vector<double>& xw = x[idx[n]];
        for (std::size_t j = 0; j < n; ++j) xr[j] = xc[j] + alpha * (xc[j] - xw[j]);
        const double fr = guarded_eval(f, xr);

        if (fr < fbest) {
            for (std::size_t j = 0; j < n; ++j) xt[j] = xc[j] + gamma * (xr[j] - xc[j]);
            const double fe = guarded_eval(f, xt);
            if (fe < fr) {
                x[idx[n]] = xt;
                fx[idx[n]] = fe;
            } else {
                x[idx[n]] = xr;
                fx[idx[n]] = fr;
            }
            continue;
        }
        if (fr < fx[idx[n - 1]]) {
            x[idx[n]] = xr;
            fx[idx[n]] = fr;
            continue;
        }
        const bool outside = fr < fworst;
        if (outside) {
            for (std::size_t j = 0; j < n; ++j) xt[j] = xc[j] + rho * (xr[j] - xc[j]);
        } else {
            for (std::size_t j = 0; j < n; ++j) xt[j] = xc[j] + rho * (xw[j] - xc[j]);
        }
        const double ft = guarded_eval(f, xt);
        if (ft < (outside ? fr : fworst)) {
            x[idx[n]] = xt;
            fx[idx[n]] = ft;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 1; i <= n; ++i) {
            auto& xi = x[idx[i]];
            const auto& xb = x[idx[0]];
            for (std::size_t j = 0; j < n; ++j) xi[j] = xb[j] + sigma * (xi[j] - xb[j]);
            fx[idx[i]] = guarded_eval(f, xi);
        }
    }

    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    if (fx[idx[0]] < fx0) return {x[idx[0]], fx[idx[0]]};
    return {x0, fx0};
}

Eigen::VectorXd fd_gradient(const Objective& f, const std::vector<double>& x, double fx,
                            double h) {
    const std::size_t n = x.size();
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < n; ++i) {
        xp[i] = x[i] + h;
        double fp = guarded_eval(f, xp);
        if (std::isfinite(fp)) {
            g(static_cast<Eigen::Index>(i)) = (fp - fx) / h;
        } else {
            xp[i] = x[i] - h;  // backward difference at a feasibility edge
            fp = guarded_eval(f, xp);
            g(static_cast<Eigen::Index>(i)) = std::isfinite(fp) ? (fx - fp) / h : 0.0;
        }
        xp[i] = x[i];
    }
    return g;
}

// Quasi-Newton polish with finite-difference gradients and a backtracking
// line search that only ever accepts a decrease.
StageResult quasi_newton_polish(const Objective& f, const std::vector<double>& x0, double fx0,
                                const OptimizerConfig& cfg) {
    const std::size_t n = x0.size();
    std::vector<double> x = x0;
    double fx = fx0;
    if (!std::isfinite(fx)) return {x, fx};

    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
    Eigen::VectorXd g = fd_gradient(f, x, fx, cfg.qn_grad_step);

    std::vector<double> xt(n);
    for (std::size_t it = 0; it < cfg.qn_max_iter; ++it) {
        const Eigen::VectorXd step = qn_step(g, B, cfg.log);
        if (step.norm() == 0.0) break;

        double t = 1.0;
        double ft = kInf;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t j = 0; j < n; ++j) xt[j] = x[j] + t * step(static_cast<Eigen::Index>(j));
            ft = guarded_eval(f, xt);
            if (ft < fx) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = t * step;
        const double improvement = fx - ft;
        x = xt;
        fx = ft;
        const Eigen::VectorXd g_new = fd_gradient(f, x, fx, cfg.qn_grad_step);
        const Eigen::VectorXd yv = g_new - g;
        g = g_new;

        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            // BFGS least-change secant update of the Hessian approximation
            const Eigen::VectorXd Bs = B * s;
            const double sBs = s.dot(Bs);
            if (sBs > 0.0) {
                B -= (Bs * Bs.transpose()) / sBs;
                B += (yv * yv.transpose()) / sy;
            }
        } else {
            B.setIdentity();
            if (cfg.log) cfg.log("qn: curvature condition failed, reset B to identity");
        }

        if (improvement < cfg.rq_tol) break;
    }
    return {x, fx};
}

}  // namespace

void OptimizerConfig::validate() const {
    if (m_keep == 0 || n_starts == 0 || m_keep > n_starts) {
        throw std::invalid_argument("OptimizerConfig: need 1 <= m_keep <= n_starts");
    }
    if (!(rq_tol > 0.0)) throw std::invalid_argument("OptimizerConfig: rq_tol must be > 0");
    if (max_alternations == 0) {
        throw std::invalid_argument("OptimizerConfig: max_alternations must be >= 1");
    }
    if (!(qn_grad_step > 0.0)) {
        throw std::invalid_argument("OptimizerConfig: qn_grad_step must be > 0");
    }
}

Eigen::VectorXd qn_step(const Eigen::VectorXd& grad, Eigen::MatrixXd& hessian_approx,
                        const LogSink& log) {
    Eigen::LLT<Eigen::MatrixXd> llt(hessian_approx);
    if (llt.info() != Eigen::Success) {
        hessian_approx.setIdentity();
        if (log) log("qn_step: indefinite or singular Hessian approximation, reset to identity");
        return -grad;
    }
    return llt.solve(-grad);
}

FitOutcome refine(const Objective& f, const ParamVector& beta0, const OptimizerConfig& cfg) {
    cfg.validate();
    for (double v : beta0) {
        if (!std::isfinite(v)) throw std::invalid_argument("refine: non-finite start");
    }

    FitOutcome out;
    out.beta_hat = beta0;
    out.loss = guarded_eval(f, beta0);
    out.loss_history.push_back(out.loss);

    for (std::size_t k = 1; k <= cfg.max_alternations; ++k) {
        const double before = out.loss;
        auto stage = nelder_mead(f, out.beta_hat, out.loss, cfg);
        stage = quasi_newton_polish(f, stage.x, stage.fx, cfg);
        out.beta_hat = std::move(stage.x);
        out.loss = stage.fx;
        out.alternations_used = k;
        out.loss_history.push_back(out.loss);
        if (cfg.log) {
            cfg.log("refine: alternation " + std::to_string(k) + " loss " +
                    std::to_string(out.loss));
        }
        const double improvement = before - out.loss;
        if (improvement < cfg.rq_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

FitOutcome multistart(const Objective& f, std::size_t dim, const OptimizerConfig& cfg) {
    cfg.validate();
    if (dim == 0) throw std::invalid_argument("multistart: dimension must be >= 1");

    Rng rng(cfg.seed);
    std::vector<std::vector<double>> starts(cfg.n_starts, std::vector<double>(dim));
    std::vector<double> losses(cfg.n_starts);
    std::size_t feasible = 0;
    for (std::size_t i = 0; i < cfg.n_starts; ++i) {
        for (std::size_t j = 0; j < dim; ++j) starts[i][j] = rng.uniform01();
        losses[i] = guarded_eval(f, starts[i]);
        if (std::isfinite(losses[i])) ++feasible;
    }
    if (feasible == 0) {
        throw std::runtime_error("multistart: every starting candidate is infeasible");
    }

    std::vector<std::size_t> order(cfg.n_starts);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (losses[a] != losses[b]) return losses[a] < losses[b];
        return a < b;
    });

    const std::size_t keep = std::min(cfg.m_keep, feasible);
    FitOutcome best;
    best.loss = kInf;
    bool have_best = false;
    for (std::size_t k = 0; k < keep; ++k) {
        const std::size_t rank = order[k];
        FitOutcome cand = refine(f, starts[rank], cfg);
        cand.start_rank = rank;
        if (cfg.log) {
            cfg.log("multistart: candidate " + std::to_string(rank) + " refined to loss " +
                    std::to_string(cand.loss));
        }
        if (!have_best || cand.loss < best.loss ||
            (cand.loss == best.loss && cand.start_rank < best.start_rank)) {
            best = std::move(cand);
            have_best = true;
        }
    }
    return best;
}

FitOutcome fit_model(const ModelSpec& spec, const ReturnSeries& y, const OptimizerConfig& cfg) {
    spec.validate();
    const auto dim = regime_dim(spec.regime);
    const Objective f = [&spec, &y](const std::vector<double>& beta) {
        return objective(spec, beta, y);
    };
    return multistart(f, dim, cfg);
}

}  // namespace caviar
