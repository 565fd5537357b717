#include <doctest.h>

#include <cmath>
#include <vector>

#include "caviar/dq_backtest.hpp"
#include "caviar/rng.hpp"
#include "caviar/stats.hpp"

using namespace caviar;

namespace {

ReturnSeries gaussian_series(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    ReturnSeries y;
    y.returns.resize(n);
    for (double& v : y.returns) v = rng.normal();
    y.split_index = n;
    return y;
}

HitSeries alternating_hits(std::size_t n, double theta, std::size_t every) {
    HitSeries h;
    h.theta = theta;
    h.hits.resize(n);
    for (std::size_t t = 0; t < n; ++t) h.hits[t] = (t % every == 0 ? 1.0 : 0.0) - theta;
    return h;
}

}  // namespace

TEST_CASE("instrument matrix shapes and lag alignment") {
    const std::size_t n = 12;
    HitSeries h = alternating_hits(n, 0.05, 3);
    std::vector<double> f(n);
    for (std::size_t t = 0; t < n; ++t) f[t] = -1.0 - 0.01 * static_cast<double>(t);

    SUBCASE("no lags: constant and quantile columns over every row") {
        InstrumentSpec spec;
        spec.lags = 0;
        InstrumentMatrix m = build_instruments(h, f, spec);
        CHECK(m.rows() == n);
        CHECK(m.cols() == 2);
        CHECK(m.start_row == 0);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(m.x(static_cast<Eigen::Index>(i), 0) == 1.0);
            CHECK(m.x(static_cast<Eigen::Index>(i), 1) == f[i]);
        }
        CHECK(m.description == "constant, quantile estimate");
    }

    SUBCASE("four lags: first usable row sees hits 3..0") {
        InstrumentMatrix m = build_instruments(h, f);
        CHECK(m.rows() == n - 4);
        CHECK(m.cols() == 6);
        CHECK(m.start_row == 4);
        // Row 0 is period 4: lag columns hold hits[3], hits[2], hits[1], hits[0].
        CHECK(m.x(0, 1) == h.hits[3]);
        CHECK(m.x(0, 2) == h.hits[2]);
        CHECK(m.x(0, 3) == h.hits[1]);
        CHECK(m.x(0, 4) == h.hits[0]);
        CHECK(m.x(0, 5) == f[4]);
        // Shifting one row down shifts every lag by one period.
        CHECK(m.x(1, 1) == h.hits[4]);
        CHECK(m.x(1, 4) == h.hits[1]);
        CHECK(m.description == "constant, 4 hit lags, quantile estimate");
    }

    SUBCASE("lag-only set drops constant and quantile columns") {
        InstrumentSpec spec;
        spec.lags = 2;
        spec.include_constant = false;
        spec.include_var = false;
        InstrumentMatrix m = build_instruments(h, f, spec);
        CHECK(m.cols() == 2);
        CHECK(m.description == "2 hit lags");
    }

    SUBCASE("degenerate requests are rejected") {
        InstrumentSpec spec;
        spec.lags = n;
        CHECK_THROWS_AS((void)build_instruments(h, f, spec), std::invalid_argument);

        InstrumentSpec empty;
        empty.lags = 0;
        empty.include_constant = false;
        empty.include_var = false;
        CHECK_THROWS_AS((void)build_instruments(h, f, empty), std::invalid_argument);

        std::vector<double> short_f(n - 1);
        CHECK_THROWS_AS((void)build_instruments(h, short_f, InstrumentSpec{}),
                        std::invalid_argument);
    }
}

TEST_CASE("out-of-sample statistic reduces to a scalar for a constant instrument") {
    // With X = 1 the statistic is (sum Hit)^2 / (N theta(1-theta)).
    const std::size_t n = 40;
    HitSeries h = alternating_hits(n, 0.05, 8);  // 5 hits in 40
    InstrumentSpec spec;
    spec.lags = 0;
    spec.include_var = false;
    InstrumentMatrix x = build_instruments(h, std::vector<double>(n, -1.0), spec);

    DqStatistic dq = dq_out_of_sample(h, x);
    double hit_sum = 0.0;
    for (double v : h.hits) hit_sum += v;
    const double expect = hit_sum * hit_sum / (static_cast<double>(n) * 0.05 * 0.95);
    CHECK(dq.statistic == doctest::Approx(expect).epsilon(1e-12));
    CHECK(dq.dof == 1);
    CHECK(dq.p_value ==
          doctest::Approx(1.0 - stats::chi_squared_cdf(dq.statistic, 1.0)).epsilon(1e-12));
    CHECK(dq.formula == "Hit'X (X'X)^{-1} X'Hit / (theta(1-theta))");
}

TEST_CASE("out-of-sample statistic is invariant to invertible instrument mixing") {
    // The projection onto the instrument span only depends on the span.
    Rng rng(51);
    const std::size_t n = 200;
    HitSeries h;
    h.theta = 0.05;
    h.hits.resize(n);
    for (std::size_t t = 0; t < n; ++t) h.hits[t] = (rng.uniform01() < 0.05 ? 1.0 : 0.0) - 0.05;
    std::vector<double> f(n);
    for (double& v : f) v = -1.5 + 0.2 * rng.normal();

    InstrumentSpec spec;
    spec.lags = 0;
    InstrumentMatrix x = build_instruments(h, f, spec);  // [1, f_t]

    InstrumentMatrix mixed = x;
    // Columns [2*1 + 0.5*f, -1 + 3*f]: an invertible 2x2 recombination.
    for (Eigen::Index i = 0; i < mixed.x.rows(); ++i) {
        const double a = x.x(i, 0), b = x.x(i, 1);
        mixed.x(i, 0) = 2.0 * a + 0.5 * b;
        mixed.x(i, 1) = -a + 3.0 * b;
    }

    DqStatistic plain = dq_out_of_sample(h, x);
    DqStatistic rotated = dq_out_of_sample(h, mixed);
    CHECK(plain.statistic == doctest::Approx(rotated.statistic).epsilon(1e-8));
    CHECK(plain.dof == rotated.dof);
}

TEST_CASE("orthogonal instruments give a zero statistic and p-value one") {
    // Hits balanced to sum exactly to zero make X'Hit = 0 for X = 1.
    const std::size_t n = 20;
    HitSeries h;
    h.theta = 0.5;
    h.hits.resize(n);
    for (std::size_t t = 0; t < n; ++t) h.hits[t] = (t < n / 2 ? 1.0 : 0.0) - 0.5;

    InstrumentSpec spec;
    spec.lags = 0;
    spec.include_var = false;
    InstrumentMatrix x = build_instruments(h, std::vector<double>(n, -1.0), spec);
    DqStatistic dq = dq_out_of_sample(h, x);
    CHECK(dq.statistic == doctest::Approx(0.0));
    CHECK(dq.p_value == doctest::Approx(1.0));
}

TEST_CASE("in-sample statistic matches a direct computation of the corrected form") {
    // SAV path on simulated data, lag-free instruments that stay clear of
    // the exact-annihilation direction (no constant + quantile pairing).
    ReturnSeries y = gaussian_series(300, 52);
    ModelSpec spec;
    spec.regime = Regime::SAV;
    spec.theta = 0.05;
    const ParamVector beta{-0.2, 0.7, -0.3};
    QuantilePath path = eval_path(spec, beta, y);
    CovarianceEstimates cov = estimate_covariance(spec, beta, y, path);
    HitSeries h = hit_series(spec.theta, y.returns, path.f);

    InstrumentSpec ispec;
    ispec.lags = 2;
    ispec.include_constant = false;
    ispec.include_var = false;
    InstrumentMatrix x = build_instruments(h, path.f, ispec);

    DqStatistic dq = dq_in_sample(h, x, y.returns, path.f, path.grad, cov);

    // Independent evaluation of the same quadratic form.
    const std::size_t n = y.size();
    const double c = cov.bandwidth_used;
    Eigen::MatrixXd xhg = Eigen::MatrixXd::Zero(x.x.cols(), 3);
    for (Eigen::Index i = 0; i < x.x.rows(); ++i) {
        const std::size_t t = x.start_row + static_cast<std::size_t>(i);
        const double kernel = std::fabs(y.returns[t] - path.f[t]) < c ? 1.0 / (2.0 * c) : 0.0;
        xhg += kernel * x.x.row(i).transpose() * path.grad.row(static_cast<Eigen::Index>(t));
    }
    Eigen::MatrixXd grad_seg = path.grad.bottomRows(x.x.rows());
    Eigen::MatrixXd m =
        x.x.transpose() -
        (xhg / static_cast<double>(n)) * cov.d_hat.inverse() * grad_seg.transpose();
    Eigen::VectorXd hit_v(x.x.rows());
    for (Eigen::Index i = 0; i < hit_v.size(); ++i)
        hit_v(i) = h.hits[x.start_row + static_cast<std::size_t>(i)];
    const Eigen::VectorXd xh = x.x.transpose() * hit_v;
    const double expect =
        xh.dot((m * m.transpose()).inverse() * xh) / (0.05 * 0.95);

    CHECK(dq.statistic == doctest::Approx(expect).epsilon(1e-8));
    CHECK(dq.dof == 2);
    CHECK(dq.statistic >= 0.0);
    CHECK(dq.formula == "Hit'X (MM')^{-1} X'Hit / (theta(1-theta))");
}

TEST_CASE("in-sample test reports the structural degeneracy of constant plus quantile") {
    // The quantile path of these recursions is an exact linear combination
    // of its own parameter gradients plus a constant, so the estimation
    // correction annihilates the [1, f_t] pair and MM' becomes singular.
    ReturnSeries y = gaussian_series(400, 53);
    ModelSpec spec;
    spec.regime = Regime::SAV;
    spec.theta = 0.05;
    const ParamVector beta{-0.1, 0.8, -0.25};
    QuantilePath path = eval_path(spec, beta, y);
    CovarianceEstimates cov = estimate_covariance(spec, beta, y, path);
    HitSeries h = hit_series(spec.theta, y.returns, path.f);

    InstrumentSpec ispec;
    ispec.lags = 0;  // [1, f_t] alone: exactly inside the gradient span
    InstrumentMatrix x = build_instruments(h, path.f, ispec);
    CHECK_THROWS_WITH_AS(
        (void)dq_in_sample(h, x, y.returns, path.f, path.grad, cov),
        doctest::Contains("singular after the estimation correction"), std::runtime_error);
}

TEST_CASE("in-sample test validates argument alignment") {
    ReturnSeries y = gaussian_series(100, 54);
    ModelSpec spec;
    spec.regime = Regime::SAV;
    spec.theta = 0.05;
    const ParamVector beta{-0.2, 0.7, -0.3};
    QuantilePath path = eval_path(spec, beta, y);
    CovarianceEstimates cov = estimate_covariance(spec, beta, y, path);
    HitSeries h = hit_series(spec.theta, y.returns, path.f);
    InstrumentMatrix x = build_instruments(h, path.f);

    std::vector<double> short_y(y.returns.begin(), y.returns.end() - 1);
    CHECK_THROWS_AS((void)dq_in_sample(h, x, short_y, path.f, path.grad, cov),
                    std::invalid_argument);

    HitSeries short_h = h;
    short_h.hits.pop_back();
    CHECK_THROWS_AS((void)dq_in_sample(short_h, x, y.returns, path.f, path.grad, cov),
                    std::invalid_argument);
}

TEST_CASE("hit rate counts strict exceedances and tests against theta") {
    HitSeries h = alternating_hits(100, 0.05, 20);  // 5 hits in 100
    HitRateResult r = hit_rate(h);
    CHECK(r.n_hits == 5);
    CHECK(r.rate == doctest::Approx(0.05));
    CHECK(r.binomial_p == doctest::Approx(1.0));  // dead-on the null

    HitSeries h2 = alternating_hits(100, 0.05, 10);  // 10 hits in 100
    HitRateResult r2 = hit_rate(h2);
    CHECK(r2.n_hits == 10);
    CHECK(r2.binomial_p == doctest::Approx(0.03410882338375017).epsilon(1e-12));

    HitSeries empty;
    empty.theta = 0.05;
    CHECK_THROWS_AS((void)hit_rate(empty), std::invalid_argument);
}