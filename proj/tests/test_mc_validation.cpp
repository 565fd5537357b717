#include <doctest.h>

#include <cmath>
#include <vector>

#include "caviar/mc_validation.hpp"
#include "caviar/stats.hpp"

using namespace caviar;

namespace {

SyntheticDGP garch_dgp(double omega, double alpha, double beta, std::size_t t_obs,
                       std::uint64_t seed) {
    SyntheticDGP dgp;
    dgp.kind = DgpKind::Garch11;
    dgp.true_params = {omega, alpha, beta};
    dgp.t_obs = t_obs;
    dgp.seed = seed;
    return dgp;
}

}  // namespace

TEST_CASE("simulation is reproducible and seed-sensitive") {
    SyntheticDGP dgp = garch_dgp(0.05, 0.1, 0.85, 200, 77);
    SimulatedSeries a = simulate(dgp);
    SimulatedSeries b = simulate(dgp);
    REQUIRE(a.series.size() == 200);
    CHECK(a.series.returns == b.series.returns);
    CHECK(a.true_quantile == b.true_quantile);
    CHECK(a.series.split_index == 200);

    dgp.seed = 78;
    SimulatedSeries c = simulate(dgp);
    CHECK(a.series.returns != c.series.returns);
}

TEST_CASE("constant-quantile DGP pins the true path at the normal quantile") {
    SyntheticDGP dgp;
    dgp.kind = DgpKind::ConstantQuantile;
    dgp.theta = 0.05;
    dgp.t_obs = 500;
    dgp.seed = 3;
    SimulatedSeries sim = simulate(dgp);
    for (double q : sim.true_quantile) {
        CHECK(q == doctest::Approx(-1.6448536269514729).epsilon(1e-12));
    }
    // iid standard normals: sample mean near zero, variance near one.
    double mean = 0.0, m2 = 0.0;
    for (double y : sim.series.returns) mean += y;
    mean /= 500.0;
    for (double y : sim.series.returns) m2 += (y - mean) * (y - mean);
    m2 /= 499.0;
    CHECK(std::fabs(mean) < 0.15);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("GARCH simulation reproduces its unconditional variance") {
    // omega / (1 - alpha - beta) = 1 for these values.
    SyntheticDGP dgp = garch_dgp(0.05, 0.10, 0.85, 50000, 4);
    SimulatedSeries sim = simulate(dgp);
    double m2 = 0.0;
    for (double y : sim.series.returns) m2 += y * y;
    m2 /= static_cast<double>(sim.series.size());
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.10));

    // alpha = beta = 0 degenerates to iid with variance omega.
    SyntheticDGP iid = garch_dgp(4.0, 0.0, 0.0, 20000, 5);
    SimulatedSeries flat = simulate(iid);
    double v = 0.0;
    for (double y : flat.series.returns) v += y * y;
    v /= static_cast<double>(flat.series.size());
    CHECK(v == doctest::Approx(4.0).epsilon(0.10));
    for (std::size_t t = 0; t < flat.true_quantile.size(); ++t) {
        CHECK(flat.true_quantile[t] ==
              doctest::Approx(2.0 * -1.6448536269514729).epsilon(1e-12));
    }
}

TEST_CASE("true quantile paths have the nominal exceedance rate") {
    for (DgpKind kind : {DgpKind::ConstantQuantile, DgpKind::Garch11, DgpKind::SavTrue}) {
        SyntheticDGP dgp;
        dgp.kind = kind;
        dgp.theta = 0.05;
        dgp.t_obs = 20000;
        dgp.seed = 6;
        if (kind == DgpKind::Garch11) dgp.true_params = {0.05, 0.1, 0.85};
        if (kind == DgpKind::SavTrue) dgp.true_params = {0.2, 0.8, 0.3};
        SimulatedSeries sim = simulate(dgp);
        std::size_t hits = 0;
        for (std::size_t t = 0; t < sim.series.size(); ++t) {
            if (sim.series.returns[t] < sim.true_quantile[t]) ++hits;
        }
        const double rate = static_cast<double>(hits) / static_cast<double>(sim.series.size());
        const double band = 3.0 * std::sqrt(0.05 * 0.95 / 20000.0);
        CHECK(std::fabs(rate - 0.05) <= band);
    }
}

TEST_CASE("quantile-scale parameter maps") {
    SyntheticDGP garch = garch_dgp(0.05, 0.1, 0.85, 100, 1);
    CHECK(matching_regime(garch) == Regime::IndirectGARCH);
    const double z = -1.6448536269514729;
    ParamVector mapped = true_regime_params(garch);
    REQUIRE(mapped.size() == 3);
    CHECK(mapped[0] == doctest::Approx(0.05 * z * z).epsilon(1e-12));
    CHECK(mapped[1] == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(mapped[2] == doctest::Approx(0.1 * z * z).epsilon(1e-12));

    SyntheticDGP sav;
    sav.kind = DgpKind::SavTrue;
    sav.true_params = {0.2, 0.8, 0.3};
    CHECK(matching_regime(sav) == Regime::SAV);
    ParamVector sav_mapped = true_regime_params(sav);
    CHECK(sav_mapped[0] == doctest::Approx(-0.2));
    CHECK(sav_mapped[1] == doctest::Approx(0.8));
    CHECK(sav_mapped[2] == doctest::Approx(-0.3));

    SyntheticDGP constant;
    constant.kind = DgpKind::ConstantQuantile;
    constant.theta = 0.05;
    CHECK(matching_regime(constant) == Regime::Constant);
    CHECK(true_regime_params(constant)[0] == doctest::Approx(z).epsilon(1e-12));
}

TEST_CASE("SAV-true simulation respects its magnitude recursion") {
    SyntheticDGP dgp;
    dgp.kind = DgpKind::SavTrue;
    dgp.true_params = {0.2, 0.8, 0.3};
    dgp.theta = 0.05;
    dgp.t_obs = 300;
    dgp.seed = 7;
    SimulatedSeries sim = simulate(dgp);
    // v_t = -q_t must satisfy v_{t+1} = b1 + b2 v_t + b3 |y_t| along the path.
    for (std::size_t t = 0; t + 1 < sim.series.size(); ++t) {
        const double v = -sim.true_quantile[t];
        const double v_next = 0.2 + 0.8 * v + 0.3 * std::fabs(sim.series.returns[t]);
        CHECK(-sim.true_quantile[t + 1] == doctest::Approx(v_next).epsilon(1e-12));
        CHECK(sim.true_quantile[t] < 0.0);
    }
}

TEST_CASE("DGP validation rejects bad parameterizations") {
    SyntheticDGP dgp = garch_dgp(0.05, 0.5, 0.5, 100, 1);  // alpha + beta = 1
    CHECK_THROWS_AS(dgp.validate(), std::invalid_argument);

    dgp = garch_dgp(-0.1, 0.1, 0.8, 100, 1);
    CHECK_THROWS_AS(dgp.validate(), std::invalid_argument);

    dgp = garch_dgp(0.05, 0.1, 0.8, 100, 1);
    dgp.true_params.pop_back();
    CHECK_THROWS_AS(dgp.validate(), std::invalid_argument);

    SyntheticDGP sav;
    sav.kind = DgpKind::SavTrue;
    sav.true_params = {0.2, 0.95, 0.3};  // contraction fails at theta = 0.05
    CHECK_THROWS_AS(sav.validate(), std::invalid_argument);

    SyntheticDGP constant;
    constant.kind = DgpKind::ConstantQuantile;
    constant.true_params = {1.0};
    CHECK_THROWS_AS(constant.validate(), std::invalid_argument);

    constant.true_params.clear();
    constant.theta = 0.0;
    CHECK_THROWS_AS(constant.validate(), std::invalid_argument);

    constant.theta = 0.05;
    constant.t_obs = 0;
    CHECK_THROWS_AS(constant.validate(), std::invalid_argument);
}

TEST_CASE("consistency experiment reports per-size RMSE for a tiny run") {
    SyntheticDGP dgp;
    dgp.kind = DgpKind::ConstantQuantile;
    dgp.theta = 0.05;
    dgp.seed = 11;

    ExperimentConfig cfg;
    cfg.optimizer.n_starts = 8;
    cfg.optimizer.m_keep = 2;

    MCSummary s = consistency_experiment(dgp, {150, 600}, 3, cfg);
    CHECK(s.replications == 6);
    REQUIRE(s.rmse_by_t.size() == 2);
    REQUIRE(s.rmse_by_t.at(150).size() == 1);
    REQUIRE(s.rmse_by_t.at(600).size() == 1);
    CHECK(s.rmse_by_t.at(150)[0] > 0.0);
    // Quadrupling the sample roughly halves the error; allow generous slack
    // for only three replications.
    CHECK(s.rmse_by_t.at(600)[0] < s.rmse_by_t.at(150)[0]);
    CHECK(s.coverage_95.empty());
    CHECK(s.dq_rejection_rate == 0.0);

    CHECK_THROWS_AS((void)consistency_experiment(dgp, {}, 3, cfg), std::invalid_argument);
    CHECK_THROWS_AS((void)consistency_experiment(dgp, {100}, 0, cfg), std::invalid_argument);
}

TEST_CASE("coverage experiment produces rates in [0, 1]") {
    SyntheticDGP dgp;
    dgp.kind = DgpKind::ConstantQuantile;
    dgp.theta = 0.05;
    dgp.seed = 12;

    ExperimentConfig cfg;
    cfg.optimizer.n_starts = 8;
    cfg.optimizer.m_keep = 2;

    MCSummary s = coverage_experiment(dgp, 400, 4, cfg);
    CHECK(s.replications == 4);
    REQUIRE(s.coverage_95.size() == 1);
    CHECK(s.coverage_95[0] >= 0.0);
    CHECK(s.coverage_95[0] <= 1.0);
    CHECK(s.rmse_by_t.empty());

    CHECK_THROWS_AS((void)coverage_experiment(dgp, 400, 0, cfg), std::invalid_argument);
}

TEST_CASE("DQ size experiment counts rejections at nominal five percent") {
    SyntheticDGP dgp;
    dgp.kind = DgpKind::ConstantQuantile;
    dgp.theta = 0.05;
    dgp.seed = 13;

    ExperimentConfig cfg;
    cfg.optimizer.n_starts = 8;
    cfg.optimizer.m_keep = 2;

    MCSummary s = dq_size_experiment(dgp, 400, 4, std::nullopt, cfg);
    CHECK(s.replications == 4);
    CHECK(s.dq_rejection_rate >= 0.0);
    CHECK(s.dq_rejection_rate <= 1.0);
    CHECK(s.rmse_by_t.empty());
    CHECK(s.coverage_95.empty());

    CHECK_THROWS_AS((void)dq_size_experiment(dgp, 400, 0, std::nullopt, cfg),
                    std::invalid_argument);
}