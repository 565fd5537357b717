#include "caviar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace caviar::stats {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Wichura (1988), algorithm AS 241, routine PPND16.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie in (0,1)");
    }

    static const double a[8] = {
        3.3871328727963666080e0,  1.3314166789178437745e2,
        1.9715909503065514427e3,  1.3731693765509461125e4,
        4.5921953931549871457e4,  6.7265770927008700853e4,
        3.3430575583588128105e4,  2.5090809287301226727e3};
    static const double b[8] = {
        1.0,                      4.2313330701600911252e1,
        6.8718700749205790830e2,  5.3941960214247511077e3,
        2.1213794301586595867e4,  3.9307895800092710610e4,
        2.8729085735721942674e4,  5.2264952788528545610e3};
    static const double c[8] = {
        1.42343711074968357734e0,  4.63033784615654529590e0,
        5.76949722146069140550e0,  3.64784832476320460504e0,
        1.27045825245236838258e0,  2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static const double d[8] = {
        1.0,                       2.05319162663775882187e0,
        1.67638483018380384940e0,  6.89767334985100004550e-1,
        1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static const double e[8] = {
        6.65790464350110377720e0,  5.46378491116411436990e0,
        1.78482653991729133580e0,  2.96560571828504891230e-1,
        2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static const double f[8] = {
        1.0,                       5.99832206555887937690e-1,
        1.36929880922735805310e-1, 1.48753612908506148525e-2,
        7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};

    auto poly = [](const double* coef, double x) {
        double v = coef[7];
        for (int i = 6; i >= 0; --i) v = v * x + coef[i];
        return v;
    };

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly(a, r) / poly(b, r);
    }

    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = poly(c, r) / poly(d, r);
    } else {
        r -= 5.0;
        val = poly(e, r) / poly(f, r);
    }
    return (q < 0.0) ? -val : val;
}

namespace {

// Series expansion of P(a,x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) by modified Lentz, valid for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) {
        throw std::domain_error("gamma_p: requires x >= 0 and a > 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double chi_squared_cdf(double x, double dof) {
    if (dof <= 0.0) throw std::domain_error("chi_squared_cdf: dof must be > 0");
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return gamma_p(0.5 * dof, 0.5 * x);
}

double binomial_two_sided_pvalue(int k, int n, double p) {
    if (n <= 0 || k < 0 || k > n || !(p > 0.0 && p < 1.0)) {
        throw std::domain_error("binomial_two_sided_pvalue: invalid arguments");
    }
    const double logp = std::log(p);
    const double logq = std::log1p(-p);
    auto log_pmf = [&](int i) {
        return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
               i * logp + (n - i) * logq;
    };
    // Sum every outcome no more likely than the observed one.
    const double lp_obs = log_pmf(k);
    double pv = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double lp = log_pmf(i);
        if (lp <= lp_obs + 1e-7) pv += std::exp(lp);
    }
    return std::min(pv, 1.0);
}

double lower_quantile(const std::vector<double>& x, double theta) {
    if (x.empty()) throw std::invalid_argument("lower_quantile: empty sample");
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("lower_quantile: theta must lie in (0,1)");
    }
    const auto n = x.size();
    auto idx = static_cast<std::size_t>(std::ceil(theta * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    std::vector<double> tmp(x);
    std::nth_element(tmp.begin(), tmp.begin() + (idx - 1), tmp.end());
    return tmp[idx - 1];
}

double median_abs(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("median_abs: empty sample");
    std::vector<double> tmp(x.size());
    std::transform(x.begin(), x.end(), tmp.begin(), [](double v) { return std::fabs(v); });
    const auto n = tmp.size();
    std::nth_element(tmp.begin(), tmp.begin() + n / 2, tmp.end());
    double hi = tmp[n / 2];
    if (n % 2 == 0) {
        std::nth_element(tmp.begin(), tmp.begin() + (n / 2 - 1), tmp.end());
        return 0.5 * (tmp[n / 2 - 1] + hi);
    }
    return hi;
}

}  // namespace caviar::stats
