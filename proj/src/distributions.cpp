#include "crcsim/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "crcsim/special_functions.hpp"

namespace crcsim {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kZ975 = normal_quantile(0.975);
}  // namespace

const char* to_string(DistFamily f) {
    switch (f) {
        case DistFamily::beta: return "beta";
        case DistFamily::lognormal: return "lognormal";
        case DistFamily::normal: return "normal";
        case DistFamily::uniform: return "uniform";
        case DistFamily::fixed: return "fixed";
    }
    return "?";
}

DistFamily dist_family_from_string(const std::string& s) {
    if (s == "beta") return DistFamily::beta;
    if (s == "lognormal") return DistFamily::lognormal;
    if (s == "normal") return DistFamily::normal;
    if (s == "uniform") return DistFamily::uniform;
    if (s == "fixed") return DistFamily::fixed;
    throw std::domain_error("unknown distribution family '" + s + "'");
}

DistributionSpec DistributionSpec::make_beta(double alpha, double beta) {
    DistributionSpec d{DistFamily::beta, alpha, beta};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::make_lognormal(double meanlog, double sdlog) {
    DistributionSpec d{DistFamily::lognormal, meanlog, sdlog};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::make_normal(double mean, double sd) {
    DistributionSpec d{DistFamily::normal, mean, sd};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::make_uniform(double lo, double hi) {
    DistributionSpec d{DistFamily::uniform, lo, hi};
    d.validate();
    return d;
}
DistributionSpec DistributionSpec::make_fixed(double value) {
    DistributionSpec d{DistFamily::fixed, value, 0.0};
    d.validate();
    return d;
}

void DistributionSpec::validate() const {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("distribution parameters must be finite");
    switch (family) {
        case DistFamily::beta:
            if (a <= 0.0 || b <= 0.0) throw std::domain_error("beta: alpha,beta must be > 0");
            break;
        case DistFamily::lognormal:
        case DistFamily::normal:
            if (b <= 0.0) throw std::domain_error("normal/lognormal: sd must be > 0");
            break;
        case DistFamily::uniform:
            if (!(a < b)) throw std::domain_error("uniform: lo must be < hi");
            break;
        case DistFamily::fixed:
            break;
    }
}

double DistributionSpec::mean() const {
    switch (family) {
        case DistFamily::beta: return a / (a + b);
        case DistFamily::lognormal: return std::exp(a + 0.5 * b * b);
        case DistFamily::normal: return a;
        case DistFamily::uniform: return 0.5 * (a + b);
        case DistFamily::fixed: return a;
    }
    return 0.0;
}

double DistributionSpec::sd() const {
    switch (family) {
        case DistFamily::beta: {
            const double s = a + b;
            return std::sqrt(a * b / (s * s * (s + 1.0)));
        }
        case DistFamily::lognormal:
            return mean() * std::sqrt(std::expm1(b * b));
        case DistFamily::normal: return b;
        case DistFamily::uniform: return (b - a) / std::sqrt(12.0);
        case DistFamily::fixed: return 0.0;
    }
    return 0.0;
}

double DistributionSpec::log_pdf(double x) const {
    if (!std::isfinite(x)) return kNegInf;
    switch (family) {
        case DistFamily::beta: {
            if (x <= 0.0 || x >= 1.0) return kNegInf;
            return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
                   (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
        }
        case DistFamily::lognormal:
            if (x <= 0.0) return kNegInf;
            return normal_log_pdf(std::log(x), a, b) - std::log(x);
        case DistFamily::normal:
            return normal_log_pdf(x, a, b);
        case DistFamily::uniform:
            return (x < a || x > b) ? kNegInf : -std::log(b - a);
        case DistFamily::fixed:
            // Point mass; 0/-inf convention for exact-match bookkeeping only.
            return x == a ? 0.0 : kNegInf;
    }
    return kNegInf;
}

double DistributionSpec::pdf(double x) const { return std::exp(log_pdf(x)); }

double DistributionSpec::cdf(double x) const {
    switch (family) {
        case DistFamily::beta:
            return inc_beta(a, b, std::min(std::max(x, 0.0), 1.0));
        case DistFamily::lognormal:
            return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - a) / b);
        case DistFamily::normal:
            return normal_cdf((x - a) / b);
        case DistFamily::uniform:
            return x <= a ? 0.0 : (x >= b ? 1.0 : (x - a) / (b - a));
        case DistFamily::fixed:
            return x < a ? 0.0 : 1.0;
    }
    return 0.0;
}

double DistributionSpec::quantile(double p) const {
    if (family == DistFamily::fixed) return a;
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile: p must be in (0,1)");
    switch (family) {
        case DistFamily::beta: return inc_beta_inv(a, b, p);
        case DistFamily::lognormal: return std::exp(a + b * normal_quantile(p));
        case DistFamily::normal: return a + b * normal_quantile(p);
        case DistFamily::uniform: return a + p * (b - a);
        case DistFamily::fixed: break;
    }
    return a;
}

double DistributionSpec::sample(RngStream& stream) const {
    const double u = stream.uniform();
    return family == DistFamily::fixed ? a : quantile(u);
}

namespace {

// Two-quantile beta fit: nested bisection (median pinned at the interval
// midpoint while the width is matched) for a starting point, then a damped
// Newton solve on (log alpha, log beta) against both quantiles.
DistributionSpec fit_beta_interval(double lb, double ub) {
    if (!(lb > 0.0 && lb < ub && ub < 1.0))
        throw std::domain_error("fit_from_interval(beta): need 0 < lb < ub < 1");
    const double mid = 0.5 * (lb + ub);
    const double width = ub - lb;

    auto beta_for_median = [&](double alpha) {
        double lo = 1e-8, hi = 1e9;
        for (int it = 0; it < 200; ++it) {
            const double m = std::sqrt(lo * hi);
            (inc_beta(alpha, m, mid) < 0.5 ? lo : hi) = m;
        }
        return std::sqrt(lo * hi);
    };
    auto interval_width = [&](double alpha, double beta) {
        return inc_beta_inv(alpha, beta, 0.975) - inc_beta_inv(alpha, beta, 0.025);
    };

    double alo = 1e-6, ahi = 1e9;
    for (int it = 0; it < 200; ++it) {
        const double alpha = std::sqrt(alo * ahi);
        (interval_width(alpha, beta_for_median(alpha)) > width ? alo : ahi) = alpha;
    }
    double la = std::log(std::sqrt(alo * ahi));
    double lbeta = std::log(beta_for_median(std::exp(la)));

    auto residual = [&](double lna, double lnb, double& r0, double& r1) {
        const double al = std::exp(lna), be = std::exp(lnb);
        r0 = inc_beta_inv(al, be, 0.025) - lb;
        r1 = inc_beta_inv(al, be, 0.975) - ub;
        return std::fabs(r0) + std::fabs(r1);
    };

    double r0, r1;
    double err = residual(la, lbeta, r0, r1);
    for (int it = 0; it < 80 && err > 1e-10; ++it) {
        const double h = 1e-6;
        double p0, p1, q0, q1;
        residual(la + h, lbeta, p0, p1);
        residual(la, lbeta + h, q0, q1);
        const double j00 = (p0 - r0) / h, j01 = (q0 - r0) / h;
        const double j10 = (p1 - r1) / h, j11 = (q1 - r1) / h;
        const double det = j00 * j11 - j01 * j10;
        if (det == 0.0 || !std::isfinite(det)) break;
        double da = (r0 * j11 - r1 * j01) / det;
        double db = (r1 * j00 - r0 * j10) / det;
        double step = 1.0;
        for (int half = 0; half < 30; ++half) {
            double t0, t1;
            const double e = residual(la - step * da, lbeta - step * db, t0, t1);
            if (e < err) {
                la -= step * da;
                lbeta -= step * db;
                err = e;
                r0 = t0;
                r1 = t1;
                break;
            }
            step *= 0.5;
        }
    }
    if (err > 1e-6)
        throw std::domain_error("fit_from_interval(beta): no parameters reproduce the interval");
    return DistributionSpec::make_beta(std::exp(la), std::exp(lbeta));
}

}  // namespace

DistributionSpec fit_from_interval(DistFamily family, double lb, double ub) {
    if (!std::isfinite(lb) || !std::isfinite(ub) || !(lb < ub))
        throw std::domain_error("fit_from_interval: need finite lb < ub");
    switch (family) {
        case DistFamily::beta:
            return fit_beta_interval(lb, ub);
        case DistFamily::lognormal: {
            if (lb <= 0.0) throw std::domain_error("fit_from_interval(lognormal): lb must be > 0");
            const double m = 0.5 * (std::log(lb) + std::log(ub));
            const double s = (std::log(ub) - std::log(lb)) / (2.0 * kZ975);
            return DistributionSpec::make_lognormal(m, s);
        }
        case DistFamily::normal:
            return DistributionSpec::make_normal(0.5 * (lb + ub), (ub - lb) / (2.0 * kZ975));
        case DistFamily::uniform: {
            const double w = (ub - lb) / 0.95;
            return DistributionSpec::make_uniform(lb - 0.025 * w, ub + 0.025 * w);
        }
        case DistFamily::fixed:
            throw std::domain_error("fit_from_interval: fixed has no interval");
    }
    throw std::domain_error("fit_from_interval: unknown family");
}

DistributionSpec fit_from_moments(DistFamily family, double mean, double sd) {
    if (!std::isfinite(mean) || !std::isfinite(sd) || sd <= 0.0)
        throw std::domain_error("fit_from_moments: need finite mean and sd > 0");
    switch (family) {
        case DistFamily::beta: {
            if (!(mean > 0.0 && mean < 1.0))
                throw std::domain_error("fit_from_moments(beta): mean must be in (0,1)");
            if (sd < 1e-6)
                throw std::domain_error("fit_from_moments(beta): sd below conditioning floor 1e-6");
            const double k = mean * (1.0 - mean) / (sd * sd) - 1.0;
            if (k <= 0.0)
                throw std::domain_error("fit_from_moments(beta): sd^2 must be < mean(1-mean)");
            return DistributionSpec::make_beta(mean * k, (1.0 - mean) * k);
        }
        case DistFamily::lognormal: {
            if (mean <= 0.0) throw std::domain_error("fit_from_moments(lognormal): mean must be > 0");
            if (sd / mean < 1e-9)
                throw std::domain_error("fit_from_moments(lognormal): sd/mean below 1e-9");
            const double s2 = std::log1p((sd / mean) * (sd / mean));
            return DistributionSpec::make_lognormal(std::log(mean) - 0.5 * s2, std::sqrt(s2));
        }
        case DistFamily::normal:
            return DistributionSpec::make_normal(mean, sd);
        case DistFamily::uniform: {
            const double half = std::sqrt(3.0) * sd;
            return DistributionSpec::make_uniform(mean - half, mean + half);
        }
        case DistFamily::fixed:
            throw std::domain_error("fit_from_moments: fixed has no spread");
    }
    throw std::domain_error("fit_from_moments: unknown family");
}

void PriorSet::validate() const {
    for (const auto& d : dists) {
        d.validate();
        if (d.family == DistFamily::fixed)
            throw std::domain_error("priors: calibrated parameters cannot have a fixed prior");
    }
}

double prior_log_density(const std::array<double, NaturalHistoryParams::kNumCalibrated>& theta,
                         const PriorSet& priors) {
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double lp = priors.dists[i].log_pdf(theta[i]);
        if (lp == kNegInf) return kNegInf;
        sum += lp;
    }
    return sum;
}

}  // namespace crcsim
