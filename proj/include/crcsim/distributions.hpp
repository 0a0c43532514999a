#pragma once

#include <array>
#include <string>

#include "crcsim/params.hpp"
#include "crcsim/rng.hpp"

namespace crcsim {

enum class DistFamily { beta, lognormal, normal, uniform, fixed };

const char* to_string(DistFamily f);
DistFamily dist_family_from_string(const std::string& s);

/// A univariate distribution. Parameter slots by family:
///   beta(alpha, beta) | lognormal(meanlog, sdlog) | normal(mean, sd)
///   uniform(lo, hi)   | fixed(value, -)
struct DistributionSpec {
    DistFamily family = DistFamily::fixed;
    double a = 0.0;
    double b = 0.0;

    static DistributionSpec make_beta(double alpha, double beta);
    static DistributionSpec make_lognormal(double meanlog, double sdlog);
    static DistributionSpec make_normal(double mean, double sd);
    static DistributionSpec make_uniform(double lo, double hi);
    static DistributionSpec make_fixed(double value);

    void validate() const;  // throws std::domain_error on invalid parameters

    double mean() const;
    double sd() const;
    double log_pdf(double x) const;  // -inf outside support
    double pdf(double x) const;
    double cdf(double x) const;
    double quantile(double p) const;  // p in (0,1)

    /// Inverse-CDF sampling; consumes exactly one uniform.
    double sample(RngStream& stream) const;
};

/// Fits a distribution whose 95% equal-tailed interval is (lb, ub).
/// Closed form for lognormal/normal/uniform; numeric two-quantile solve for
/// beta (both quantiles matched within 1e-6).
DistributionSpec fit_from_interval(DistFamily family, double lb, double ub);

/// Moment matching. beta requires sd >= 1e-6 and sd^2 < mean(1-mean).
DistributionSpec fit_from_moments(DistFamily family, double mean, double sd);

/// Priors for the 9 calibrated parameters, in calibration order.
struct PriorSet {
    std::array<DistributionSpec, NaturalHistoryParams::kNumCalibrated> dists;

    void validate() const;
};

/// Sum of component prior log densities; -inf if any component is out of
/// support.
double prior_log_density(const std::array<double, NaturalHistoryParams::kNumCalibrated>& theta,
                         const PriorSet& priors);

}  // namespace crcsim
