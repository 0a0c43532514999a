#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "crcsim/distributions.hpp"
#include "crcsim/executor.hpp"
#include "crcsim/life_table.hpp"
#include "crcsim/microsim.hpp"
#include "crcsim/mvn.hpp"
#include "crcsim/targets.hpp"

namespace crcsim {

struct ImisConfig {
    int n0 = 1000;            // initial prior draws
    int b = 250;              // batch size per iteration
    int j = 5000;             // final resample size
    int max_iterations = 200;
    double stop_fraction = 0.63212055882855767;  // 1 - 1/e
    std::int64_t n_lik = 10000;                  // likelihood cohort size
    std::uint64_t master_seed = 1;
    // Propose on log/logit scales matching each prior's support; densities
    // carry the Jacobian. Disabled, proposals live on the original scale and
    // out-of-support draws get zero weight through the prior.
    bool transform_params = true;
    // Inflate target variances by the phi Monte Carlo variance inside the
    // likelihood (see log_likelihood_noise_adjusted). Without it, the frozen
    // noisy likelihoods degenerate the importance weights at small n_lik.
    bool noise_adjusted_likelihood = true;
    // Multiplier on the local proposal covariance. Values > 1 fatten the
    // mixture components so weakly identified ridges get explored end to end.
    double proposal_cov_scale = 1.0;
    // Called after the initial stage and after every iteration.
    std::function<void(int iteration, double expected_unique, double ess)> progress;

    void validate() const;
};

/// Calibration output: the weighted evaluated pool, the j-resample, mixture
/// components (in proposal space) and diagnostics.
struct PosteriorSample {
    Eigen::MatrixXd resample;               // j x 9, original parameter scale
    std::vector<int> resample_source;       // row into the evaluated pool
    Eigen::MatrixXd evaluated_theta;        // N x 9, original scale
    Eigen::MatrixXd evaluated_eta;          // N x 9, proposal scale
    std::vector<double> log_lik;            // per evaluated point (frozen)
    std::vector<double> log_prior_eta;      // proposal-scale prior log density
    std::vector<double> weights;            // normalized importance weights
    std::vector<MvNormal> components;       // proposal-scale mixture components
    int n0 = 0;
    int b = 0;

    // ESS of the resample multiplicities, 1/sum((m_k/j)^2); this is the
    // headline diagnostic (always <= unique_count and < j for a non-trivial
    // resample). ess_importance is 1/sum(w^2) of the pre-resample weights.
    double ess_value = 0.0;
    double ess_importance = 0.0;
    double expected_unique = 0.0;
    int unique_count = 0;
    std::array<double, 9> map_theta{};
    int map_index = -1;
    int iterations_run = 0;
    bool stopped_early = false;
    std::uint64_t master_seed = 0;
};

struct PosteriorSummary {
    std::array<double, 9> mean{}, sd{}, map{}, cri_lb{}, cri_ub{};
    Eigen::MatrixXd correlation;  // 9 x 9
};

/// Log-likelihood of the 9 calibrated parameters; point_index keys the frozen
/// evaluation stream. Returns -inf to reject a point, never throws for
/// out-of-range parameter values.
using LogLikelihoodFn = std::function<double(const std::array<double, 9>&, std::int64_t)>;

/// Incremental mixture importance sampling over an arbitrary likelihood:
/// prior stage of n0 draws, then per iteration a multivariate normal centred
/// at the current highest-weight point with the weighted covariance of its b
/// nearest neighbours (prior-covariance Mahalanobis metric), defensive-mixture
/// reweighting of all points, stopping once the expected number of unique
/// points in a j-resample reaches stop_fraction * j.
PosteriorSample imis_calibrate(const PriorSet& priors, const LogLikelihoodFn& log_lik,
                               const ImisConfig& cfg, const Executor& exec);

/// Fixed (non-calibrated) natural-history inputs.
struct NhFixed {
    double lam7 = 0.0302;
    double lam8 = 0.2099;
    const LifeTable* life_table = nullptr;
    int age_max = 100;
};

/// Binds the microsimulation likelihood (cohort of cfg.n_lik per evaluation)
/// to imis_calibrate.
PosteriorSample calibrate(const PriorSet& priors, const TargetSet& targets,
                          const NhFixed& fixed, const ImisConfig& cfg,
                          const Executor& exec);

PosteriorSummary posterior_summary(const PosteriorSample& ps);

struct Band {
    std::vector<double> mean, lb, ub;
};

/// Per-bin posterior-predictive means and 95% interval bands.
struct PredictiveBands {
    Band adenoma_prevalence, proportion_small, incidence_early, incidence_late;
};

PredictiveBands posterior_predictive(const PosteriorSample& ps, const NhFixed& fixed,
                                     std::int64_t n_per_draw, const TargetBinSpec& bins,
                                     std::uint64_t master_seed, const Executor& exec);

// Separately testable pieces of the IMIS recipe.
double logaddexp(double a, double b);
/// exp-normalizes log weights; throws std::runtime_error when all are -inf.
std::vector<double> normalize_log_weights(const std::vector<double>& log_w);
/// Expected number of distinct points when resampling j by weight.
double expected_unique(const std::vector<double>& weights, int j);
std::vector<int> resample_indices(const std::vector<double>& weights, int j, RngStream& stream);
/// log of n0*prior(eta) + b*sum_s component_s(eta), the defensive-mixture
/// numerator used in every weight update.
double log_mixture_numerator(double log_prior, const std::vector<MvNormal>& components,
                             const Eigen::VectorXd& eta, int n0, int b);
/// Empirical p-quantile (linear interpolation between order statistics).
double percentile(std::vector<double> values, double p);

}  // namespace crcsim
