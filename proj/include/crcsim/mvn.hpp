#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crcsim/rng.hpp"

namespace crcsim {

/// Multivariate normal with a cached Cholesky factor. Construction applies an
/// escalating diagonal jitter (1e-10..1e-4 of trace/d) when the covariance is
/// numerically indefinite; throws std::runtime_error if that fails too.
class MvNormal {
public:
    static MvNormal from_moments(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

    double log_pdf(const Eigen::VectorXd& x) const;

    /// mean + L z with z iid standard normal; consumes dim() normals.
    Eigen::VectorXd sample(RngStream& stream) const;

    int dim() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }

private:
    MvNormal() = default;

    Eigen::VectorXd mean_;
    Eigen::MatrixXd chol_lower_;
    double log_norm_const_ = 0.0;
};

/// Effective sample size 1 / sum(w^2) of normalized importance weights.
double ess(const std::vector<double>& normalized_weights);

/// Weight-weighted covariance about the weighted mean (weights normalized
/// internally). Points are rows.
Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& points,
                                    const std::vector<double>& weights);

/// Weighted scatter about an explicit center.
Eigen::MatrixXd weighted_covariance_about(const Eigen::MatrixXd& points,
                                          const std::vector<double>& weights,
                                          const Eigen::VectorXd& center);

/// Indices of the k points closest to center under the Mahalanobis metric of
/// metric_cov, ascending by distance (ties broken by index).
std::vector<int> nearest_neighbors(const Eigen::MatrixXd& points,
                                   const Eigen::VectorXd& center, int k,
                                   const Eigen::MatrixXd& metric_cov);

}  // namespace crcsim
