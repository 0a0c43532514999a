#include "crcsim/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace crcsim {

MvNormal MvNormal::from_moments(Eigen::VectorXd mean, const Eigen::MatrixXd& cov) {
    const auto d = mean.size();
    if (cov.rows() != d || cov.cols() != d)
        throw std::invalid_argument("MvNormal: covariance dimension mismatch");
    if (!cov.allFinite() || !mean.allFinite())
        throw std::invalid_argument("MvNormal: non-finite moments");

    const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    const double scale = sym.trace() / static_cast<double>(d);
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    double jitter = 1e-10 * scale;
    while (llt.info() != Eigen::Success && jitter <= 1e-4 * scale && scale > 0.0) {
        llt.compute(sym + jitter * Eigen::MatrixXd::Identity(d, d));
        jitter *= 10.0;
    }
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("MvNormal: covariance not positive definite after max jitter");

    MvNormal out;
    out.mean_ = std::move(mean);
    out.chol_lower_ = llt.matrixL();
    out.log_norm_const_ = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI) -
                          out.chol_lower_.diagonal().array().log().sum();
    return out;
}

double MvNormal::log_pdf(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z =
        chol_lower_.triangularView<Eigen::Lower>().solve(x - mean_);
    return log_norm_const_ - 0.5 * z.squaredNorm();
}

Eigen::VectorXd MvNormal::sample(RngStream& stream) const {
    Eigen::VectorXd z(dim());
    for (int i = 0; i < dim(); ++i) z(i) = stream.normal();
    return mean_ + chol_lower_ * z;
}

double ess(const std::vector<double>& normalized_weights) {
    double sum = 0.0, sum_sq = 0.0;
    for (double w : normalized_weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw std::invalid_argument("ess: weights must be finite and >= 0");
        sum += w;
        sum_sq += w * w;
    }
    if (sum_sq == 0.0) throw std::invalid_argument("ess: all weights are zero");
    return (sum * sum) / sum_sq;
}

namespace {

std::vector<double> normalize(const std::vector<double>& w, Eigen::Index n) {
    if (static_cast<Eigen::Index>(w.size()) != n)
        throw std::invalid_argument("weighted_covariance: weight count mismatch");
    double sum = 0.0;
    for (double x : w) {
        if (x < 0.0 || !std::isfinite(x))
            throw std::invalid_argument("weighted_covariance: weights must be finite and >= 0");
        sum += x;
    }
    if (sum <= 0.0) throw std::invalid_argument("weighted_covariance: all weights zero");
    std::vector<double> out(w);
    for (double& x : out) x /= sum;
    return out;
}

}  // namespace

Eigen::MatrixXd weighted_covariance_about(const Eigen::MatrixXd& points,
                                          const std::vector<double>& weights,
                                          const Eigen::VectorXd& center) {
    const auto n = points.rows();
    const auto d = points.cols();
    if (center.size() != d)
        throw std::invalid_argument("weighted_covariance: center dimension mismatch");
    const auto w = normalize(weights, n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd delta = points.row(i).transpose() - center;
        cov.noalias() += w[static_cast<std::size_t>(i)] * (delta * delta.transpose());
    }
    return cov;
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& points,
                                    const std::vector<double>& weights) {
    const auto w = normalize(weights, points.rows());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        mean += w[static_cast<std::size_t>(i)] * points.row(i).transpose();
    return weighted_covariance_about(points, weights, mean);
}

std::vector<int> nearest_neighbors(const Eigen::MatrixXd& points,
                                   const Eigen::VectorXd& center, int k,
                                   const Eigen::MatrixXd& metric_cov) {
    const auto n = points.rows();
    if (k < 1 || k > n) throw std::invalid_argument("nearest_neighbors: k out of range");
    const MvNormal metric = MvNormal::from_moments(Eigen::VectorXd::Zero(center.size()), metric_cov);

    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd z = metric.chol_lower().triangularView<Eigen::Lower>().solve(
            points.row(i).transpose() - center);
        dist[static_cast<std::size_t>(i)] = {z.squaredNorm(), static_cast<int>(i)};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(i)].second;
    return idx;
}

}  // namespace crcsim
