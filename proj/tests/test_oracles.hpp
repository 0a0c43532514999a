#pragma once

// Test-only numerical oracles, kept independent of the production paths they
// check.

#include <Eigen/Dense>

#include "crcsim/rng.hpp"

namespace crcsim::test {

/// Plain truncated Taylor series for Exp(Q), no scaling and squaring. The
/// series is run until the term norm falls below 1e-16 (tail bound well under
/// 1e-12 for the moderate norms used in tests).
inline Eigen::MatrixXd expm_series_reference(const Eigen::MatrixXd& q) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(q.rows(), q.cols());
    Eigen::MatrixXd term = p;
    for (int k = 1; k <= 400; ++k) {
        term = (term * q) / static_cast<double>(k);
        p += term;
        if (term.lpNorm<Eigen::Infinity>() < 1e-16) break;
    }
    return p;
}

/// Random generator matrix: non-negative off-diagonals (sparse-ish), zero
/// rows for the last `absorbing` states, diagonals set to negative row sums.
inline Eigen::MatrixXd random_intensity_matrix(RngStream& stream, int dim, int absorbing = 2) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dim, dim);
    for (int r = 0; r < dim - absorbing; ++r) {
        for (int c = 0; c < dim; ++c) {
            if (r == c) continue;
            if (stream.uniform() < 0.4) q(r, c) = 2.0 * stream.uniform();
        }
        q(r, r) = -q.row(r).sum();
    }
    return q;
}

}  // namespace crcsim::test
