#pragma once

#include <Eigen/Dense>

#include "crcsim/intensity.hpp"

namespace crcsim {

/// Matrix exponential Exp(Q) of a transition intensity matrix, by scaling and
/// squaring around a truncated Taylor series (tail tolerance 1e-12). Input is
/// validated against the generator invariants; the result is row-stochastic
/// with tiny negative round-off clamped to zero.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& q);
Matrix9 matrix_exponential(const Matrix9& q);

}  // namespace crcsim
