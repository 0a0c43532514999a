#pragma once

#include <Eigen/Dense>

#include "crcsim/health_state.hpp"
#include "crcsim/life_table.hpp"
#include "crcsim/params.hpp"

namespace crcsim {

using Matrix9 = Eigen::Matrix<double, kNumStates, kNumStates>;

/// Weibull hazard l * gamma * a^(gamma-1), the age-dependent adenoma-onset rate.
double weibull_hazard(double scale, double shape, double age);

/// Transition intensity matrix Q(age). hr_lambda1 scales only the
/// normal -> small-adenoma rate (post-polypectomy recurrence); 1 for natural
/// history. Off-diagonals are the annual rates, diagonals the negative row
/// sums, death rows zero.
Matrix9 build_intensity_matrix(const NaturalHistoryParams& params,
                               const LifeTable& life_table, int age,
                               double hr_lambda1 = 1.0);

/// Validates generator invariants (square, finite, off-diagonals >= 0, row
/// sums ~0); throws std::domain_error on violation.
void validate_intensity_matrix(const Eigen::Ref<const Eigen::MatrixXd>& q,
                               double tol = 1e-12);

}  // namespace crcsim
