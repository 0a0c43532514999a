#pragma once

#include <array>
#include <vector>

#include "crcsim/intensity.hpp"
#include "crcsim/matrix_exp.hpp"

namespace crcsim {

/// Annual-cycle transition probability matrices P(a) = Exp(Q(a)), one per
/// integer age in [age_min, age_max]. Immutable after construction; cumulative
/// rows are precomputed for categorical sampling.
class TransitionTable {
public:
    TransitionTable(const NaturalHistoryParams& params, const LifeTable& life_table,
                    int age_min, int age_max, double hr_lambda1 = 1.0);

    const Matrix9& at(int age) const { return matrices_[index(age)]; }

    /// Cumulative transition probabilities out of `from` at `age`, in state
    /// order; the last entry is the row total (~1).
    const std::array<double, kNumStates>& row_cum(int age, HealthState from) const {
        return row_cum_[index(age)][static_cast<int>(from)];
    }

    int age_min() const { return age_min_; }
    int age_max() const { return age_max_; }

private:
    std::size_t index(int age) const;

    int age_min_;
    int age_max_;
    std::vector<Matrix9> matrices_;
    std::vector<std::array<std::array<double, kNumStates>, kNumStates>> row_cum_;
};

/// Convenience builder matching the module operation.
TransitionTable transition_table(const NaturalHistoryParams& params,
                                 const LifeTable& life_table, int age_min,
                                 int age_max, double hr_lambda1 = 1.0);

}  // namespace crcsim
