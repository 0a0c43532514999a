#include "crcsim/transition_table.hpp"

#include <stdexcept>

namespace crcsim {

TransitionTable::TransitionTable(const NaturalHistoryParams& params,
                                 const LifeTable& life_table, int age_min,
                                 int age_max, double hr_lambda1)
    : age_min_(age_min), age_max_(age_max) {
    if (age_min > age_max)
        throw std::invalid_argument("transition table: age_min > age_max");
    matrices_.reserve(static_cast<std::size_t>(age_max - age_min + 1));
    row_cum_.reserve(matrices_.capacity());
    for (int age = age_min; age <= age_max; ++age) {
        const Matrix9 p =
            matrix_exponential(build_intensity_matrix(params, life_table, age, hr_lambda1));
        matrices_.push_back(p);
        std::array<std::array<double, kNumStates>, kNumStates> cum{};
        for (int r = 0; r < kNumStates; ++r) {
            double acc = 0.0;
            for (int c = 0; c < kNumStates; ++c) {
                acc += p(r, c);
                cum[r][c] = acc;
            }
        }
        row_cum_.push_back(cum);
    }
}

std::size_t TransitionTable::index(int age) const {
    if (age < age_min_ || age > age_max_)
        throw std::out_of_range("transition table: age " + std::to_string(age) +
                                " outside [" + std::to_string(age_min_) + "," +
                                std::to_string(age_max_) + "]");
    return static_cast<std::size_t>(age - age_min_);
}

TransitionTable transition_table(const NaturalHistoryParams& params,
                                 const LifeTable& life_table, int age_min,
                                 int age_max, double hr_lambda1) {
    return TransitionTable(params, life_table, age_min, age_max, hr_lambda1);
}

}  // namespace crcsim
