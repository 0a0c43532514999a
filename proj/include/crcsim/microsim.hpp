#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "crcsim/executor.hpp"
#include "crcsim/rng.hpp"
#include "crcsim/transition_table.hpp"

namespace crcsim {

/// Age-binned cohort tallies. Ages are 50..age_max inclusive; all tallies are
/// integer counts so parallel aggregation is exact.
struct CohortOutputs {
    int age_min = 50;
    int age_max = 100;
    std::int64_t n = 0;

    // counts[age - age_min][state]: individuals in each state at each age.
    std::vector<std::array<std::int64_t, kNumStates>> count_by_age_state;
    // First entry into a clinical state, by age and stage (0 early, 1 late).
    std::vector<std::array<std::int64_t, 2>> new_diagnoses_by_age_stage;
    // Person-years alive with no prior clinical diagnosis (the diagnosis year
    // itself still counts as at-risk time).
    std::vector<std::int64_t> person_years_at_risk_by_age;

    void init(int lo, int hi);
    void merge(const CohortOutputs& other);
};

/// Per-bin model-predicted outputs phi. Entries align with the TargetBinSpec
/// that produced them; `missing` marks undefined values (e.g. the
/// small-adenoma proportion when no adenomas are alive in a bin). The `se`
/// vectors carry the Monte Carlo standard error of each estimate (binomial /
/// Poisson, lightly smoothed so they stay positive at zero counts).
struct ModelPrediction {
    std::vector<double> adenoma_prevalence;
    std::vector<double> proportion_small;
    std::vector<double> incidence_early;  // per 100,000 person-years
    std::vector<double> incidence_late;
    std::vector<double> adenoma_prevalence_se;
    std::vector<double> proportion_small_se;
    std::vector<double> incidence_early_se;
    std::vector<double> incidence_late_se;
    std::vector<char> adenoma_prevalence_missing;
    std::vector<char> proportion_small_missing;
    std::vector<char> incidence_early_missing;
    std::vector<char> incidence_late_missing;
};

struct TargetBinSpec {
    std::vector<int> adenoma_ages = {55, 60, 65, 70, 75, 80};
    std::vector<std::pair<int, int>> incidence_bins = {
        {50, 54}, {55, 59}, {60, 64}, {65, 69}, {70, 74}, {75, 79}, {80, 84}};

    void validate(int age_min, int age_max) const;
};

/// Distribution over states at age 50: adenoma prevalence split small/large,
/// fixed preclinical CRC prevalences of 0.12% and 0.08%, remainder normal.
std::array<double, kNumStates> initial_state_distribution(const NaturalHistoryParams& params);

/// One individual's state at each age from age_min to age_max (trajectory is
/// truncated after death in the sense that the absorbing state repeats). One
/// uniform is consumed per simulated year, indexed by age, so replaying the
/// same key reproduces the trajectory exactly.
std::vector<HealthState> simulate_individual(const TransitionTable& table,
                                             HealthState init, StreamKey nh_step_key);

/// Categorical step shared by every simulation path: next state from the
/// cumulative row at `age` given uniform `u`.
HealthState next_state(const TransitionTable& table, int age, HealthState current, double u);

/// Simulates n individuals and aggregates tallies. Deterministic given
/// (params, life_table, n, master_seed, draw_index, age_max) for any executor.
CohortOutputs simulate_cohort(const NaturalHistoryParams& params,
                              const LifeTable& life_table, std::int64_t n,
                              std::uint64_t master_seed, std::uint64_t draw_index,
                              int age_max, const Executor& exec);

ModelPrediction epi_outputs(const CohortOutputs& cohort, const TargetBinSpec& bins);

/// Debug dumps: `age,state,count` and `age,stage,new_cases,person_years`.
void write_cohort_counts_csv(const CohortOutputs& cohort, const std::string& path);
void write_cohort_incidence_csv(const CohortOutputs& cohort, const std::string& path);

}  // namespace crcsim
