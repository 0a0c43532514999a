#include "crcsim/microsim.hpp"

#include <cmath>
#include <stdexcept>

#include "crcsim/csv.hpp"

namespace crcsim {

namespace {
constexpr double kPreclinEarlyPrev = 0.0012;
constexpr double kPreclinLatePrev = 0.0008;
constexpr int kCohortStartAge = 50;
constexpr std::int64_t kCohortBlock = 2048;
}  // namespace

void CohortOutputs::init(int lo, int hi) {
    age_min = lo;
    age_max = hi;
    n = 0;
    const auto n_ages = static_cast<std::size_t>(hi - lo + 1);
    count_by_age_state.assign(n_ages, {});
    new_diagnoses_by_age_stage.assign(n_ages, {});
    person_years_at_risk_by_age.assign(n_ages, 0);
}

void CohortOutputs::merge(const CohortOutputs& other) {
    if (other.age_min != age_min || other.age_max != age_max)
        throw std::invalid_argument("CohortOutputs::merge: age ranges differ");
    n += other.n;
    for (std::size_t a = 0; a < count_by_age_state.size(); ++a) {
        for (int s = 0; s < kNumStates; ++s)
            count_by_age_state[a][s] += other.count_by_age_state[a][s];
        new_diagnoses_by_age_stage[a][0] += other.new_diagnoses_by_age_stage[a][0];
        new_diagnoses_by_age_stage[a][1] += other.new_diagnoses_by_age_stage[a][1];
        person_years_at_risk_by_age[a] += other.person_years_at_risk_by_age[a];
    }
}

void TargetBinSpec::validate(int age_min, int age_max) const {
    if (adenoma_ages.empty() || incidence_bins.empty())
        throw std::invalid_argument("target bins: both bin lists must be non-empty");
    int prev = age_min - 1;
    for (int a : adenoma_ages) {
        if (a < age_min || a > age_max)
            throw std::invalid_argument("target bins: adenoma age out of range");
        if (a <= prev) throw std::invalid_argument("target bins: adenoma ages must ascend");
        prev = a;
    }
    int prev_hi = age_min - 1;
    for (const auto& [lo, hi] : incidence_bins) {
        if (lo > hi || lo < age_min || hi > age_max)
            throw std::invalid_argument("target bins: incidence bin out of range");
        if (lo <= prev_hi)
            throw std::invalid_argument("target bins: incidence bins must be ordered and disjoint");
        prev_hi = hi;
    }
}

std::array<double, kNumStates> initial_state_distribution(const NaturalHistoryParams& params) {
    const double pa = params.p_adeno;
    const double ps = params.p_small;
    if (!std::isfinite(pa) || pa < 0.0 || !std::isfinite(ps) || ps < 0.0 || ps > 1.0)
        throw std::domain_error("initial_state_distribution: invalid prevalence inputs");
    if (pa > 1.0 - kPreclinEarlyPrev - kPreclinLatePrev)
        throw std::domain_error(
            "initial_state_distribution: p_adeno leaves no mass for the normal state");

    std::array<double, kNumStates> dist{};
    dist[static_cast<int>(HealthState::SmallAdenoma)] = pa * ps;
    dist[static_cast<int>(HealthState::LargeAdenoma)] = pa * (1.0 - ps);
    dist[static_cast<int>(HealthState::PreclinicalEarlyCrc)] = kPreclinEarlyPrev;
    dist[static_cast<int>(HealthState::PreclinicalLateCrc)] = kPreclinLatePrev;
    dist[static_cast<int>(HealthState::Normal)] =
        1.0 - pa - kPreclinEarlyPrev - kPreclinLatePrev;
    return dist;
}

HealthState next_state(const TransitionTable& table, int age, HealthState current, double u) {
    const auto& cum = table.row_cum(age, current);
    for (int c = 0; c < kNumStates - 1; ++c)
        if (u < cum[c]) return static_cast<HealthState>(c);
    return static_cast<HealthState>(kNumStates - 1);
}

std::vector<HealthState> simulate_individual(const TransitionTable& table,
                                             HealthState init, StreamKey nh_step_key) {
    if (!is_alive(init))
        throw std::invalid_argument("simulate_individual: initial state must be alive");
    const int lo = table.age_min();
    const int hi = table.age_max();
    std::vector<HealthState> traj(static_cast<std::size_t>(hi - lo + 1));
    HealthState s = init;
    traj[0] = s;
    for (int age = lo; age < hi; ++age) {
        if (is_alive(s))
            s = next_state(table, age, s, nh_step_key.uniform_at(static_cast<std::uint64_t>(age)));
        traj[static_cast<std::size_t>(age - lo + 1)] = s;
    }
    return traj;
}

namespace {

HealthState sample_initial_state(const std::array<double, kNumStates>& dist, double u) {
    double acc = 0.0;
    for (int s = 0; s < kNumStates - 1; ++s) {
        acc += dist[s];
        if (u < acc) return static_cast<HealthState>(s);
    }
    return static_cast<HealthState>(kNumStates - 1);
}

}  // namespace

CohortOutputs simulate_cohort(const NaturalHistoryParams& params,
                              const LifeTable& life_table, std::int64_t n,
                              std::uint64_t master_seed, std::uint64_t draw_index,
                              int age_max, const Executor& exec) {
    if (n < 1) throw std::invalid_argument("simulate_cohort: n must be >= 1");
    const TransitionTable table(params, life_table, kCohortStartAge, age_max);
    const auto init_dist = initial_state_distribution(params);

    const std::int64_t n_blocks = Executor::block_count(n, kCohortBlock);
    std::vector<CohortOutputs> partial(static_cast<std::size_t>(n_blocks));

    exec.run_blocks(n, kCohortBlock, [&](std::int64_t block, std::int64_t lo, std::int64_t hi) {
        CohortOutputs& out = partial[static_cast<std::size_t>(block)];
        out.init(kCohortStartAge, age_max);
        out.n = hi - lo;
        for (std::int64_t i = lo; i < hi; ++i) {
            const auto idx = static_cast<std::uint64_t>(i);
            const StreamKey init_key = StreamKey::derive(master_seed, "nh-init", draw_index, idx);
            const StreamKey step_key = StreamKey::derive(master_seed, "nh-step", draw_index, idx);
            HealthState s = sample_initial_state(init_dist, init_key.uniform_at(0));
            bool ever_clinical = false;
            for (int age = kCohortStartAge; age <= age_max; ++age) {
                const auto a = static_cast<std::size_t>(age - kCohortStartAge);
                ++out.count_by_age_state[a][static_cast<int>(s)];
                bool diagnosed_now = false;
                if (is_clinical(s) && !ever_clinical) {
                    ever_clinical = true;
                    diagnosed_now = true;
                    ++out.new_diagnoses_by_age_stage[a][s == HealthState::ClinicalLateCrc ? 1 : 0];
                }
                if (is_alive(s) && (!ever_clinical || diagnosed_now))
                    ++out.person_years_at_risk_by_age[a];
                if (age < age_max && is_alive(s))
                    s = next_state(table, age, s,
                                   step_key.uniform_at(static_cast<std::uint64_t>(age)));
            }
        }
    });

    CohortOutputs total;
    total.init(kCohortStartAge, age_max);
    for (const auto& p : partial) total.merge(p);
    return total;
}

namespace {

// Smoothed binomial standard error; positive even at boundary counts.
double proportion_se(std::int64_t hits, std::int64_t trials) {
    const double n = static_cast<double>(trials);
    const double p = (static_cast<double>(hits) + 0.5) / (n + 1.0);
    return std::sqrt(p * (1.0 - p) / n);
}

}  // namespace

ModelPrediction epi_outputs(const CohortOutputs& cohort, const TargetBinSpec& bins) {
    bins.validate(cohort.age_min, cohort.age_max);
    ModelPrediction phi;

    for (int age : bins.adenoma_ages) {
        const auto a = static_cast<std::size_t>(age - cohort.age_min);
        const auto& counts = cohort.count_by_age_state[a];
        std::int64_t alive = 0;
        for (int s = 0; s < kNumStates; ++s)
            if (is_alive(static_cast<HealthState>(s))) alive += counts[s];
        const std::int64_t small = counts[static_cast<int>(HealthState::SmallAdenoma)];
        const std::int64_t large = counts[static_cast<int>(HealthState::LargeAdenoma)];

        phi.adenoma_prevalence_missing.push_back(alive == 0);
        phi.adenoma_prevalence.push_back(
            alive == 0 ? 0.0 : static_cast<double>(small + large) / static_cast<double>(alive));
        phi.adenoma_prevalence_se.push_back(alive == 0 ? 0.0 : proportion_se(small + large, alive));
        phi.proportion_small_missing.push_back(small + large == 0);
        phi.proportion_small.push_back(
            small + large == 0 ? 0.0
                               : static_cast<double>(small) / static_cast<double>(small + large));
        phi.proportion_small_se.push_back(small + large == 0 ? 0.0
                                                             : proportion_se(small, small + large));
    }

    for (const auto& [lo, hi] : bins.incidence_bins) {
        std::int64_t cases_early = 0, cases_late = 0, py = 0;
        for (int age = lo; age <= hi; ++age) {
            const auto a = static_cast<std::size_t>(age - cohort.age_min);
            cases_early += cohort.new_diagnoses_by_age_stage[a][0];
            cases_late += cohort.new_diagnoses_by_age_stage[a][1];
            py += cohort.person_years_at_risk_by_age[a];
        }
        const bool missing = py == 0;
        const double denom = missing ? 1.0 : static_cast<double>(py);
        phi.incidence_early_missing.push_back(missing);
        phi.incidence_late_missing.push_back(missing);
        phi.incidence_early.push_back(missing ? 0.0 : 1e5 * static_cast<double>(cases_early) / denom);
        phi.incidence_late.push_back(missing ? 0.0 : 1e5 * static_cast<double>(cases_late) / denom);
        // Poisson count error, smoothed away from zero.
        phi.incidence_early_se.push_back(
            missing ? 0.0 : 1e5 * std::sqrt(static_cast<double>(cases_early) + 0.5) / denom);
        phi.incidence_late_se.push_back(
            missing ? 0.0 : 1e5 * std::sqrt(static_cast<double>(cases_late) + 0.5) / denom);
    }
    return phi;
}

void write_cohort_counts_csv(const CohortOutputs& cohort, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int age = cohort.age_min; age <= cohort.age_max; ++age) {
        const auto a = static_cast<std::size_t>(age - cohort.age_min);
        for (int s = 0; s < kNumStates; ++s)
            rows.push_back({std::to_string(age), to_string(static_cast<HealthState>(s)),
                            std::to_string(cohort.count_by_age_state[a][s])});
    }
    write_csv(path, {}, {"age", "state", "count"}, rows);
}

void write_cohort_incidence_csv(const CohortOutputs& cohort, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int age = cohort.age_min; age <= cohort.age_max; ++age) {
        const auto a = static_cast<std::size_t>(age - cohort.age_min);
        for (int stage = 0; stage < 2; ++stage)
            rows.push_back({std::to_string(age), stage == 0 ? "early" : "late",
                            std::to_string(cohort.new_diagnoses_by_age_stage[a][stage]),
                            std::to_string(cohort.person_years_at_risk_by_age[a])});
    }
    write_csv(path, {}, {"age", "stage", "new_cases", "person_years"}, rows);
}

}  // namespace crcsim
