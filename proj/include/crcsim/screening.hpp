#pragma once

#include <cstdint>
#include <utility>

#include "crcsim/executor.hpp"
#include "crcsim/life_table.hpp"
#include "crcsim/microsim.hpp"
#include "crcsim/params.hpp"

namespace crcsim {

/// Cost-effectiveness parameters (screening test characteristics,
/// post-polypectomy hazard ratios, costs, utilities, discounting).
struct CeaParams {
    double sens_small = 0.773;
    double sens_large_crc = 0.950;
    double spec = 0.868;
    double hr_low = 2.0;
    double hr_high = 3.0;
    double cost_colonoscopy = 10000.0;
    double cost_early_annual = 21524.0;
    double cost_late_annual = 37000.0;
    double u_preclinical = 1.0;
    double u_clin_early = 0.855;
    double u_clin_late = 0.300;
    double discount_rate = 0.03;

    void validate() const;
};

enum class StrategyKind { none, colonoscopy };

/// What a false-positive colonoscopy triggers: the low-risk surveillance
/// schedule (extra exams, no hazard change) or nothing.
enum class FpEffect { surveillance, none };

struct ScreeningStrategy {
    StrategyKind kind = StrategyKind::colonoscopy;
    int start_age = 50;
    int stop_age = 85;
    int routine_interval = 10;
    int surveillance_low = 5;
    int surveillance_high = 3;
    FpEffect fp_effect = FpEffect::surveillance;

    void validate() const;
};

struct StrategyOutcome {
    double mean_cost = 0.0;
    double mean_qaly = 0.0;
    std::int64_t colonoscopies = 0;
    std::int64_t polypectomies = 0;
    std::int64_t screen_detected = 0;
    std::int64_t symptomatic = 0;
    std::int64_t crc_deaths = 0;
    // Stage split of all clinical diagnoses (screen-detected + symptomatic).
    std::int64_t diagnosed_early = 0;
    std::int64_t diagnosed_late = 0;
    std::int64_t n = 0;
};

/// amount / (1 + rate)^(age - start_age).
double discount(double amount, int age, int start_age, double rate);

/// Annual-cycle screening overlay on the natural-history engine. Natural
/// history draws come from the same per-individual streams as simulate_cohort
/// (common random numbers across strategies); screening detection draws use a
/// separate stream, indexed by age. Deterministic for any executor.
StrategyOutcome simulate_strategy(const NaturalHistoryParams& nh, const CeaParams& cea,
                                  const ScreeningStrategy& strat, const LifeTable& life_table,
                                  std::int64_t n, std::uint64_t master_seed,
                                  std::uint64_t draw_index, int age_max, const Executor& exec);

/// (delta cost, delta QALY) of screening versus none.
std::pair<double, double> incremental(const StrategyOutcome& screen,
                                      const StrategyOutcome& none);

}  // namespace crcsim
