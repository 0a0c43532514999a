#include "crcsim/screening.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace crcsim {

namespace {
constexpr int kCohortStartAge = 50;
constexpr std::int64_t kBlock = 2048;

enum class RiskFlag : int { none = 0, false_positive = 1, low = 2, high = 3 };

void upgrade(RiskFlag& flag, RiskFlag to) {
    if (static_cast<int>(to) > static_cast<int>(flag)) flag = to;
}

}  // namespace

void CeaParams::validate() const {
    auto prob = [](double v, const char* n) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw std::domain_error(std::string(n) + " must be in [0,1]");
    };
    auto nonneg = [](double v, const char* n) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::domain_error(std::string(n) + " must be >= 0");
    };
    prob(sens_small, "sens_small");
    prob(sens_large_crc, "sens_large_crc");
    prob(spec, "spec");
    prob(u_preclinical, "u_preclinical");
    prob(u_clin_early, "u_clin_early");
    prob(u_clin_late, "u_clin_late");
    nonneg(hr_low, "hr_low");
    nonneg(hr_high, "hr_high");
    nonneg(cost_colonoscopy, "cost_colonoscopy");
    nonneg(cost_early_annual, "cost_early_annual");
    nonneg(cost_late_annual, "cost_late_annual");
    nonneg(discount_rate, "discount_rate");
}

void ScreeningStrategy::validate() const {
    if (start_age >= stop_age) throw std::domain_error("strategy: start_age must be < stop_age");
    if (routine_interval < 1 || surveillance_low < 1 || surveillance_high < 1)
        throw std::domain_error("strategy: intervals must be >= 1");
}

double discount(double amount, int age, int start_age, double rate) {
    if (age < start_age) throw std::domain_error("discount: age before start_age");
    return amount / std::pow(1.0 + rate, static_cast<double>(age - start_age));
}

StrategyOutcome simulate_strategy(const NaturalHistoryParams& nh, const CeaParams& cea,
                                  const ScreeningStrategy& strat, const LifeTable& life_table,
                                  std::int64_t n, std::uint64_t master_seed,
                                  std::uint64_t draw_index, int age_max, const Executor& exec) {
    if (n < 1) throw std::invalid_argument("simulate_strategy: n must be >= 1");
    cea.validate();
    strat.validate();

    const bool screening = strat.kind == StrategyKind::colonoscopy;
    const TransitionTable base(nh, life_table, kCohortStartAge, age_max, 1.0);
    std::optional<TransitionTable> low, high;
    if (screening) {
        low.emplace(nh, life_table, kCohortStartAge, age_max, cea.hr_low);
        high.emplace(nh, life_table, kCohortStartAge, age_max, cea.hr_high);
    }
    auto table_for = [&](RiskFlag flag) -> const TransitionTable& {
        // False positives keep the natural-history hazard.
        if (flag == RiskFlag::low) return *low;
        if (flag == RiskFlag::high) return *high;
        return base;
    };
    auto interval_for = [&](RiskFlag flag) {
        return flag == RiskFlag::high ? strat.surveillance_high : strat.surveillance_low;
    };
    auto utility_of = [&](HealthState s) {
        switch (s) {
            case HealthState::PreclinicalEarlyCrc:
            case HealthState::PreclinicalLateCrc:
                return cea.u_preclinical;
            case HealthState::ClinicalEarlyCrc:
                return cea.u_clin_early;
            case HealthState::ClinicalLateCrc:
                return cea.u_clin_late;
            default:
                return 1.0;  // normal and adenoma states
        }
    };

    const auto init_dist = initial_state_distribution(nh);
    const std::int64_t n_blocks = Executor::block_count(n, kBlock);
    std::vector<StrategyOutcome> partial(static_cast<std::size_t>(n_blocks));
    std::vector<double> block_cost(static_cast<std::size_t>(n_blocks), 0.0);
    std::vector<double> block_qaly(static_cast<std::size_t>(n_blocks), 0.0);

    exec.run_blocks(n, kBlock, [&](std::int64_t block, std::int64_t lo, std::int64_t hi) {
        StrategyOutcome& out = partial[static_cast<std::size_t>(block)];
        double cost_sum = 0.0, qaly_sum = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const auto idx = static_cast<std::uint64_t>(i);
            const StreamKey init_key = StreamKey::derive(master_seed, "nh-init", draw_index, idx);
            const StreamKey step_key = StreamKey::derive(master_seed, "nh-step", draw_index, idx);
            const StreamKey screen_key = StreamKey::derive(master_seed, "screen", draw_index, idx);

            HealthState s = [&] {
                const double u = init_key.uniform_at(0);
                double acc = 0.0;
                for (int st = 0; st < kNumStates - 1; ++st) {
                    acc += init_dist[static_cast<std::size_t>(st)];
                    if (u < acc) return static_cast<HealthState>(st);
                }
                return static_cast<HealthState>(kNumStates - 1);
            }();

            RiskFlag flag = RiskFlag::none;
            int next_exam = strat.start_age;
            bool ever_clinical = false;

            for (int age = kCohortStartAge; age <= age_max; ++age) {
                if (!is_alive(s)) break;

                // Colonoscopy at the start of the cycle, before the annual
                // transition; diagnosed individuals leave the program.
                if (screening && !is_clinical(s) && age == next_exam && age <= strat.stop_age) {
                    ++out.colonoscopies;
                    cost_sum += discount(cea.cost_colonoscopy, age, kCohortStartAge,
                                         cea.discount_rate);
                    const double u_detect =
                        screen_key.uniform_at(2 * static_cast<std::uint64_t>(age));
                    const double u_fp =
                        screen_key.uniform_at(2 * static_cast<std::uint64_t>(age) + 1);
                    switch (s) {
                        case HealthState::SmallAdenoma:
                            if (u_detect < cea.sens_small) {
                                s = HealthState::Normal;
                                ++out.polypectomies;
                                upgrade(flag, RiskFlag::low);
                            }
                            break;
                        case HealthState::LargeAdenoma:
                            if (u_detect < cea.sens_large_crc) {
                                s = HealthState::Normal;
                                ++out.polypectomies;
                                upgrade(flag, RiskFlag::high);
                            }
                            break;
                        case HealthState::PreclinicalEarlyCrc:
                            if (u_detect < cea.sens_large_crc) {
                                s = HealthState::ClinicalEarlyCrc;
                                ++out.screen_detected;
                                ++out.diagnosed_early;
                                ever_clinical = true;
                            }
                            break;
                        case HealthState::PreclinicalLateCrc:
                            if (u_detect < cea.sens_large_crc) {
                                s = HealthState::ClinicalLateCrc;
                                ++out.screen_detected;
                                ++out.diagnosed_late;
                                ever_clinical = true;
                            }
                            break;
                        case HealthState::Normal:
                            if (strat.fp_effect == FpEffect::surveillance &&
                                u_fp < 1.0 - cea.spec)
                                upgrade(flag, RiskFlag::false_positive);
                            break;
                        default:
                            break;
                    }
                    if (!is_clinical(s))
                        next_exam = age + (flag == RiskFlag::none ? strat.routine_interval
                                                                  : interval_for(flag));
                }

                // Utilities and treatment costs accrue on the post-screening state.
                qaly_sum += discount(utility_of(s), age, kCohortStartAge, cea.discount_rate);
                if (s == HealthState::ClinicalEarlyCrc)
                    cost_sum += discount(cea.cost_early_annual, age, kCohortStartAge,
                                         cea.discount_rate);
                else if (s == HealthState::ClinicalLateCrc)
                    cost_sum += discount(cea.cost_late_annual, age, kCohortStartAge,
                                         cea.discount_rate);

                if (age < age_max) {
                    const HealthState next = next_state(
                        table_for(flag), age, s,
                        step_key.uniform_at(static_cast<std::uint64_t>(age)));
                    if (is_clinical(next) && !ever_clinical) {
                        ever_clinical = true;
                        ++out.symptomatic;
                        ++(next == HealthState::ClinicalLateCrc ? out.diagnosed_late
                                                                : out.diagnosed_early);
                    }
                    if (next == HealthState::CrcDeath) ++out.crc_deaths;
                    s = next;
                }
            }
        }
        block_cost[static_cast<std::size_t>(block)] = cost_sum;
        block_qaly[static_cast<std::size_t>(block)] = qaly_sum;
        out.n = hi - lo;
    });

    StrategyOutcome total;
    total.n = 0;
    double cost = 0.0, qaly = 0.0;
    for (std::size_t b = 0; b < partial.size(); ++b) {
        const auto& p = partial[b];
        total.colonoscopies += p.colonoscopies;
        total.polypectomies += p.polypectomies;
        total.screen_detected += p.screen_detected;
        total.symptomatic += p.symptomatic;
        total.crc_deaths += p.crc_deaths;
        total.diagnosed_early += p.diagnosed_early;
        total.diagnosed_late += p.diagnosed_late;
        total.n += p.n;
        cost += block_cost[b];  // fixed block order keeps sums bit-identical
        qaly += block_qaly[b];
    }
    total.mean_cost = cost / static_cast<double>(total.n);
    total.mean_qaly = qaly / static_cast<double>(total.n);
    return total;
}

std::pair<double, double> incremental(const StrategyOutcome& screen,
                                      const StrategyOutcome& none) {
    return {screen.mean_cost - none.mean_cost, screen.mean_qaly - none.mean_qaly};
}

}  // namespace crcsim
