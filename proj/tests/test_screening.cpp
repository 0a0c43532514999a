#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "crcsim/screening.hpp"

using namespace crcsim;

namespace {

LifeTable flat_table(double rate, int lo = 50, int hi = 105) {
    std::vector<std::pair<int, double>> rows;
    for (int a = lo; a <= hi; ++a) rows.emplace_back(a, rate);
    return LifeTable::from_rows(rows);
}

ScreeningStrategy default_strategy(StrategyKind kind) {
    ScreeningStrategy s;
    s.kind = kind;
    return s;
}

CeaParams inert_cea() {
    CeaParams cea;
    cea.sens_small = 0.0;
    cea.sens_large_crc = 0.0;
    cea.spec = 1.0;
    return cea;
}

}  // namespace

TEST_CASE("discount arithmetic") {
    CHECK(discount(123.0, 70, 50, 0.0) == 123.0);
    CHECK(discount(1.0, 51, 50, 0.03) == doctest::Approx(1.0 / 1.03).epsilon(1e-12));
    CHECK(discount(1.0, 51, 50, 0.03) == doctest::Approx(0.97087).epsilon(1e-4));
    CHECK(discount(1.0, 50, 50, 0.03) + discount(1.0, 51, 50, 0.03) ==
          doctest::Approx(1.97087).epsilon(1e-4));
    CHECK_THROWS_AS(discount(1.0, 49, 50, 0.03), std::domain_error);
}

TEST_CASE("no-screening arm is a pure natural-history accounting run") {
    const LifeTable lt = flat_table(0.01);
    const NaturalHistoryParams nh;
    CeaParams cea;
    const StrategyOutcome out = simulate_strategy(nh, cea, default_strategy(StrategyKind::none),
                                                  lt, 2000, 42, 0, 100, Executor(2));
    CHECK(out.colonoscopies == 0);
    CHECK(out.polypectomies == 0);
    CHECK(out.screen_detected == 0);
    CHECK(out.n == 2000);
    CHECK(out.mean_qaly > 0.0);
    CHECK(out.mean_qaly <= 51.0);  // bounded by undiscounted person-years
    CHECK(out.symptomatic > 0);
    CHECK(out.crc_deaths > 0);
    CHECK(out.diagnosed_early + out.diagnosed_late == out.symptomatic);
}

TEST_CASE("inert screening reproduces natural history exactly") {
    const LifeTable lt = flat_table(0.015);
    const NaturalHistoryParams nh;
    const CeaParams cea = inert_cea();

    const StrategyOutcome none = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::none), lt, 5000, 7, 3, 100, Executor(2));
    const StrategyOutcome screen = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::colonoscopy), lt, 5000, 7, 3, 100, Executor(2));

    // common random numbers: identical health trajectories
    CHECK(screen.symptomatic == none.symptomatic);
    CHECK(screen.crc_deaths == none.crc_deaths);
    CHECK(screen.diagnosed_early == none.diagnosed_early);
    CHECK(screen.diagnosed_late == none.diagnosed_late);
    CHECK(screen.polypectomies == 0);
    CHECK(screen.screen_detected == 0);
    CHECK(screen.colonoscopies > 0);

    const auto [d_cost, d_qaly] = incremental(screen, none);
    CHECK(d_qaly == 0.0);  // bitwise: same states, same discounts
    CHECK(d_cost > 0.0);

    // the cost difference is exactly the discounted scheduled colonoscopies
    const double per_exam = cea.cost_colonoscopy;
    double expected = 0.0;
    // with no flags the routine schedule fires at 50, 60, 70, 80 while alive;
    // recompute from the colonoscopy tally per age is not exposed, so check
    // the aggregate against an independently accumulated bound instead:
    // every exam costs discount(per_exam, age) with age in {50,60,70,80}
    // -> d_cost * n must be a sum of exactly those discounted values.
    (void)expected;
    const double total = d_cost * static_cast<double>(screen.n);
    const double d50 = discount(per_exam, 50, 50, cea.discount_rate);
    const double d60 = discount(per_exam, 60, 50, cea.discount_rate);
    const double d70 = discount(per_exam, 70, 50, cea.discount_rate);
    const double d80 = discount(per_exam, 80, 50, cea.discount_rate);
    // count exams by age: a50 everyone alive at 50 = n
    const auto n = static_cast<double>(screen.n);
    CHECK(total <= n * (d50 + d60 + d70 + d80) + 1e-6);
    CHECK(total >= n * d50 - 1e-6);  // at least the age-50 exam for everyone
    CHECK(screen.colonoscopies <= 4 * screen.n);
}

TEST_CASE("identical outcomes difference to zero") {
    StrategyOutcome a;
    a.mean_cost = 12.5;
    a.mean_qaly = 20.0;
    const auto [dc, dq] = incremental(a, a);
    CHECK(dc == 0.0);
    CHECK(dq == 0.0);
}

TEST_CASE("hand-traced immortal individual") {
    // no disease, no mortality: the individual stays normal through age 100
    // and receives exactly the routine exams at 50, 60, 70, 80
    NaturalHistoryParams nh;
    nh.p_adeno = 0.0;
    nh.l = 1e-300;  // effectively zero onset
    nh.lam2 = nh.lam3 = nh.lam4 = nh.lam5 = nh.lam6 = 1e-300;
    const LifeTable lt = flat_table(0.0);
    CeaParams cea = inert_cea();
    cea.discount_rate = 0.03;

    // pick an individual whose initial state is normal
    std::uint64_t draw = 0;
    const StreamKey init = StreamKey::derive(99, "nh-init", draw, 0);
    REQUIRE(init.uniform_at(0) < 0.99);  // lands in the normal bucket (p_adeno=0)

    const StrategyOutcome none = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::none), lt, 1, 99, draw, 100, Executor(1));
    const StrategyOutcome screen = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::colonoscopy), lt, 1, 99, draw, 100, Executor(1));

    CHECK(screen.colonoscopies == 4);
    const double expected_cost = 10000.0 / std::pow(1.03, 0) + 10000.0 / std::pow(1.03, 10) +
                                 10000.0 / std::pow(1.03, 20) + 10000.0 / std::pow(1.03, 30);
    CHECK(screen.mean_cost - none.mean_cost == doctest::Approx(expected_cost).epsilon(1e-12));
    CHECK(screen.mean_qaly == none.mean_qaly);

    // undiscounted comparison for the arithmetic-transparent case
    cea.discount_rate = 0.0;
    const StrategyOutcome flat = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::colonoscopy), lt, 1, 99, draw, 100, Executor(1));
    const StrategyOutcome flat_none = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::none), lt, 1, 99, draw, 100, Executor(1));
    CHECK(flat.mean_cost - flat_none.mean_cost == doctest::Approx(40000.0));
    CHECK(flat_none.mean_qaly == doctest::Approx(51.0));  // ages 50..100 inclusive
}

TEST_CASE("screening detects and treats") {
    const LifeTable lt = flat_table(0.01);
    const NaturalHistoryParams nh;
    CeaParams cea;  // table-2 means
    const StrategyOutcome screen = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::colonoscopy), lt, 20000, 13, 0, 100, Executor(2));
    CHECK(screen.polypectomies > 0);
    CHECK(screen.screen_detected > 0);
    CHECK(screen.colonoscopies > 0);

    SUBCASE("higher cancer sensitivity detects no fewer cancers (paired seeds)") {
        CeaParams lo = cea, hi = cea;
        lo.sens_large_crc = 0.5;
        hi.sens_large_crc = 0.99;
        const StrategyOutcome out_lo = simulate_strategy(
            nh, lo, default_strategy(StrategyKind::colonoscopy), lt, 20000, 13, 0, 100, Executor(2));
        const StrategyOutcome out_hi = simulate_strategy(
            nh, hi, default_strategy(StrategyKind::colonoscopy), lt, 20000, 13, 0, 100, Executor(2));
        CHECK(out_hi.screen_detected >= out_lo.screen_detected);
    }

    SUBCASE("screening shifts diagnoses toward the early stage (paired seeds)") {
        const StrategyOutcome none = simulate_strategy(
            nh, cea, default_strategy(StrategyKind::none), lt, 20000, 13, 0, 100, Executor(2));
        const double late_frac_screen =
            static_cast<double>(screen.diagnosed_late) /
            static_cast<double>(screen.diagnosed_early + screen.diagnosed_late);
        const double late_frac_none =
            static_cast<double>(none.diagnosed_late) /
            static_cast<double>(none.diagnosed_early + none.diagnosed_late);
        CHECK(late_frac_screen <= late_frac_none);
    }

    SUBCASE("screening is beneficial at table values") {
        const StrategyOutcome none = simulate_strategy(
            nh, cea, default_strategy(StrategyKind::none), lt, 20000, 13, 0, 100, Executor(2));
        const auto [d_cost, d_qaly] = incremental(screen, none);
        CHECK(d_qaly > 0.0);
        (void)d_cost;
    }
}

TEST_CASE("per-individual colonoscopy count respects the surveillance bound") {
    const LifeTable lt = flat_table(0.005);
    NaturalHistoryParams nh;
    nh.p_adeno = 0.9;  // adenomas everywhere: maximal surveillance pressure
    CeaParams cea;
    cea.sens_small = 1.0;
    cea.sens_large_crc = 1.0;
    cea.spec = 0.0;  // every clean exam is a false positive
    const ScreeningStrategy strat = default_strategy(StrategyKind::colonoscopy);
    const int bound = (85 - 50) / 3 + 1 + 1;  // ceil(35/3) + 1
    for (std::uint64_t i = 0; i < 60; ++i) {
        const StrategyOutcome one =
            simulate_strategy(nh, cea, strat, lt, 1, 555, i, 100, Executor(1));
        CHECK(one.colonoscopies <= bound);
    }
}

TEST_CASE("stronger discounting can only shrink outcomes") {
    const LifeTable lt = flat_table(0.01);
    const NaturalHistoryParams nh;
    CeaParams mild;
    mild.discount_rate = 0.01;
    CeaParams steep = mild;
    steep.discount_rate = 0.06;
    for (StrategyKind kind : {StrategyKind::none, StrategyKind::colonoscopy}) {
        const StrategyOutcome a = simulate_strategy(nh, mild, default_strategy(kind), lt, 3000,
                                                    21, 0, 100, Executor(2));
        const StrategyOutcome b = simulate_strategy(nh, steep, default_strategy(kind), lt, 3000,
                                                    21, 0, 100, Executor(2));
        CHECK(b.mean_cost <= a.mean_cost);
        CHECK(b.mean_qaly <= a.mean_qaly);
    }
}

TEST_CASE("executor invariance of strategy outcomes") {
    const LifeTable lt = flat_table(0.01);
    const NaturalHistoryParams nh;
    const CeaParams cea;
    const StrategyOutcome a = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::colonoscopy), lt, 7000, 8, 2, 100, Executor(1));
    const StrategyOutcome b = simulate_strategy(
        nh, cea, default_strategy(StrategyKind::colonoscopy), lt, 7000, 8, 2, 100, Executor(2));
    CHECK(a.mean_cost == b.mean_cost);  // bitwise
    CHECK(a.mean_qaly == b.mean_qaly);
    CHECK(a.colonoscopies == b.colonoscopies);
    CHECK(a.crc_deaths == b.crc_deaths);
}

TEST_CASE("parameter validation") {
    CeaParams cea;
    cea.sens_small = 1.4;
    CHECK_THROWS_AS(cea.validate(), std::domain_error);
    cea = CeaParams{};
    cea.u_clin_late = -0.1;
    CHECK_THROWS_AS(cea.validate(), std::domain_error);
    cea = CeaParams{};
    cea.cost_colonoscopy = -5.0;
    CHECK_THROWS_AS(cea.validate(), std::domain_error);

    ScreeningStrategy s;
    s.start_age = 90;
    CHECK_THROWS_AS(s.validate(), std::domain_error);
    s = ScreeningStrategy{};
    s.surveillance_high = 0;
    CHECK_THROWS_AS(s.validate(), std::domain_error);
}
