#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "crcsim/targets.hpp"

using namespace crcsim;

namespace {

LifeTable flat_table(double rate, int lo = 50, int hi = 105) {
    std::vector<std::pair<int, double>> rows;
    for (int a = lo; a <= hi; ++a) rows.emplace_back(a, rate);
    return LifeTable::from_rows(rows);
}

TargetBinSpec small_bins() {
    TargetBinSpec bins;
    bins.adenoma_ages = {55, 60};
    bins.incidence_bins = {{50, 54}, {55, 59}, {65, 69}, {75, 79}};
    return bins;
}

// One target per type, aligned with small_bins().
TargetSet tiny_target_set() {
    TargetSet ts;
    ts.bins = small_bins();
    ts.targets = {
        {TargetType::adenoma_prevalence, 55, 55, 0.25, 0.05, 500},
        {TargetType::proportion_small, 55, 55, 0.7, 0.04, 500},
        {TargetType::incidence_early, 50, 54, 40.0, 5.0, 100000},
        {TargetType::incidence_late, 50, 54, 35.0, 5.0, 100000},
    };
    ts.reps = 2;
    ts.n_adenoma = 500;
    ts.n_cancer = 100000;
    return ts;
}

ModelPrediction matching_phi(const TargetSet& ts) {
    ModelPrediction phi;
    phi.adenoma_prevalence = {0.25, 0.3};
    phi.proportion_small = {0.7, 0.65};
    phi.incidence_early = {40.0, 50.0, 60.0, 70.0};
    phi.incidence_late = {35.0, 45.0, 55.0, 65.0};
    phi.adenoma_prevalence_se.assign(2, 0.0);
    phi.proportion_small_se.assign(2, 0.0);
    phi.incidence_early_se.assign(4, 0.0);
    phi.incidence_late_se.assign(4, 0.0);
    phi.adenoma_prevalence_missing.assign(2, 0);
    phi.proportion_small_missing.assign(2, 0);
    phi.incidence_early_missing.assign(4, 0);
    phi.incidence_late_missing.assign(4, 0);
    (void)ts;
    return phi;
}

}  // namespace

TEST_CASE("log likelihood scalar oracle") {
    TargetSet ts = tiny_target_set();
    ts.targets = {{TargetType::adenoma_prevalence, 55, 55, 0.25, 0.05, 500}};
    ModelPrediction phi = matching_phi(ts);

    // -ln(sigma * sqrt(2 pi)) at phi == y
    const double expected = -std::log(0.05 * std::sqrt(2.0 * M_PI));
    CHECK(log_likelihood(phi, ts) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(log_likelihood(phi, ts) == doctest::Approx(2.0768).epsilon(1e-4));

    // phi == y maximizes; any shift reduces
    const double at_mean = log_likelihood(phi, ts);
    for (double shift : {-0.1, -0.02, 0.02, 0.1}) {
        ModelPrediction moved = phi;
        moved.adenoma_prevalence[0] += shift;
        CHECK(log_likelihood(moved, ts) < at_mean);
    }

    // one-sigma shift costs exactly 0.5
    ModelPrediction one_sigma = phi;
    one_sigma.adenoma_prevalence[0] += 0.05;
    CHECK(at_mean - log_likelihood(one_sigma, ts) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("log likelihood decomposition and scaling") {
    const TargetSet ts = tiny_target_set();
    const ModelPrediction phi = matching_phi(ts);

    TargetSet first_two = ts, last_two = ts;
    first_two.targets = {ts.targets[0], ts.targets[1]};
    last_two.targets = {ts.targets[2], ts.targets[3]};
    CHECK(log_likelihood(phi, ts) ==
          doctest::Approx(log_likelihood(phi, first_two) + log_likelihood(phi, last_two))
              .epsilon(1e-12));

    // doubling every sigma at phi == y changes ll by -(#targets) ln 2
    TargetSet at_mean = ts;
    at_mean.targets[0].mean = phi.adenoma_prevalence[0];
    at_mean.targets[1].mean = phi.proportion_small[0];
    at_mean.targets[2].mean = phi.incidence_early[0];
    at_mean.targets[3].mean = phi.incidence_late[0];
    TargetSet doubled = at_mean;
    for (auto& t : doubled.targets) t.se *= 2.0;
    CHECK(log_likelihood(phi, at_mean) - log_likelihood(phi, doubled) ==
          doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("log likelihood sentinels") {
    const TargetSet ts = tiny_target_set();
    ModelPrediction phi = matching_phi(ts);

    SUBCASE("missing bin contributes the penalty floor") {
        phi.proportion_small_missing[0] = 1;
        const double ll = log_likelihood(phi, ts);
        CHECK(ll < -0.9e10);
        CHECK(std::isfinite(ll));
    }
    SUBCASE("non-finite phi rejects with -inf") {
        phi.incidence_early[0] = std::numeric_limits<double>::infinity();
        CHECK(log_likelihood(phi, ts) == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("phi not covering a target bin is a caller bug") {
        TargetSet bad = ts;
        bad.targets[0].bin_lo = bad.targets[0].bin_hi = 99;
        CHECK_THROWS_AS(log_likelihood(phi, bad), std::invalid_argument);
    }
}

TEST_CASE("noise-adjusted likelihood widens with the mc se") {
    TargetSet ts = tiny_target_set();
    ts.targets = {{TargetType::adenoma_prevalence, 55, 55, 0.25, 0.05, 500}};
    ModelPrediction phi = matching_phi(ts);
    phi.adenoma_prevalence[0] = 0.40;  // 3 sigma off
    CHECK(log_likelihood_noise_adjusted(phi, ts) ==
          doctest::Approx(log_likelihood(phi, ts)).epsilon(1e-12));  // se = 0 -> identical
    phi.adenoma_prevalence_se[0] = 0.05;
    // inflated variance makes a poor fit less damning
    CHECK(log_likelihood_noise_adjusted(phi, ts) > log_likelihood(phi, ts));
}

TEST_CASE("aggregate_replications modes and degeneracy") {
    const std::vector<std::vector<double>> values = {{1.0, 10.0}, {2.0, 12.0}, {3.0, 14.0}};
    const auto [mean_sd, se_sd] = aggregate_replications(values, SeMode::sd);
    CHECK(mean_sd[0] == doctest::Approx(2.0));
    CHECK(mean_sd[1] == doctest::Approx(12.0));
    CHECK(se_sd[0] == doctest::Approx(1.0));
    CHECK(se_sd[1] == doctest::Approx(2.0));

    const auto [mean_sem, se_sem] = aggregate_replications(values, SeMode::sem);
    CHECK(mean_sem[0] == doctest::Approx(2.0));
    CHECK(se_sem[0] == doctest::Approx(1.0 / std::sqrt(3.0)));

    // forced identical replications -> zero dispersion must be rejected
    CHECK_THROWS_AS(aggregate_replications({{1.0}, {1.0}}, SeMode::sd), std::runtime_error);
    CHECK_THROWS_AS(aggregate_replications({{1.0}}, SeMode::sd), std::runtime_error);
}

TEST_CASE("generate_targets produces plausible structure") {
    const LifeTable lt = flat_table(0.01);
    const NaturalHistoryParams truth;
    // the spec-scale cohort split: small adenoma studies, large cancer registries
    const TargetSet ts = generate_targets(truth, lt, 12, 500, 100000, small_bins(), 321,
                                          SeMode::sd, 100, Executor(2));
    ts.validate();

    // small adenoma cohorts make relatively noisier targets than the big
    // incidence cohorts
    double rel_adeno = 0.0, rel_inc = 0.0;
    int n_adeno = 0, n_inc = 0;
    for (const auto& t : ts.targets) {
        if (t.type == TargetType::adenoma_prevalence) {
            rel_adeno += t.se / t.mean;
            ++n_adeno;
        } else if (t.type == TargetType::incidence_early || t.type == TargetType::incidence_late) {
            rel_inc += t.se / t.mean;
            ++n_inc;
        }
    }
    CHECK(rel_adeno / n_adeno > rel_inc / n_inc);

    SUBCASE("same seed reproduces bytes") {
        const TargetSet again = generate_targets(truth, lt, 12, 500, 100000, small_bins(), 321,
                                                 SeMode::sd, 100, Executor::sequential());
        const std::string dir = "/tmp/crcsim_test_targets";
        std::filesystem::create_directories(dir);
        write_targets(ts, dir + "/a.csv", 7);
        write_targets(again, dir + "/b.csv", 7);
        std::ifstream fa(dir + "/a.csv"), fb(dir + "/b.csv");
        const std::string ca((std::istreambuf_iterator<char>(fa)), {});
        const std::string cb((std::istreambuf_iterator<char>(fb)), {});
        CHECK(ca == cb);
        CHECK(!ca.empty());
    }

    SUBCASE("sem mode shrinks ses by sqrt(reps)") {
        const TargetSet sem = generate_targets(truth, lt, 12, 500, 100000, small_bins(), 321,
                                               SeMode::sem, 100, Executor(2));
        REQUIRE(sem.targets.size() == ts.targets.size());
        for (std::size_t i = 0; i < ts.targets.size(); ++i)
            CHECK(sem.targets[i].se ==
                  doctest::Approx(ts.targets[i].se / std::sqrt(12.0)).epsilon(1e-12));
    }
}

TEST_CASE("generate_targets with blocked progression") {
    // lam3 = 0: incident cancers can only come from the preclinical seeds,
    // which resolve within the first years; empty later bins get dropped
    NaturalHistoryParams p;
    p.lam3 = 1e-12;
    const TargetSet ts = generate_targets(p, flat_table(0.01), 8, 500, 20000, small_bins(), 11,
                                          SeMode::sd, 100, Executor(2));
    double early_bin_inc = 0.0, late_bin_inc = 0.0;
    for (const auto& t : ts.targets) {
        if (t.type != TargetType::incidence_early && t.type != TargetType::incidence_late)
            continue;
        if (t.bin_lo == 50) early_bin_inc += t.mean;
        if (t.bin_lo >= 65) late_bin_inc += t.mean;
    }
    CHECK(early_bin_inc > 10.0);  // seeded preclinical cases surface quickly
    CHECK(late_bin_inc < 5.0);    // later bins are near-zero or dropped entirely
}

TEST_CASE("generate_targets rejects reps < 2") {
    CHECK_THROWS_AS(generate_targets(NaturalHistoryParams{}, flat_table(0.01), 1, 100, 100,
                                     small_bins(), 1, SeMode::sd, 100, Executor::sequential()),
                    std::invalid_argument);
}

TEST_CASE("targets file round trip") {
    const std::string dir = "/tmp/crcsim_test_targets";
    std::filesystem::create_directories(dir);
    const LifeTable lt = flat_table(0.01);
    const TargetSet ts = generate_targets(NaturalHistoryParams{}, lt, 5, 300, 5000, small_bins(),
                                          77, SeMode::sd, 95, Executor(2));
    write_targets(ts, dir + "/roundtrip.csv", 99);
    const TargetSet back = read_targets(dir + "/roundtrip.csv");

    REQUIRE(back.targets.size() == ts.targets.size());
    for (std::size_t i = 0; i < ts.targets.size(); ++i) {
        CHECK(back.targets[i].type == ts.targets[i].type);
        CHECK(back.targets[i].bin_lo == ts.targets[i].bin_lo);
        CHECK(back.targets[i].bin_hi == ts.targets[i].bin_hi);
        CHECK(back.targets[i].mean == ts.targets[i].mean);  // exact via round-trip formatting
        CHECK(back.targets[i].se == ts.targets[i].se);
        CHECK(back.targets[i].cohort_size == ts.targets[i].cohort_size);
    }
    CHECK(back.reps == ts.reps);
    CHECK(back.se_mode == ts.se_mode);
    CHECK(back.master_seed == ts.master_seed);
    CHECK(back.bins.adenoma_ages == ts.bins.adenoma_ages);
    CHECK(back.bins.incidence_bins == ts.bins.incidence_bins);
    CHECK(back.true_params.lam4 == ts.true_params.lam4);
}

TEST_CASE("targets file error paths") {
    const std::string dir = "/tmp/crcsim_test_targets";
    std::filesystem::create_directories(dir);

    SUBCASE("empty file") {
        std::ofstream(dir + "/empty.csv");
        CHECK_THROWS(read_targets(dir + "/empty.csv"));
    }
    SUBCASE("negative se names the row") {
        std::ofstream out(dir + "/bad.csv");
        out << "target_type,bin_lo,bin_hi,mean,se,cohort_size\n";
        out << "adenoma_prevalence,55,55,0.25,0.05,500\n";
        out << "proportion_small,55,55,0.7,-1,500\n";
        out.close();
        try {
            read_targets(dir + "/bad.csv");
            FAIL("expected a parse error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("malformed number names the row") {
        std::ofstream out(dir + "/garbled.csv");
        out << "target_type,bin_lo,bin_hi,mean,se,cohort_size\n";
        out << "adenoma_prevalence,55,55,zzz,0.05,500\n";
        out.close();
        CHECK_THROWS(read_targets(dir + "/garbled.csv"));
    }
    SUBCASE("hand-written file with one target per type parses") {
        const std::string path = dir + "/hand.csv";
        std::ofstream out(path);
        out << "target_type,bin_lo,bin_hi,mean,se,cohort_size\n";
        out << "adenoma_prevalence,55,55,0.27,0.02,500\n";
        out << "proportion_small,55,55,0.66,0.035,500\n";
        out << "incidence_early,50,54,44.1,5.2,100000\n";
        out << "incidence_late,50,54,39.5,4.8,100000\n";
        out.close();
        std::ofstream meta(path + ".meta.json");
        meta << R"({"true_params":{"p_adeno":0.25,"p_small":0.71,"l":2.86e-06,"gamma":2.78,)"
             << R"("lam2":0.0346,"lam3":0.0215,"lam4":0.3697,"lam5":0.2382,"lam6":0.4582,)"
             << R"("lam7":0.0302,"lam8":0.2099},"reps":100,"n_adenoma":500,"n_cancer":100000,)"
             << R"("master_seed":1,"se_mode":"sd","age_max":100,"adenoma_ages":[55],)"
             << R"("incidence_bins":[[50,54]],"config_hash":0})" << "\n";
        meta.close();
        const TargetSet ts = read_targets(path);
        CHECK(ts.targets.size() == 4);
        CHECK_NOTHROW(ts.validate());
    }
}
