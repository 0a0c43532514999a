#include "crcsim/targets.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "crcsim/csv.hpp"
#include "crcsim/special_functions.hpp"

namespace crcsim {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMissingPenalty = -1e10;
}  // namespace

const char* to_string(TargetType t) {
    switch (t) {
        case TargetType::adenoma_prevalence: return "adenoma_prevalence";
        case TargetType::proportion_small: return "proportion_small";
        case TargetType::incidence_early: return "incidence_early";
        case TargetType::incidence_late: return "incidence_late";
    }
    return "?";
}

TargetType target_type_from_string(const std::string& s) {
    if (s == "adenoma_prevalence") return TargetType::adenoma_prevalence;
    if (s == "proportion_small") return TargetType::proportion_small;
    if (s == "incidence_early") return TargetType::incidence_early;
    if (s == "incidence_late") return TargetType::incidence_late;
    throw std::runtime_error("unknown target type '" + s + "'");
}

const char* to_string(SeMode m) { return m == SeMode::sd ? "sd" : "sem"; }

SeMode se_mode_from_string(const std::string& s) {
    if (s == "sd") return SeMode::sd;
    if (s == "sem") return SeMode::sem;
    throw std::runtime_error("se_mode must be 'sd' or 'sem', got '" + s + "'");
}

void TargetSet::validate() const {
    bool seen[4] = {false, false, false, false};
    for (const auto& t : targets) {
        if (!(t.se > 0.0) || !std::isfinite(t.se))
            throw std::runtime_error("target set: se must be > 0");
        if (!std::isfinite(t.mean)) throw std::runtime_error("target set: non-finite mean");
        if ((t.type == TargetType::adenoma_prevalence || t.type == TargetType::proportion_small) &&
            (t.mean < 0.0 || t.mean > 1.0))
            throw std::runtime_error("target set: proportion mean outside [0,1]");
        seen[static_cast<int>(t.type)] = true;
    }
    for (int i = 0; i < 4; ++i)
        if (!seen[i])
            throw std::runtime_error(std::string("target set: no targets of type ") +
                                     to_string(static_cast<TargetType>(i)));
}

std::pair<std::vector<double>, std::vector<double>> aggregate_replications(
    const std::vector<std::vector<double>>& per_rep_values, SeMode mode) {
    if (per_rep_values.size() < 2)
        throw std::runtime_error("aggregate_replications: need at least 2 replications");
    const std::size_t reps = per_rep_values.size();
    const std::size_t bins = per_rep_values.front().size();
    for (const auto& row : per_rep_values)
        if (row.size() != bins)
            throw std::runtime_error("aggregate_replications: ragged replication rows");

    std::vector<double> means(bins, 0.0), ses(bins, 0.0);
    for (std::size_t b = 0; b < bins; ++b) {
        double sum = 0.0;
        for (std::size_t r = 0; r < reps; ++r) sum += per_rep_values[r][b];
        const double mean = sum / static_cast<double>(reps);
        double ss = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const double d = per_rep_values[r][b] - mean;
            ss += d * d;
        }
        double se = std::sqrt(ss / static_cast<double>(reps - 1));
        if (mode == SeMode::sem) se /= std::sqrt(static_cast<double>(reps));
        if (!(se > 0.0))
            throw std::runtime_error(
                "aggregate_replications: degenerate (zero) dispersion across replications");
        means[b] = mean;
        ses[b] = se;
    }
    return {means, ses};
}

TargetSet generate_targets(const NaturalHistoryParams& true_params,
                           const LifeTable& life_table, int reps,
                           std::int64_t n_adenoma, std::int64_t n_cancer,
                           const TargetBinSpec& bins, std::uint64_t master_seed,
                           SeMode se_mode, int age_max, const Executor& exec) {
    if (reps < 2) throw std::invalid_argument("generate_targets: reps must be >= 2");
    bins.validate(50, age_max);

    const std::uint64_t seed_adenoma = StreamKey::derive(master_seed, "targets-adenoma", 0, 0).state;
    const std::uint64_t seed_cancer = StreamKey::derive(master_seed, "targets-cancer", 0, 0).state;

    const std::size_t n_ages = bins.adenoma_ages.size();
    const std::size_t n_bins = bins.incidence_bins.size();
    std::vector<ModelPrediction> adeno_phi(static_cast<std::size_t>(reps));
    std::vector<ModelPrediction> cancer_phi(static_cast<std::size_t>(reps));

    exec.run_blocks(reps, 1, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
            const auto rep = static_cast<std::uint64_t>(r);
            adeno_phi[static_cast<std::size_t>(r)] = epi_outputs(
                simulate_cohort(true_params, life_table, n_adenoma, seed_adenoma, rep, age_max,
                                Executor::sequential()),
                bins);
            cancer_phi[static_cast<std::size_t>(r)] = epi_outputs(
                simulate_cohort(true_params, life_table, n_cancer, seed_cancer, rep, age_max,
                                Executor::sequential()),
                bins);
        }
    });

    auto value_at = [&](TargetType type, int r, std::size_t b) {
        const auto& ap = adeno_phi[static_cast<std::size_t>(r)];
        const auto& cp = cancer_phi[static_cast<std::size_t>(r)];
        switch (type) {
            case TargetType::adenoma_prevalence: return ap.adenoma_prevalence[b];
            case TargetType::proportion_small: return ap.proportion_small[b];
            case TargetType::incidence_early: return cp.incidence_early[b];
            case TargetType::incidence_late: return cp.incidence_late[b];
        }
        return 0.0;
    };
    // A bin is kept only if every replication produced a defined value and the
    // values actually varied; a zero-dispersion bin cannot carry a positive SE.
    auto column_ok = [&](TargetType type, std::size_t b) {
        for (int r = 0; r < reps; ++r) {
            const auto& ap = adeno_phi[static_cast<std::size_t>(r)];
            const auto& cp = cancer_phi[static_cast<std::size_t>(r)];
            switch (type) {
                case TargetType::adenoma_prevalence:
                    if (ap.adenoma_prevalence_missing[b]) return false;
                    break;
                case TargetType::proportion_small:
                    if (ap.proportion_small_missing[b]) return false;
                    break;
                case TargetType::incidence_early:
                    if (cp.incidence_early_missing[b]) return false;
                    break;
                case TargetType::incidence_late:
                    if (cp.incidence_late_missing[b]) return false;
                    break;
            }
        }
        const double first = value_at(type, 0, b);
        for (int r = 1; r < reps; ++r)
            if (value_at(type, r, b) != first) return true;
        return false;
    };

    TargetSet ts;
    ts.bins = bins;
    ts.true_params = true_params;
    ts.reps = reps;
    ts.n_adenoma = n_adenoma;
    ts.n_cancer = n_cancer;
    ts.master_seed = master_seed;
    ts.se_mode = se_mode;
    ts.age_max = age_max;

    for (TargetType type : {TargetType::adenoma_prevalence, TargetType::proportion_small,
                            TargetType::incidence_early, TargetType::incidence_late}) {
        const bool adenoma_type =
            type == TargetType::adenoma_prevalence || type == TargetType::proportion_small;
        const std::size_t count = adenoma_type ? n_ages : n_bins;
        const std::int64_t cohort = adenoma_type ? n_adenoma : n_cancer;

        std::vector<std::size_t> kept;
        for (std::size_t b = 0; b < count; ++b) {
            if (column_ok(type, b)) {
                kept.push_back(b);
            } else {
                std::cerr << "generate_targets: dropping " << to_string(type) << " bin "
                          << (adenoma_type ? bins.adenoma_ages[b] : bins.incidence_bins[b].first)
                          << " (undefined or degenerate in the replications)\n";
            }
        }
        if (kept.empty()) continue;

        std::vector<std::vector<double>> values(static_cast<std::size_t>(reps));
        for (int r = 0; r < reps; ++r) {
            values[static_cast<std::size_t>(r)].reserve(kept.size());
            for (std::size_t b : kept)
                values[static_cast<std::size_t>(r)].push_back(value_at(type, r, b));
        }
        const auto [means, ses] = aggregate_replications(values, se_mode);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            CalibrationTarget t;
            t.type = type;
            if (adenoma_type) {
                t.bin_lo = t.bin_hi = bins.adenoma_ages[kept[i]];
            } else {
                t.bin_lo = bins.incidence_bins[kept[i]].first;
                t.bin_hi = bins.incidence_bins[kept[i]].second;
            }
            t.mean = means[i];
            t.se = ses[i];
            t.cohort_size = cohort;
            ts.targets.push_back(t);
        }
    }

    ts.validate();
    return ts;
}

namespace {

// Index of a target's bin within the spec the predictions were computed on.
std::size_t bin_index(const CalibrationTarget& t, const TargetBinSpec& bins) {
    if (t.type == TargetType::adenoma_prevalence || t.type == TargetType::proportion_small) {
        for (std::size_t i = 0; i < bins.adenoma_ages.size(); ++i)
            if (bins.adenoma_ages[i] == t.bin_lo) return i;
    } else {
        for (std::size_t i = 0; i < bins.incidence_bins.size(); ++i)
            if (bins.incidence_bins[i].first == t.bin_lo &&
                bins.incidence_bins[i].second == t.bin_hi)
                return i;
    }
    throw std::invalid_argument("log_likelihood: prediction does not cover target bin");
}

}  // namespace

namespace {

double log_likelihood_impl(const ModelPrediction& phi, const TargetSet& targets,
                           bool noise_adjusted) {
    double sum = 0.0;
    for (const auto& t : targets.targets) {
        const std::size_t b = bin_index(t, targets.bins);
        double value = 0.0, mc_se = 0.0;
        bool missing = false;
        switch (t.type) {
            case TargetType::adenoma_prevalence:
                value = phi.adenoma_prevalence.at(b);
                mc_se = phi.adenoma_prevalence_se.at(b);
                missing = phi.adenoma_prevalence_missing.at(b) != 0;
                break;
            case TargetType::proportion_small:
                value = phi.proportion_small.at(b);
                mc_se = phi.proportion_small_se.at(b);
                missing = phi.proportion_small_missing.at(b) != 0;
                break;
            case TargetType::incidence_early:
                value = phi.incidence_early.at(b);
                mc_se = phi.incidence_early_se.at(b);
                missing = phi.incidence_early_missing.at(b) != 0;
                break;
            case TargetType::incidence_late:
                value = phi.incidence_late.at(b);
                mc_se = phi.incidence_late_se.at(b);
                missing = phi.incidence_late_missing.at(b) != 0;
                break;
        }
        if (missing) {
            sum += kMissingPenalty;
            continue;
        }
        if (!std::isfinite(value)) return kNegInf;
        const double se =
            noise_adjusted ? std::sqrt(t.se * t.se + mc_se * mc_se) : t.se;
        sum += normal_log_pdf(t.mean, value, se);
    }
    return sum;
}

}  // namespace

double log_likelihood(const ModelPrediction& phi, const TargetSet& targets) {
    return log_likelihood_impl(phi, targets, false);
}

double log_likelihood_noise_adjusted(const ModelPrediction& phi, const TargetSet& targets) {
    return log_likelihood_impl(phi, targets, true);
}

void write_targets(const TargetSet& ts, const std::string& path, std::uint64_t config_hash) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(ts.targets.size());
    for (const auto& t : ts.targets)
        rows.push_back({to_string(t.type), std::to_string(t.bin_lo), std::to_string(t.bin_hi),
                        format_double(t.mean), format_double(t.se),
                        std::to_string(t.cohort_size)});
    write_csv(path, {provenance_comment(config_hash, ts.master_seed)},
              {"target_type", "bin_lo", "bin_hi", "mean", "se", "cohort_size"}, rows);

    nlohmann::json meta;
    meta["true_params"] = {
        {"p_adeno", ts.true_params.p_adeno}, {"p_small", ts.true_params.p_small},
        {"l", ts.true_params.l},             {"gamma", ts.true_params.gamma},
        {"lam2", ts.true_params.lam2},       {"lam3", ts.true_params.lam3},
        {"lam4", ts.true_params.lam4},       {"lam5", ts.true_params.lam5},
        {"lam6", ts.true_params.lam6},       {"lam7", ts.true_params.lam7},
        {"lam8", ts.true_params.lam8}};
    meta["reps"] = ts.reps;
    meta["n_adenoma"] = ts.n_adenoma;
    meta["n_cancer"] = ts.n_cancer;
    meta["master_seed"] = ts.master_seed;
    meta["se_mode"] = to_string(ts.se_mode);
    meta["age_max"] = ts.age_max;
    meta["adenoma_ages"] = ts.bins.adenoma_ages;
    meta["incidence_bins"] = nlohmann::json::array();
    for (const auto& [lo, hi] : ts.bins.incidence_bins)
        meta["incidence_bins"].push_back({lo, hi});
    meta["config_hash"] = config_hash;

    std::ofstream out(path + ".meta.json");
    if (!out) throw std::runtime_error("cannot write " + path + ".meta.json");
    out << meta.dump(2) << "\n";
}

TargetSet read_targets(const std::string& path) {
    CsvTable csv = read_csv(path);
    const int c_type = csv.column("target_type");
    const int c_lo = csv.column("bin_lo");
    const int c_hi = csv.column("bin_hi");
    const int c_mean = csv.column("mean");
    const int c_se = csv.column("se");
    const int c_n = csv.column("cohort_size");

    TargetSet ts;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const std::string ctx = path + " row " + std::to_string(i + 1);
        const auto& row = csv.rows[i];
        CalibrationTarget t;
        t.type = target_type_from_string(row[static_cast<std::size_t>(c_type)]);
        t.bin_lo = static_cast<int>(parse_int(row[static_cast<std::size_t>(c_lo)], ctx));
        t.bin_hi = static_cast<int>(parse_int(row[static_cast<std::size_t>(c_hi)], ctx));
        t.mean = parse_double(row[static_cast<std::size_t>(c_mean)], ctx);
        t.se = parse_double(row[static_cast<std::size_t>(c_se)], ctx);
        t.cohort_size = parse_int(row[static_cast<std::size_t>(c_n)], ctx);
        if (!(t.se > 0.0)) throw std::runtime_error(ctx + ": se must be > 0");
        ts.targets.push_back(t);
    }

    std::ifstream meta_in(path + ".meta.json");
    if (!meta_in) throw std::runtime_error("cannot open " + path + ".meta.json");
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    const auto& tp = meta.at("true_params");
    ts.true_params.p_adeno = tp.at("p_adeno").get<double>();
    ts.true_params.p_small = tp.at("p_small").get<double>();
    ts.true_params.l = tp.at("l").get<double>();
    ts.true_params.gamma = tp.at("gamma").get<double>();
    ts.true_params.lam2 = tp.at("lam2").get<double>();
    ts.true_params.lam3 = tp.at("lam3").get<double>();
    ts.true_params.lam4 = tp.at("lam4").get<double>();
    ts.true_params.lam5 = tp.at("lam5").get<double>();
    ts.true_params.lam6 = tp.at("lam6").get<double>();
    ts.true_params.lam7 = tp.at("lam7").get<double>();
    ts.true_params.lam8 = tp.at("lam8").get<double>();
    ts.reps = meta.at("reps").get<int>();
    ts.n_adenoma = meta.at("n_adenoma").get<std::int64_t>();
    ts.n_cancer = meta.at("n_cancer").get<std::int64_t>();
    ts.master_seed = meta.at("master_seed").get<std::uint64_t>();
    ts.se_mode = se_mode_from_string(meta.at("se_mode").get<std::string>());
    ts.age_max = meta.at("age_max").get<int>();
    ts.bins.adenoma_ages = meta.at("adenoma_ages").get<std::vector<int>>();
    ts.bins.incidence_bins.clear();
    for (const auto& b : meta.at("incidence_bins"))
        ts.bins.incidence_bins.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());

    ts.validate();
    return ts;
}

}  // namespace crcsim
