#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crcsim/microsim.hpp"

namespace crcsim {

enum class TargetType { adenoma_prevalence, proportion_small, incidence_early, incidence_late };

const char* to_string(TargetType t);
TargetType target_type_from_string(const std::string& s);

/// How the per-target SE is derived from the replication-level outputs:
/// `sd` reports the plain standard deviation across replications (the
/// sampling error of one cohort-sized study), `sem` divides by sqrt(reps).
enum class SeMode { sd, sem };

const char* to_string(SeMode m);
SeMode se_mode_from_string(const std::string& s);

struct CalibrationTarget {
    TargetType type;
    int bin_lo = 0;  // bin_lo == bin_hi for the age-point adenoma targets
    int bin_hi = 0;
    double mean = 0.0;
    double se = 0.0;
    std::int64_t cohort_size = 0;
};

struct TargetSet {
    std::vector<CalibrationTarget> targets;
    TargetBinSpec bins;

    // Provenance.
    NaturalHistoryParams true_params;
    int reps = 0;
    std::int64_t n_adenoma = 0;
    std::int64_t n_cancer = 0;
    std::uint64_t master_seed = 0;
    SeMode se_mode = SeMode::sd;
    int age_max = 100;

    void validate() const;  // throws when a target has se <= 0 or a type is absent
};

/// Mean/SE aggregation across replication-level values; rows are
/// replications. Throws std::runtime_error when any SE degenerates to zero.
std::pair<std::vector<double>, std::vector<double>> aggregate_replications(
    const std::vector<std::vector<double>>& per_rep_values, SeMode mode);

/// Confirmatory simulation: `reps` cohort pairs at the given true parameters
/// (size n_adenoma for the adenoma targets, n_cancer for incidence targets),
/// aggregated to per-bin means and SEs. Proportion-small bins that come up
/// empty in any replication are dropped with a note to stderr.
TargetSet generate_targets(const NaturalHistoryParams& true_params,
                           const LifeTable& life_table, int reps,
                           std::int64_t n_adenoma, std::int64_t n_cancer,
                           const TargetBinSpec& bins, std::uint64_t master_seed,
                           SeMode se_mode, int age_max, const Executor& exec);

/// Sum of normal log densities of the targets given model predictions.
/// Missing predictions contribute a -1e10 floor per target; a non-finite
/// prediction yields -inf (reject sentinel, never an exception).
double log_likelihood(const ModelPrediction& phi, const TargetSet& targets);

/// Like log_likelihood, but each target's variance is inflated by the Monte
/// Carlo variance of its phi estimate (phi.*_se), marginalizing simulation
/// noise out of the likelihood. Converges to log_likelihood as the evaluation
/// cohort grows; this is what the calibrator evaluates, since at finite
/// cohort sizes raw frozen noisy likelihoods degenerate the importance
/// weights.
double log_likelihood_noise_adjusted(const ModelPrediction& phi, const TargetSet& targets);

/// CSV (`target_type,bin_lo,bin_hi,mean,se,cohort_size`) plus a JSON metadata
/// sidecar at <path>.meta.json carrying the provenance and bin spec.
void write_targets(const TargetSet& ts, const std::string& path,
                   std::uint64_t config_hash);
TargetSet read_targets(const std::string& path);

}  // namespace crcsim
