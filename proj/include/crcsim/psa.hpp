#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crcsim/distributions.hpp"
#include "crcsim/imis.hpp"
#include "crcsim/screening.hpp"

namespace crcsim {

/// The four characterizations of calibrated-parameter uncertainty.
enum class UncertaintyApproach {
    A1_full,                 // posterior draws + external distributions
    A2_map,                  // MAP point + external distributions
    A3_posterior_only,       // posterior draws + external means
    A4_moments_independent,  // independent moment-matched fits + external distributions
};

const char* to_string(UncertaintyApproach a);
UncertaintyApproach approach_from_string(const std::string& s);

/// Table-2 external parameter distributions plus the (non-sampled) discount
/// rate. Utility draws are redrawn until <= 1.
struct ExternalSpecs {
    DistributionSpec sens_small;
    DistributionSpec spec;
    DistributionSpec sens_large_crc;
    DistributionSpec hr_low;
    DistributionSpec hr_high;
    DistributionSpec cost_colonoscopy;
    DistributionSpec cost_early_annual;
    DistributionSpec cost_late_annual;
    DistributionSpec u_preclinical;
    DistributionSpec u_clin_early;
    DistributionSpec u_clin_late;
    double discount_rate = 0.03;

    CeaParams sample(RngStream& stream) const;
    CeaParams means() const;
};

struct PsaDraw {
    NaturalHistoryParams nh;
    CeaParams cea;
};

/// Parameter sets for one PSA under the given approach. The external
/// substream is keyed by draw index only, so approaches share external draws
/// (matched seeds); the posterior-row pick is likewise shared between A1/A3.
std::vector<PsaDraw> build_draws(UncertaintyApproach approach, const PosteriorSample& posterior,
                                 const ExternalSpecs& externals, int n_draws,
                                 std::uint64_t master_seed, const NhFixed& fixed);

struct PsaRecord {
    int draw = 0;
    double cost_none = 0.0, qaly_none = 0.0;
    double cost_screen = 0.0, qaly_screen = 0.0;
    double d_cost = 0.0, d_qaly = 0.0;
};

struct PsaResult {
    UncertaintyApproach approach = UncertaintyApproach::A1_full;
    std::vector<PsaRecord> records;
    std::int64_t n_individuals = 0;
    std::uint64_t master_seed = 0;
};

/// Both strategies per draw with shared natural-history streams (common
/// random numbers); draws are distributed over the executor.
PsaResult run_psa(const std::vector<PsaDraw>& draws, UncertaintyApproach approach,
                  const ScreeningStrategy& strat, const LifeTable& life_table,
                  std::int64_t n_individuals, std::uint64_t master_seed, int age_max,
                  const Executor& exec);

/// Incremental outcomes at the MAP calibrated point and mean external
/// parameters (the reference point of the PSA scatter).
PsaRecord map_reference_record(const PosteriorSample& posterior, const ExternalSpecs& externals,
                               const ScreeningStrategy& strat, const NhFixed& fixed,
                               std::int64_t n_individuals, std::uint64_t master_seed,
                               const Executor& exec);

struct EvpiCurve {
    std::vector<double> wtp;
    std::vector<double> evpi;
};

/// Per-person EVPI over the willingness-to-pay grid:
/// mean over draws of the best strategy's NMB minus the best strategy's mean NMB.
EvpiCurve evpi_curve(const PsaResult& psa, const std::vector<double>& wtp_grid);

}  // namespace crcsim
