#pragma once

#include <cstdint>
#include <string>

#include "crcsim/config.hpp"
#include "crcsim/imis.hpp"
#include "crcsim/psa.hpp"
#include "crcsim/targets.hpp"

namespace crcsim {

/// Calibration artifacts under out_dir: posterior.csv (resampled draws with
/// their pre-resample weights), diagnostics.json, posterior_summary.csv,
/// correlation.csv and density_grid.csv (per-parameter prior/posterior
/// density curves).
void write_posterior_artifacts(const PosteriorSample& ps, const PriorSet& priors,
                               const std::string& out_dir, std::uint64_t config_hash);

/// Rebuilds the sample parts downstream commands need (resample matrix, MAP,
/// seed) from posterior.csv plus the diagnostics.json sitting next to it.
PosteriorSample read_posterior_artifacts(const std::string& posterior_csv_path);

/// validation.csv: per target bin, the target mean with its 95% CI and the
/// posterior-predictive mean and 95% interval.
void write_validation_csv(const TargetSet& targets, const PredictiveBands& bands,
                          const std::string& path, std::uint64_t config_hash,
                          std::uint64_t master_seed);

void write_psa_csv(const PsaResult& result, const std::string& path,
                   std::uint64_t config_hash);
PsaResult read_psa_csv(const std::string& path);

void write_psa_reference_csv(const PsaRecord& record, const std::string& path,
                             std::uint64_t config_hash, std::uint64_t master_seed);

void write_evpi_csv(const EvpiCurve& curve, UncertaintyApproach approach,
                    const std::string& path, std::uint64_t config_hash,
                    std::uint64_t master_seed);
void write_evpi_combined_csv(const std::vector<std::pair<UncertaintyApproach, EvpiCurve>>& curves,
                             const std::string& path, std::uint64_t config_hash,
                             std::uint64_t master_seed);

}  // namespace crcsim
