#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crcsim/distributions.hpp"
#include "crcsim/imis.hpp"
#include "crcsim/life_table.hpp"
#include "crcsim/psa.hpp"
#include "crcsim/screening.hpp"
#include "crcsim/targets.hpp"

namespace crcsim {

/// Configuration problems map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The full run configuration (JSON document). Unknown keys anywhere are hard
/// errors; relative file paths resolve against the config file's directory.
struct RunConfig {
    // model
    double lam7 = 0.0302;
    double lam8 = 0.2099;
    std::string life_table_path;
    int age_max = 100;

    PriorSet priors;

    // targets
    TargetBinSpec bins;
    int reps = 100;
    std::int64_t n_adenoma = 500;
    std::int64_t n_cancer = 100000;
    SeMode se_mode = SeMode::sd;
    NaturalHistoryParams true_params;

    ImisConfig imis;

    // cea
    ExternalSpecs externals;
    ScreeningStrategy strategy;

    // psa
    std::vector<UncertaintyApproach> approaches;
    int psa_n_draws = 1000;
    std::int64_t psa_n_individuals = 10000;
    double wtp_lo = 0.0;
    double wtp_hi = 150000.0;
    double wtp_step = 1000.0;

    std::uint64_t master_seed = 1;
    std::uint64_t config_hash = 0;  // over the effective config, seed included

    std::vector<double> wtp_grid() const;
    LifeTable load_life_table() const;
    NhFixed nh_fixed(const LifeTable& lt) const;

    static RunConfig load(const std::string& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);
};

}  // namespace crcsim
