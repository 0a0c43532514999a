#include "crcsim/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace crcsim {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(path + ": missing key '" + key + "'");
    return obj.at(key);
}

double get_number(const json& obj, const std::string& path, const std::string& key) {
    const json& v = require(obj, path, key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& path, const std::string& key) {
    const json& v = require(obj, path, key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key) {
    const json& v = require(obj, path, key);
    if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
    return v.get<bool>();
}

DistributionSpec parse_spec(const json& obj, const std::string& path) {
    require_keys(obj, path,
                 {"family", "alpha", "beta", "meanlog", "sdlog", "mean", "sd", "lo", "hi",
                  "value", "interval"});
    DistFamily family;
    try {
        family = dist_family_from_string(get_string(obj, path, "family"));
    } catch (const std::exception& e) {
        throw ConfigError(path + ".family: " + e.what());
    }
    try {
        if (obj.contains("interval")) {
            const json& iv = obj.at("interval");
            if (!iv.is_array() || iv.size() != 2)
                throw ConfigError(path + ".interval: expected [lb, ub]");
            return fit_from_interval(family, iv.at(0).get<double>(), iv.at(1).get<double>());
        }
        switch (family) {
            case DistFamily::beta:
                return DistributionSpec::make_beta(get_number(obj, path, "alpha"),
                                                   get_number(obj, path, "beta"));
            case DistFamily::lognormal:
                return DistributionSpec::make_lognormal(get_number(obj, path, "meanlog"),
                                                        get_number(obj, path, "sdlog"));
            case DistFamily::normal:
                return DistributionSpec::make_normal(get_number(obj, path, "mean"),
                                                     get_number(obj, path, "sd"));
            case DistFamily::uniform:
                return DistributionSpec::make_uniform(get_number(obj, path, "lo"),
                                                      get_number(obj, path, "hi"));
            case DistFamily::fixed:
                return DistributionSpec::make_fixed(get_number(obj, path, "value"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + ": unsupported family");
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::vector<double> RunConfig::wtp_grid() const {
    std::vector<double> grid;
    for (double w = wtp_lo; w <= wtp_hi + 1e-9; w += wtp_step) grid.push_back(w);
    return grid;
}

LifeTable RunConfig::load_life_table() const { return LifeTable::from_csv(life_table_path); }

NhFixed RunConfig::nh_fixed(const LifeTable& lt) const {
    NhFixed f;
    f.lam7 = lam7;
    f.lam8 = lam8;
    f.life_table = &lt;
    f.age_max = age_max;
    return f;
}

RunConfig RunConfig::load(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    require_keys(root, "config", {"model", "priors", "targets", "imis", "cea", "psa", "seeds"});

    RunConfig cfg;

    const json& model = require(root, "config", "model");
    require_keys(model, "model", {"lam7", "lam8", "life_table", "age_max"});
    cfg.lam7 = get_number(model, "model", "lam7");
    cfg.lam8 = get_number(model, "model", "lam8");
    cfg.age_max = static_cast<int>(get_integer(model, "model", "age_max"));
    {
        std::filesystem::path lt(get_string(model, "model", "life_table"));
        if (lt.is_relative()) lt = std::filesystem::path(path).parent_path() / lt;
        cfg.life_table_path = lt.string();
        if (!std::filesystem::exists(cfg.life_table_path))
            throw ConfigError("model.life_table: file not found: " + cfg.life_table_path);
    }
    if (cfg.age_max < 51 || cfg.age_max > 120)
        throw ConfigError("model.age_max: expected a value in [51, 120]");

    const json& priors = require(root, "config", "priors");
    const auto& names = NaturalHistoryParams::calibrated_names();
    require_keys(priors, "priors", std::set<std::string>(names.begin(), names.end()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string p = std::string("priors.") + names[i];
        cfg.priors.dists[i] = parse_spec(require(priors, "priors", names[i]), p);
        // Table-1 convention: beta priors for the two probabilities,
        // positive-support priors for the rates.
        const DistFamily fam = cfg.priors.dists[i].family;
        if (i < 2 && fam != DistFamily::beta && fam != DistFamily::uniform)
            throw ConfigError(p + ": probability parameters take a beta (or uniform) prior");
        if (i >= 2 && fam == DistFamily::normal)
            throw ConfigError(p + ": rate parameters need a positive-support prior");
    }
    try {
        cfg.priors.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("priors: ") + e.what());
    }

    const json& targets = require(root, "config", "targets");
    require_keys(targets, "targets",
                 {"adenoma_ages", "incidence_bins", "reps", "n_adenoma", "n_cancer", "se_mode",
                  "true_params"});
    cfg.bins.adenoma_ages.clear();
    for (const auto& a : require(targets, "targets", "adenoma_ages"))
        cfg.bins.adenoma_ages.push_back(a.get<int>());
    cfg.bins.incidence_bins.clear();
    for (const auto& b : require(targets, "targets", "incidence_bins")) {
        if (!b.is_array() || b.size() != 2)
            throw ConfigError("targets.incidence_bins: expected [lo, hi] pairs");
        cfg.bins.incidence_bins.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
    }
    cfg.reps = static_cast<int>(get_integer(targets, "targets", "reps"));
    cfg.n_adenoma = get_integer(targets, "targets", "n_adenoma");
    cfg.n_cancer = get_integer(targets, "targets", "n_cancer");
    try {
        cfg.se_mode = se_mode_from_string(get_string(targets, "targets", "se_mode"));
        cfg.bins.validate(50, cfg.age_max);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("targets: ") + e.what());
    }
    {
        const json& tp = require(targets, "targets", "true_params");
        require_keys(tp, "targets.true_params", std::set<std::string>(names.begin(), names.end()));
        std::array<double, 9> theta{};
        for (std::size_t i = 0; i < names.size(); ++i)
            theta[i] = get_number(tp, "targets.true_params", names[i]);
        cfg.true_params.set_calibrated(theta);
        cfg.true_params.lam7 = cfg.lam7;
        cfg.true_params.lam8 = cfg.lam8;
        try {
            cfg.true_params.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("targets.true_params: ") + e.what());
        }
    }

    const json& imis = require(root, "config", "imis");
    require_keys(imis, "imis",
                 {"n0", "b", "j", "max_iterations", "stop_fraction", "n_lik", "transform_params",
                  "noise_adjusted_likelihood", "proposal_cov_scale"});
    cfg.imis.n0 = static_cast<int>(get_integer(imis, "imis", "n0"));
    cfg.imis.b = static_cast<int>(get_integer(imis, "imis", "b"));
    cfg.imis.j = static_cast<int>(get_integer(imis, "imis", "j"));
    cfg.imis.max_iterations = static_cast<int>(get_integer(imis, "imis", "max_iterations"));
    cfg.imis.stop_fraction = get_number(imis, "imis", "stop_fraction");
    cfg.imis.n_lik = get_integer(imis, "imis", "n_lik");
    cfg.imis.transform_params = get_bool(imis, "imis", "transform_params", true);
    cfg.imis.noise_adjusted_likelihood =
        get_bool(imis, "imis", "noise_adjusted_likelihood", true);
    if (imis.contains("proposal_cov_scale"))
        cfg.imis.proposal_cov_scale = get_number(imis, "imis", "proposal_cov_scale");
    try {
        cfg.imis.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("imis: ") + e.what());
    }

    const json& cea = require(root, "config", "cea");
    require_keys(cea, "cea",
                 {"sens_small", "spec", "sens_large_crc", "hr_low", "hr_high",
                  "cost_colonoscopy", "cost_early_annual", "cost_late_annual", "u_preclinical",
                  "u_clin_early", "u_clin_late", "discount_rate", "fp_effect", "strategy"});
    cfg.externals.sens_small = parse_spec(require(cea, "cea", "sens_small"), "cea.sens_small");
    cfg.externals.spec = parse_spec(require(cea, "cea", "spec"), "cea.spec");
    cfg.externals.sens_large_crc =
        parse_spec(require(cea, "cea", "sens_large_crc"), "cea.sens_large_crc");
    cfg.externals.hr_low = parse_spec(require(cea, "cea", "hr_low"), "cea.hr_low");
    cfg.externals.hr_high = parse_spec(require(cea, "cea", "hr_high"), "cea.hr_high");
    cfg.externals.cost_colonoscopy =
        parse_spec(require(cea, "cea", "cost_colonoscopy"), "cea.cost_colonoscopy");
    cfg.externals.cost_early_annual =
        parse_spec(require(cea, "cea", "cost_early_annual"), "cea.cost_early_annual");
    cfg.externals.cost_late_annual =
        parse_spec(require(cea, "cea", "cost_late_annual"), "cea.cost_late_annual");
    cfg.externals.u_preclinical =
        parse_spec(require(cea, "cea", "u_preclinical"), "cea.u_preclinical");
    cfg.externals.u_clin_early = parse_spec(require(cea, "cea", "u_clin_early"), "cea.u_clin_early");
    cfg.externals.u_clin_late = parse_spec(require(cea, "cea", "u_clin_late"), "cea.u_clin_late");
    cfg.externals.discount_rate = get_number(cea, "cea", "discount_rate");
    {
        const std::string fp = get_string(cea, "cea", "fp_effect");
        if (fp == "surveillance")
            cfg.strategy.fp_effect = FpEffect::surveillance;
        else if (fp == "none")
            cfg.strategy.fp_effect = FpEffect::none;
        else
            throw ConfigError("cea.fp_effect: expected 'surveillance' or 'none'");
    }
    {
        const json& st = require(cea, "cea", "strategy");
        require_keys(st, "cea.strategy",
                     {"start_age", "stop_age", "routine_interval", "surveillance_low",
                      "surveillance_high"});
        cfg.strategy.kind = StrategyKind::colonoscopy;
        cfg.strategy.start_age = static_cast<int>(get_integer(st, "cea.strategy", "start_age"));
        cfg.strategy.stop_age = static_cast<int>(get_integer(st, "cea.strategy", "stop_age"));
        cfg.strategy.routine_interval =
            static_cast<int>(get_integer(st, "cea.strategy", "routine_interval"));
        cfg.strategy.surveillance_low =
            static_cast<int>(get_integer(st, "cea.strategy", "surveillance_low"));
        cfg.strategy.surveillance_high =
            static_cast<int>(get_integer(st, "cea.strategy", "surveillance_high"));
        try {
            cfg.strategy.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("cea.strategy: ") + e.what());
        }
    }

    const json& psa = require(root, "config", "psa");
    require_keys(psa, "psa", {"approaches", "n_draws", "n_individuals", "wtp"});
    for (const auto& a : require(psa, "psa", "approaches")) {
        try {
            cfg.approaches.push_back(approach_from_string(a.get<std::string>()));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("psa.approaches: ") + e.what());
        }
    }
    cfg.psa_n_draws = static_cast<int>(get_integer(psa, "psa", "n_draws"));
    cfg.psa_n_individuals = get_integer(psa, "psa", "n_individuals");
    {
        const json& wtp = require(psa, "psa", "wtp");
        require_keys(wtp, "psa.wtp", {"lo", "hi", "step"});
        cfg.wtp_lo = get_number(wtp, "psa.wtp", "lo");
        cfg.wtp_hi = get_number(wtp, "psa.wtp", "hi");
        cfg.wtp_step = get_number(wtp, "psa.wtp", "step");
        if (!(cfg.wtp_step > 0.0) || cfg.wtp_hi < cfg.wtp_lo)
            throw ConfigError("psa.wtp: need lo <= hi and step > 0");
    }
    if (cfg.psa_n_draws < 2) throw ConfigError("psa.n_draws: must be >= 2");
    if (cfg.psa_n_individuals < 1) throw ConfigError("psa.n_individuals: must be >= 1");

    const json& seeds = require(root, "config", "seeds");
    require_keys(seeds, "seeds", {"master_seed"});
    cfg.master_seed = static_cast<std::uint64_t>(get_integer(seeds, "seeds", "master_seed"));
    if (seed_override) cfg.master_seed = *seed_override;
    cfg.imis.master_seed = cfg.master_seed;

    json effective = root;
    effective["seeds"]["master_seed"] = cfg.master_seed;
    cfg.config_hash = fnv1a64(effective.dump());
    return cfg;
}

}  // namespace crcsim
