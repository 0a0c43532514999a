#include "crcsim/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "crcsim/csv.hpp"
#include "crcsim/special_functions.hpp"

namespace crcsim {

namespace {

const std::array<const char*, 9>& param_names() {
    return NaturalHistoryParams::calibrated_names();
}

std::string bin_label(const CalibrationTarget& t) {
    if (t.bin_lo == t.bin_hi) return std::to_string(t.bin_lo);
    return std::to_string(t.bin_lo) + "-" + std::to_string(t.bin_hi);
}

}  // namespace

void write_posterior_artifacts(const PosteriorSample& ps, const PriorSet& priors,
                               const std::string& out_dir, std::uint64_t config_hash) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string prov = provenance_comment(config_hash, ps.master_seed);

    {
        std::vector<std::string> header = {"draw_index"};
        for (const char* n : param_names()) header.push_back(n);
        header.push_back("weight_preresample");
        std::vector<std::vector<std::string>> rows;
        rows.reserve(static_cast<std::size_t>(ps.resample.rows()));
        for (Eigen::Index r = 0; r < ps.resample.rows(); ++r) {
            std::vector<std::string> row = {std::to_string(r)};
            for (int c = 0; c < 9; ++c) row.push_back(format_double(ps.resample(r, c)));
            row.push_back(format_double(
                ps.weights[static_cast<std::size_t>(ps.resample_source[static_cast<std::size_t>(r)])]));
            rows.push_back(std::move(row));
        }
        write_csv((fs::path(out_dir) / "posterior.csv").string(), {prov}, header, rows);
    }

    const PosteriorSummary summary = posterior_summary(ps);
    {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < 9; ++i)
            rows.push_back({param_names()[i], format_double(summary.mean[i]),
                            format_double(summary.sd[i]), format_double(summary.map[i]),
                            format_double(summary.cri_lb[i]), format_double(summary.cri_ub[i])});
        write_csv((fs::path(out_dir) / "posterior_summary.csv").string(), {prov},
                  {"param", "mean", "sd", "map", "cri_lb", "cri_ub"}, rows);
    }
    {
        std::vector<std::string> header = {"param"};
        for (const char* n : param_names()) header.push_back(n);
        std::vector<std::vector<std::string>> rows;
        for (int r = 0; r < 9; ++r) {
            std::vector<std::string> row = {param_names()[static_cast<std::size_t>(r)]};
            for (int c = 0; c < 9; ++c) row.push_back(format_double(summary.correlation(r, c)));
            rows.push_back(std::move(row));
        }
        write_csv((fs::path(out_dir) / "correlation.csv").string(), {prov}, header, rows);
    }
    {
        // Prior vs posterior density curves: analytic prior, histogram posterior.
        constexpr int kCells = 100;
        std::vector<std::vector<std::string>> rows;
        for (int c = 0; c < 9; ++c) {
            const auto& prior = priors.dists[static_cast<std::size_t>(c)];
            const Eigen::VectorXd col = ps.resample.col(c);
            double lo = std::min(prior.quantile(0.001), col.minCoeff());
            double hi = std::max(prior.quantile(0.999), col.maxCoeff());
            if (!(hi > lo)) hi = lo + 1.0;
            const double width = (hi - lo) / kCells;
            std::vector<std::int64_t> counts(kCells, 0);
            for (Eigen::Index r = 0; r < col.size(); ++r) {
                auto cell = static_cast<std::int64_t>((col(r) - lo) / width);
                cell = std::clamp<std::int64_t>(cell, 0, kCells - 1);
                ++counts[static_cast<std::size_t>(cell)];
            }
            for (int k = 0; k < kCells; ++k) {
                const double x = lo + (k + 0.5) * width;
                const double post_density = static_cast<double>(counts[static_cast<std::size_t>(k)]) /
                                            (static_cast<double>(col.size()) * width);
                rows.push_back({param_names()[static_cast<std::size_t>(c)], format_double(x),
                                format_double(prior.pdf(x)), format_double(post_density)});
            }
        }
        write_csv((fs::path(out_dir) / "density_grid.csv").string(), {prov},
                  {"param", "x", "prior_density", "posterior_density"}, rows);
    }
    {
        nlohmann::json diag;
        diag["ess"] = ps.ess_value;
        diag["ess_importance"] = ps.ess_importance;
        diag["unique_count"] = ps.unique_count;
        diag["expected_unique"] = ps.expected_unique;
        diag["iterations"] = ps.iterations_run;
        diag["stopped_early"] = ps.stopped_early;
        diag["n_evaluated"] = ps.log_lik.size();
        diag["n_components"] = ps.components.size();
        diag["j"] = ps.resample.rows();
        diag["seed"] = ps.master_seed;
        diag["config_hash"] = config_hash;
        nlohmann::json map;
        for (std::size_t i = 0; i < 9; ++i) map[param_names()[i]] = ps.map_theta[i];
        diag["map"] = map;
        std::ofstream out(fs::path(out_dir) / "diagnostics.json");
        if (!out) throw std::runtime_error("cannot write diagnostics.json in " + out_dir);
        out << diag.dump(2) << "\n";
    }
}

PosteriorSample read_posterior_artifacts(const std::string& posterior_csv_path) {
    namespace fs = std::filesystem;
    CsvTable csv = read_csv(posterior_csv_path);
    PosteriorSample ps;
    ps.resample.resize(static_cast<Eigen::Index>(csv.rows.size()), 9);
    std::array<int, 9> cols{};
    for (int c = 0; c < 9; ++c)
        cols[static_cast<std::size_t>(c)] = csv.column(param_names()[static_cast<std::size_t>(c)]);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const std::string ctx = posterior_csv_path + " row " + std::to_string(r + 1);
        for (int c = 0; c < 9; ++c)
            ps.resample(static_cast<Eigen::Index>(r), c) =
                parse_double(csv.rows[r][static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])], ctx);
    }

    const fs::path diag_path = fs::path(posterior_csv_path).parent_path() / "diagnostics.json";
    std::ifstream in(diag_path);
    if (!in)
        throw std::runtime_error("cannot open " + diag_path.string() +
                                 " (expected next to the posterior CSV)");
    const nlohmann::json diag = nlohmann::json::parse(in);
    for (std::size_t i = 0; i < 9; ++i)
        ps.map_theta[i] = diag.at("map").at(param_names()[i]).get<double>();
    ps.ess_value = diag.at("ess").get<double>();
    ps.ess_importance = diag.value("ess_importance", 0.0);
    ps.unique_count = diag.at("unique_count").get<int>();
    ps.master_seed = diag.at("seed").get<std::uint64_t>();
    ps.iterations_run = diag.at("iterations").get<int>();
    ps.stopped_early = diag.at("stopped_early").get<bool>();
    return ps;
}

void write_validation_csv(const TargetSet& targets, const PredictiveBands& bands,
                          const std::string& path, std::uint64_t config_hash,
                          std::uint64_t master_seed) {
    const double z = normal_quantile(0.975);
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : targets.targets) {
        std::size_t b = 0;
        const Band* band = nullptr;
        switch (t.type) {
            case TargetType::adenoma_prevalence: {
                band = &bands.adenoma_prevalence;
                const auto& ages = targets.bins.adenoma_ages;
                b = static_cast<std::size_t>(
                    std::find(ages.begin(), ages.end(), t.bin_lo) - ages.begin());
                break;
            }
            case TargetType::proportion_small: {
                band = &bands.proportion_small;
                const auto& ages = targets.bins.adenoma_ages;
                b = static_cast<std::size_t>(
                    std::find(ages.begin(), ages.end(), t.bin_lo) - ages.begin());
                break;
            }
            case TargetType::incidence_early:
            case TargetType::incidence_late: {
                band = t.type == TargetType::incidence_early ? &bands.incidence_early
                                                             : &bands.incidence_late;
                const auto& ib = targets.bins.incidence_bins;
                b = static_cast<std::size_t>(
                    std::find(ib.begin(), ib.end(), std::make_pair(t.bin_lo, t.bin_hi)) -
                    ib.begin());
                break;
            }
        }
        if (b >= band->mean.size())
            throw std::runtime_error("validation: target bin missing from predictive bands");
        rows.push_back({to_string(t.type), bin_label(t), format_double(t.mean),
                        format_double(t.mean - z * t.se), format_double(t.mean + z * t.se),
                        format_double(band->mean[b]), format_double(band->lb[b]),
                        format_double(band->ub[b])});
    }
    write_csv(path, {provenance_comment(config_hash, master_seed)},
              {"target_type", "bin", "target_mean", "target_lb", "target_ub", "pred_mean",
               "pi_lb", "pi_ub"},
              rows);
}

void write_psa_csv(const PsaResult& result, const std::string& path, std::uint64_t config_hash) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.records.size());
    for (const auto& r : result.records)
        rows.push_back({std::to_string(r.draw), to_string(result.approach),
                        format_double(r.cost_none), format_double(r.qaly_none),
                        format_double(r.cost_screen), format_double(r.qaly_screen),
                        format_double(r.d_cost), format_double(r.d_qaly)});
    write_csv(path, {provenance_comment(config_hash, result.master_seed)},
              {"draw", "approach", "cost_none", "qaly_none", "cost_screen", "qaly_screen",
               "d_cost", "d_qaly"},
              rows);
}

PsaResult read_psa_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    const int c_draw = csv.column("draw");
    const int c_app = csv.column("approach");
    const int c_cn = csv.column("cost_none");
    const int c_qn = csv.column("qaly_none");
    const int c_cs = csv.column("cost_screen");
    const int c_qs = csv.column("qaly_screen");
    const int c_dc = csv.column("d_cost");
    const int c_dq = csv.column("d_qaly");
    PsaResult result;
    if (csv.rows.empty()) throw std::runtime_error(path + ": no PSA records");
    result.approach = approach_from_string(csv.rows.front()[static_cast<std::size_t>(c_app)]);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const std::string ctx = path + " row " + std::to_string(i + 1);
        const auto& row = csv.rows[i];
        PsaRecord r;
        r.draw = static_cast<int>(parse_int(row[static_cast<std::size_t>(c_draw)], ctx));
        r.cost_none = parse_double(row[static_cast<std::size_t>(c_cn)], ctx);
        r.qaly_none = parse_double(row[static_cast<std::size_t>(c_qn)], ctx);
        r.cost_screen = parse_double(row[static_cast<std::size_t>(c_cs)], ctx);
        r.qaly_screen = parse_double(row[static_cast<std::size_t>(c_qs)], ctx);
        r.d_cost = parse_double(row[static_cast<std::size_t>(c_dc)], ctx);
        r.d_qaly = parse_double(row[static_cast<std::size_t>(c_dq)], ctx);
        if (approach_from_string(row[static_cast<std::size_t>(c_app)]) != result.approach)
            throw std::runtime_error(ctx + ": mixed approaches in one PSA file");
        result.records.push_back(r);
    }
    return result;
}

void write_psa_reference_csv(const PsaRecord& record, const std::string& path,
                             std::uint64_t config_hash, std::uint64_t master_seed) {
    write_csv(path, {provenance_comment(config_hash, master_seed)},
              {"cost_none", "qaly_none", "cost_screen", "qaly_screen", "d_cost", "d_qaly"},
              {{format_double(record.cost_none), format_double(record.qaly_none),
                format_double(record.cost_screen), format_double(record.qaly_screen),
                format_double(record.d_cost), format_double(record.d_qaly)}});
}

void write_evpi_csv(const EvpiCurve& curve, UncertaintyApproach approach,
                    const std::string& path, std::uint64_t config_hash,
                    std::uint64_t master_seed) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < curve.wtp.size(); ++i)
        rows.push_back({format_double(curve.wtp[i]), format_double(curve.evpi[i]),
                        to_string(approach)});
    write_csv(path, {provenance_comment(config_hash, master_seed)}, {"wtp", "evpi", "approach"},
              rows);
}

void write_evpi_combined_csv(const std::vector<std::pair<UncertaintyApproach, EvpiCurve>>& curves,
                             const std::string& path, std::uint64_t config_hash,
                             std::uint64_t master_seed) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [approach, curve] : curves)
        for (std::size_t i = 0; i < curve.wtp.size(); ++i)
            rows.push_back({format_double(curve.wtp[i]), format_double(curve.evpi[i]),
                            to_string(approach)});
    write_csv(path, {provenance_comment(config_hash, master_seed)}, {"wtp", "evpi", "approach"},
              rows);
}

}  // namespace crcsim
