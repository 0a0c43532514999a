// crcsim: natural-history microsimulation, Bayesian calibration (IMIS),
// screening cost-effectiveness and value-of-information pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crcsim/artifacts.hpp"
#include "crcsim/config.hpp"
#include "crcsim/csv.hpp"

namespace fs = std::filesystem;
using namespace crcsim;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int workers = 0;  // 0 = hardware concurrency
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    if (needs_config)
        cmd->add_option("--config", args.config_path, "Run configuration file (JSON)")
            ->required();
    cmd->add_option("--out", args.out_dir, "Output directory")->required();
    cmd->add_option("--seed", args.seed, "Override the config master seed");
    cmd->add_option("--workers", args.workers,
                    "Worker threads (default: available cores)");
}

Executor make_executor(const CommonArgs& args) {
    int w = args.workers;
    if (w <= 0) w = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return Executor(w);
}

int cmd_simulate_targets(const CommonArgs& args) {
    const RunConfig cfg = RunConfig::load(args.config_path, args.seed);
    const LifeTable lt = cfg.load_life_table();
    const Executor exec = make_executor(args);

    const TargetSet ts =
        generate_targets(cfg.true_params, lt, cfg.reps, cfg.n_adenoma, cfg.n_cancer, cfg.bins,
                         cfg.master_seed, cfg.se_mode, cfg.age_max, exec);
    fs::create_directories(args.out_dir);
    write_targets(ts, (fs::path(args.out_dir) / "targets.csv").string(), cfg.config_hash);

    std::cout << "wrote " << ts.targets.size() << " targets to " << args.out_dir
              << "/targets.csv\n";
    std::cout << "target_type,bin,mean,se\n";
    for (const auto& t : ts.targets) {
        std::cout << to_string(t.type) << "," << t.bin_lo;
        if (t.bin_hi != t.bin_lo) std::cout << "-" << t.bin_hi;
        std::cout << "," << format_double(t.mean) << "," << format_double(t.se) << "\n";
    }
    return 0;
}

int cmd_calibrate(const CommonArgs& args, const std::string& targets_path) {
    const RunConfig cfg = RunConfig::load(args.config_path, args.seed);
    const LifeTable lt = cfg.load_life_table();
    const Executor exec = make_executor(args);

    const TargetSet ts = read_targets(targets_path);
    ImisConfig imis_cfg = cfg.imis;
    imis_cfg.progress = [&cfg](int iter, double e_unique, double ess_now) {
        std::cerr << "imis iteration " << iter << ": expected_unique="
                  << format_double(e_unique) << " (stop at "
                  << format_double(cfg.imis.stop_fraction * cfg.imis.j) << "), ess="
                  << format_double(ess_now) << "\n";
    };
    const PosteriorSample ps = calibrate(cfg.priors, ts, cfg.nh_fixed(lt), imis_cfg, exec);
    write_posterior_artifacts(ps, cfg.priors, args.out_dir, cfg.config_hash);

    std::cout << "calibration: " << ps.iterations_run << " iterations, "
              << ps.log_lik.size() << " evaluations, "
              << (ps.stopped_early ? "stopping rule reached" : "max iterations hit") << "\n"
              << "ess=" << format_double(ps.ess_value) << " unique=" << ps.unique_count
              << " of j=" << ps.resample.rows() << "\n";
    return 0;
}

int cmd_validate(const CommonArgs& args, const std::string& targets_path,
                 const std::string& posterior_path, std::int64_t n_per_draw) {
    const RunConfig cfg = RunConfig::load(args.config_path, args.seed);
    const LifeTable lt = cfg.load_life_table();
    const Executor exec = make_executor(args);

    const TargetSet ts = read_targets(targets_path);
    const PosteriorSample ps = read_posterior_artifacts(posterior_path);
    if (n_per_draw <= 0) n_per_draw = cfg.psa_n_individuals;

    const PredictiveBands bands =
        posterior_predictive(ps, cfg.nh_fixed(lt), n_per_draw, ts.bins, cfg.master_seed, exec);
    fs::create_directories(args.out_dir);
    const std::string path = (fs::path(args.out_dir) / "validation.csv").string();
    write_validation_csv(ts, bands, path, cfg.config_hash, cfg.master_seed);

    const CsvTable written = read_csv(path);
    int inside = 0;
    const int c_mean = written.column("target_mean");
    const int c_lb = written.column("pi_lb");
    const int c_ub = written.column("pi_ub");
    for (const auto& row : written.rows) {
        const double m = parse_double(row[static_cast<std::size_t>(c_mean)], "validation");
        const double lb = parse_double(row[static_cast<std::size_t>(c_lb)], "validation");
        const double ub = parse_double(row[static_cast<std::size_t>(c_ub)], "validation");
        if (m >= lb && m <= ub) ++inside;
    }
    std::cout << "validation: " << inside << "/" << written.rows.size()
              << " target means inside the 95% posterior predicted interval\n";
    return 0;
}

int cmd_psa(const CommonArgs& args, const std::string& posterior_path) {
    const RunConfig cfg = RunConfig::load(args.config_path, args.seed);
    if (cfg.approaches.empty()) throw ConfigError("psa.approaches: list is empty");
    const LifeTable lt = cfg.load_life_table();
    const Executor exec = make_executor(args);
    const PosteriorSample ps = read_posterior_artifacts(posterior_path);
    const NhFixed fixed = cfg.nh_fixed(lt);

    fs::create_directories(args.out_dir);
    for (UncertaintyApproach a : cfg.approaches) {
        const auto draws =
            build_draws(a, ps, cfg.externals, cfg.psa_n_draws, cfg.master_seed, fixed);
        const PsaResult result = run_psa(draws, a, cfg.strategy, lt, cfg.psa_n_individuals,
                                         cfg.master_seed, cfg.age_max, exec);
        const std::string path =
            (fs::path(args.out_dir) / (std::string("psa_") + to_string(a) + ".csv")).string();
        write_psa_csv(result, path, cfg.config_hash);
        std::cout << "wrote " << path << " (" << result.records.size() << " draws)\n";
    }

    const PsaRecord ref = map_reference_record(ps, cfg.externals, cfg.strategy, fixed,
                                               cfg.psa_n_individuals, cfg.master_seed, exec);
    const std::string ref_path = (fs::path(args.out_dir) / "psa_map_reference.csv").string();
    write_psa_reference_csv(ref, ref_path, cfg.config_hash, cfg.master_seed);
    std::cout << "wrote " << ref_path << " (d_cost=" << format_double(ref.d_cost)
              << ", d_qaly=" << format_double(ref.d_qaly) << ")\n";
    return 0;
}

int cmd_evpi(const CommonArgs& args, const std::vector<std::string>& psa_paths) {
    const RunConfig cfg = RunConfig::load(args.config_path, args.seed);
    if (psa_paths.empty()) throw ConfigError("evpi: no PSA result files given");
    const std::vector<double> grid = cfg.wtp_grid();

    fs::create_directories(args.out_dir);
    std::vector<std::pair<UncertaintyApproach, EvpiCurve>> curves;
    for (const auto& path : psa_paths) {
        const PsaResult psa = read_psa_csv(path);
        EvpiCurve curve = evpi_curve(psa, grid);
        const std::string out =
            (fs::path(args.out_dir) / (std::string("evpi_") + to_string(psa.approach) + ".csv"))
                .string();
        write_evpi_csv(curve, psa.approach, out, cfg.config_hash, cfg.master_seed);
        std::cout << "wrote " << out << "\n";
        curves.emplace_back(psa.approach, std::move(curve));
    }
    write_evpi_combined_csv(curves, (fs::path(args.out_dir) / "evpi_combined.csv").string(),
                            cfg.config_hash, cfg.master_seed);
    std::cout << "wrote " << args.out_dir << "/evpi_combined.csv\n";
    return 0;
}

int cmd_report(const std::string& out_dir) {
    auto show_csv = [&](const std::string& name, const std::string& title) {
        const fs::path p = fs::path(out_dir) / name;
        if (!fs::exists(p)) return;
        std::cout << "== " << title << " (" << p.string() << ")\n";
        std::ifstream in(p);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') std::cout << "  " << line << "\n";
        std::cout << "\n";
    };
    std::cout << "run artifacts in " << out_dir << "\n\n";
    show_csv("targets.csv", "calibration targets");
    const fs::path diag = fs::path(out_dir) / "diagnostics.json";
    if (fs::exists(diag)) {
        std::ifstream in(diag);
        std::cout << "== calibration diagnostics (" << diag.string() << ")\n"
                  << in.rdbuf() << "\n";
    }
    show_csv("posterior_summary.csv", "posterior summary");
    show_csv("validation.csv", "posterior-predictive validation");
    show_csv("psa_map_reference.csv", "incremental outcomes at MAP / mean externals");
    show_csv("evpi_combined.csv", "EVPI curves");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"colorectal-cancer screening microsimulation: calibration, PSA and EVPI"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string targets_path, posterior_path;
    std::int64_t n_per_draw = 0;
    std::vector<std::string> psa_paths;
    std::string report_dir;

    CLI::App* sim = app.add_subcommand("simulate-targets",
                                       "Generate calibration targets by confirmatory simulation");
    add_common(sim, args);

    CLI::App* cal = app.add_subcommand("calibrate", "Bayesian calibration via IMIS");
    add_common(cal, args);
    cal->add_option("--targets", targets_path, "Targets CSV from simulate-targets")->required();

    CLI::App* val = app.add_subcommand("validate",
                                       "Posterior-predictive check against the targets");
    add_common(val, args);
    val->add_option("--targets", targets_path, "Targets CSV")->required();
    val->add_option("--posterior", posterior_path, "posterior.csv from calibrate")->required();
    val->add_option("--n-per-draw", n_per_draw,
                    "Cohort size per posterior draw (default: psa.n_individuals)");

    CLI::App* psa = app.add_subcommand("psa", "Probabilistic sensitivity analysis");
    add_common(psa, args);
    psa->add_option("--posterior", posterior_path, "posterior.csv from calibrate")->required();

    CLI::App* evpi = app.add_subcommand("evpi", "EVPI curves from PSA results");
    add_common(evpi, args);
    evpi->add_option("psa_files", psa_paths, "PSA result CSVs")->required();

    CLI::App* rep = app.add_subcommand("report", "Print a summary of run artifacts");
    rep->add_option("--out", report_dir, "Output directory of previous commands")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate_targets(args);
        if (cal->parsed()) return cmd_calibrate(args, targets_path);
        if (val->parsed()) return cmd_validate(args, targets_path, posterior_path, n_per_draw);
        if (psa->parsed()) return cmd_psa(args, posterior_path);
        if (evpi->parsed()) return cmd_evpi(args, psa_paths);
        if (rep->parsed()) return cmd_report(report_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
