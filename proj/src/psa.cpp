#include "crcsim/psa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crcsim {

const char* to_string(UncertaintyApproach a) {
    switch (a) {
        case UncertaintyApproach::A1_full: return "A1_full";
        case UncertaintyApproach::A2_map: return "A2_map";
        case UncertaintyApproach::A3_posterior_only: return "A3_posterior_only";
        case UncertaintyApproach::A4_moments_independent: return "A4_moments_independent";
    }
    return "?";
}

UncertaintyApproach approach_from_string(const std::string& s) {
    if (s == "A1_full") return UncertaintyApproach::A1_full;
    if (s == "A2_map") return UncertaintyApproach::A2_map;
    if (s == "A3_posterior_only") return UncertaintyApproach::A3_posterior_only;
    if (s == "A4_moments_independent") return UncertaintyApproach::A4_moments_independent;
    throw std::runtime_error("unknown uncertainty approach '" + s + "'");
}

namespace {

double sample_utility(const DistributionSpec& d, RngStream& stream) {
    double v = d.sample(stream);
    while (v > 1.0) v = d.sample(stream);  // utilities are capped at 1
    return v;
}

}  // namespace

CeaParams ExternalSpecs::sample(RngStream& stream) const {
    CeaParams p;
    p.sens_small = sens_small.sample(stream);
    p.spec = spec.sample(stream);
    p.sens_large_crc = sens_large_crc.sample(stream);
    p.hr_low = hr_low.sample(stream);
    p.hr_high = hr_high.sample(stream);
    p.cost_colonoscopy = cost_colonoscopy.sample(stream);
    p.cost_early_annual = cost_early_annual.sample(stream);
    p.cost_late_annual = cost_late_annual.sample(stream);
    p.u_preclinical = sample_utility(u_preclinical, stream);
    p.u_clin_early = sample_utility(u_clin_early, stream);
    p.u_clin_late = sample_utility(u_clin_late, stream);
    p.discount_rate = discount_rate;
    p.validate();
    return p;
}

CeaParams ExternalSpecs::means() const {
    CeaParams p;
    p.sens_small = sens_small.mean();
    p.spec = spec.mean();
    p.sens_large_crc = sens_large_crc.mean();
    p.hr_low = hr_low.mean();
    p.hr_high = hr_high.mean();
    p.cost_colonoscopy = cost_colonoscopy.mean();
    p.cost_early_annual = cost_early_annual.mean();
    p.cost_late_annual = cost_late_annual.mean();
    p.u_preclinical = std::min(1.0, u_preclinical.mean());
    p.u_clin_early = std::min(1.0, u_clin_early.mean());
    p.u_clin_late = std::min(1.0, u_clin_late.mean());
    p.discount_rate = discount_rate;
    p.validate();
    return p;
}

std::vector<PsaDraw> build_draws(UncertaintyApproach approach, const PosteriorSample& posterior,
                                 const ExternalSpecs& externals, int n_draws,
                                 std::uint64_t master_seed, const NhFixed& fixed) {
    if (n_draws < 1) throw std::invalid_argument("build_draws: n_draws must be >= 1");
    const auto j = posterior.resample.rows();
    if (j < 1) throw std::invalid_argument("build_draws: empty posterior resample");

    // A4: independent per-parameter fits to the posterior marginal moments;
    // probabilities get a beta, rates a lognormal.
    std::array<DistributionSpec, 9> moment_fits{};
    if (approach == UncertaintyApproach::A4_moments_independent) {
        for (int c = 0; c < 9; ++c) {
            const Eigen::VectorXd col = posterior.resample.col(c);
            const double mean = col.mean();
            const double sd = std::sqrt((col.array() - mean).square().sum() /
                                        std::max<double>(1.0, static_cast<double>(j - 1)));
            const DistFamily family = c < 2 ? DistFamily::beta : DistFamily::lognormal;
            try {
                moment_fits[static_cast<std::size_t>(c)] = fit_from_moments(family, mean, sd);
            } catch (const std::exception& e) {
                throw std::runtime_error(std::string("build_draws(A4): cannot fit ") +
                                         NaturalHistoryParams::calibrated_names()[static_cast<std::size_t>(c)] +
                                         ": " + e.what());
            }
        }
    }

    const CeaParams external_means = externals.means();
    std::vector<PsaDraw> draws(static_cast<std::size_t>(n_draws));
    for (int d = 0; d < n_draws; ++d) {
        PsaDraw& out = draws[static_cast<std::size_t>(d)];
        RngStream calib_stream(
            StreamKey::derive(master_seed, "psa-calib", static_cast<std::uint64_t>(d), 0));
        RngStream external_stream(
            StreamKey::derive(master_seed, "psa-external", static_cast<std::uint64_t>(d), 0));

        std::array<double, 9> theta{};
        switch (approach) {
            case UncertaintyApproach::A1_full:
            case UncertaintyApproach::A3_posterior_only: {
                const auto row = static_cast<Eigen::Index>(
                    std::min<double>(static_cast<double>(j) - 1.0,
                                     std::floor(calib_stream.uniform() * static_cast<double>(j))));
                for (int c = 0; c < 9; ++c)
                    theta[static_cast<std::size_t>(c)] = posterior.resample(row, c);
                break;
            }
            case UncertaintyApproach::A2_map:
                theta = posterior.map_theta;
                break;
            case UncertaintyApproach::A4_moments_independent:
                for (int c = 0; c < 9; ++c)
                    theta[static_cast<std::size_t>(c)] =
                        moment_fits[static_cast<std::size_t>(c)].sample(calib_stream);
                break;
        }
        out.nh.set_calibrated(theta);
        out.nh.lam7 = fixed.lam7;
        out.nh.lam8 = fixed.lam8;

        out.cea = approach == UncertaintyApproach::A3_posterior_only
                      ? external_means
                      : externals.sample(external_stream);
    }
    return draws;
}

PsaResult run_psa(const std::vector<PsaDraw>& draws, UncertaintyApproach approach,
                  const ScreeningStrategy& strat, const LifeTable& life_table,
                  std::int64_t n_individuals, std::uint64_t master_seed, int age_max,
                  const Executor& exec) {
    if (draws.empty()) throw std::invalid_argument("run_psa: no draws");
    const std::uint64_t nh_seed = StreamKey::derive(master_seed, "psa-nh", 0, 0).state;

    ScreeningStrategy none = strat;
    none.kind = StrategyKind::none;

    PsaResult result;
    result.approach = approach;
    result.n_individuals = n_individuals;
    result.master_seed = master_seed;
    result.records.resize(draws.size());

    exec.run_blocks(static_cast<std::int64_t>(draws.size()), 1,
                    [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t d = lo; d < hi; ++d) {
            const PsaDraw& draw = draws[static_cast<std::size_t>(d)];
            try {
                const StrategyOutcome out_none = simulate_strategy(
                    draw.nh, draw.cea, none, life_table, n_individuals, nh_seed,
                    static_cast<std::uint64_t>(d), age_max, Executor::sequential());
                const StrategyOutcome out_screen = simulate_strategy(
                    draw.nh, draw.cea, strat, life_table, n_individuals, nh_seed,
                    static_cast<std::uint64_t>(d), age_max, Executor::sequential());
                PsaRecord& rec = result.records[static_cast<std::size_t>(d)];
                rec.draw = static_cast<int>(d);
                rec.cost_none = out_none.mean_cost;
                rec.qaly_none = out_none.mean_qaly;
                rec.cost_screen = out_screen.mean_cost;
                rec.qaly_screen = out_screen.mean_qaly;
                const auto [dc, dq] = incremental(out_screen, out_none);
                rec.d_cost = dc;
                rec.d_qaly = dq;
            } catch (const std::exception& e) {
                throw std::runtime_error("run_psa: draw " + std::to_string(d) +
                                         " failed: " + e.what());
            }
        }
    });
    return result;
}

PsaRecord map_reference_record(const PosteriorSample& posterior, const ExternalSpecs& externals,
                               const ScreeningStrategy& strat, const NhFixed& fixed,
                               std::int64_t n_individuals, std::uint64_t master_seed,
                               const Executor& exec) {
    std::vector<PsaDraw> one(1);
    one[0].nh.set_calibrated(posterior.map_theta);
    one[0].nh.lam7 = fixed.lam7;
    one[0].nh.lam8 = fixed.lam8;
    one[0].cea = externals.means();
    const PsaResult r = run_psa(one, UncertaintyApproach::A2_map, strat, *fixed.life_table,
                                n_individuals, master_seed, fixed.age_max, exec);
    return r.records.front();
}

EvpiCurve evpi_curve(const PsaResult& psa, const std::vector<double>& wtp_grid) {
    if (wtp_grid.empty()) throw std::invalid_argument("evpi_curve: empty WTP grid");
    for (std::size_t i = 1; i < wtp_grid.size(); ++i)
        if (!(wtp_grid[i] > wtp_grid[i - 1]))
            throw std::invalid_argument("evpi_curve: WTP grid must be ascending");
    if (psa.records.size() < 2) throw std::invalid_argument("evpi_curve: need >= 2 draws");

    EvpiCurve curve;
    curve.wtp = wtp_grid;
    curve.evpi.reserve(wtp_grid.size());
    const double n = static_cast<double>(psa.records.size());
    for (double wtp : wtp_grid) {
        double sum_none = 0.0, sum_screen = 0.0, sum_max = 0.0;
        for (const auto& r : psa.records) {
            const double nmb_none = wtp * r.qaly_none - r.cost_none;
            const double nmb_screen = wtp * r.qaly_screen - r.cost_screen;
            sum_none += nmb_none;
            sum_screen += nmb_screen;
            sum_max += std::max(nmb_none, nmb_screen);
        }
        const double evpi = sum_max / n - std::max(sum_none / n, sum_screen / n);
        curve.evpi.push_back(std::max(0.0, evpi));
    }
    return curve;
}

}  // namespace crcsim
