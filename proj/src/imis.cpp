#include "crcsim/imis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "crcsim/intensity.hpp"

namespace crcsim {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kDim = 9;
}  // namespace

void ImisConfig::validate() const {
    if (b < kDim + 1) throw std::invalid_argument("imis: b must be >= d+1 = 10");
    if (n0 < b) throw std::invalid_argument("imis: n0 must be >= b");
    if (j < 1) throw std::invalid_argument("imis: j must be >= 1");
    if (max_iterations < 0) throw std::invalid_argument("imis: max_iterations must be >= 0");
    if (!(stop_fraction > 0.0 && stop_fraction < 1.0))
        throw std::invalid_argument("imis: stop_fraction must be in (0,1)");
    if (n_lik < 1) throw std::invalid_argument("imis: n_lik must be >= 1");
    if (!(proposal_cov_scale > 0.0))
        throw std::invalid_argument("imis: proposal_cov_scale must be > 0");
}

double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_w) {
    double m = kNegInf;
    for (double lw : log_w) m = std::max(m, lw);
    if (m == kNegInf)
        throw std::runtime_error(
            "importance weights vanished: priors exclude all target-compatible regions");
    double sum = 0.0;
    std::vector<double> w(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        w[i] = std::exp(log_w[i] - m);
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

double expected_unique(const std::vector<double>& weights, int j) {
    double e = 0.0;
    for (double w : weights) {
        if (w >= 1.0)
            e += 1.0;
        else if (w > 0.0)
            e += -std::expm1(static_cast<double>(j) * std::log1p(-w));
    }
    return e;
}

std::vector<int> resample_indices(const std::vector<double>& weights, int j, RngStream& stream) {
    std::vector<double> cum(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cum[i] = acc;
    }
    std::vector<int> idx(static_cast<std::size_t>(j));
    for (int k = 0; k < j; ++k) {
        const double u = stream.uniform() * acc;
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        idx[static_cast<std::size_t>(k)] =
            static_cast<int>(std::min<std::ptrdiff_t>(it - cum.begin(),
                                                      static_cast<std::ptrdiff_t>(cum.size()) - 1));
    }
    return idx;
}

double log_mixture_numerator(double log_prior, const std::vector<MvNormal>& components,
                             const Eigen::VectorXd& eta, int n0, int b) {
    double acc = std::log(static_cast<double>(n0)) + log_prior;
    const double log_b = std::log(static_cast<double>(b));
    for (const auto& c : components) acc = logaddexp(acc, log_b + c.log_pdf(eta));
    return acc;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = p * (static_cast<double>(values.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - std::floor(h);
    return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

// Per-component monotone map between the original parameter scale (theta) and
// the proposal scale (eta), chosen by prior family.
class ParamTransform {
public:
    ParamTransform(const PriorSet& priors, bool enabled)
        : priors_(priors), enabled_(enabled) {}

    double to_eta(double theta, int i) const {
        if (!enabled_) return theta;
        switch (priors_.dists[static_cast<std::size_t>(i)].family) {
            case DistFamily::beta:
                return std::log(theta) - std::log1p(-theta);
            case DistFamily::lognormal:
                return std::log(theta);
            case DistFamily::uniform: {
                const auto& d = priors_.dists[static_cast<std::size_t>(i)];
                const double z = (theta - d.a) / (d.b - d.a);
                return std::log(z) - std::log1p(-z);
            }
            case DistFamily::normal:
            case DistFamily::fixed:
                return theta;
        }
        return theta;
    }

    double to_theta(double eta, int i) const {
        if (!enabled_) return eta;
        switch (priors_.dists[static_cast<std::size_t>(i)].family) {
            case DistFamily::beta:
                return 1.0 / (1.0 + std::exp(-eta));
            case DistFamily::lognormal:
                return std::exp(eta);
            case DistFamily::uniform: {
                const auto& d = priors_.dists[static_cast<std::size_t>(i)];
                return d.a + (d.b - d.a) / (1.0 + std::exp(-eta));
            }
            case DistFamily::normal:
            case DistFamily::fixed:
                return eta;
        }
        return eta;
    }

    // Prior log density on the proposal scale (includes d theta / d eta).
    double log_prior_eta(const Eigen::VectorXd& eta,
                         const std::array<double, kDim>& theta) const {
        double sum = 0.0;
        for (int i = 0; i < kDim; ++i) {
            const auto& d = priors_.dists[static_cast<std::size_t>(i)];
            const double lp = d.log_pdf(theta[static_cast<std::size_t>(i)]);
            if (lp == kNegInf) return kNegInf;
            sum += lp;
            if (!enabled_) continue;
            switch (d.family) {
                case DistFamily::beta: {
                    const double s = 1.0 / (1.0 + std::exp(-eta(i)));
                    sum += std::log(s) + std::log1p(-s);
                    break;
                }
                case DistFamily::lognormal:
                    sum += eta(i);
                    break;
                case DistFamily::uniform: {
                    const double s = 1.0 / (1.0 + std::exp(-eta(i)));
                    sum += std::log(d.b - d.a) + std::log(s) + std::log1p(-s);
                    break;
                }
                case DistFamily::normal:
                case DistFamily::fixed:
                    break;
            }
        }
        return sum;
    }

private:
    const PriorSet& priors_;
    bool enabled_;
};

struct Pool {
    Eigen::MatrixXd eta;    // N x 9
    Eigen::MatrixXd theta;  // N x 9
    std::vector<double> log_lik;
    std::vector<double> log_prior;  // proposal scale
    std::vector<double> log_mix;    // defensive-mixture numerator at each point

    int size() const { return static_cast<int>(log_lik.size()); }
};

void evaluate_batch(Pool& pool, int first, int count, const LogLikelihoodFn& log_lik,
                    const Executor& exec) {
    exec.run_blocks(count, 1, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const int i = first + static_cast<int>(k);
            if (pool.log_prior[static_cast<std::size_t>(i)] == kNegInf) {
                pool.log_lik[static_cast<std::size_t>(i)] = kNegInf;
                continue;
            }
            std::array<double, kDim> th;
            for (int c = 0; c < kDim; ++c) th[static_cast<std::size_t>(c)] = pool.theta(i, c);
            try {
                pool.log_lik[static_cast<std::size_t>(i)] = log_lik(th, i);
            } catch (const std::exception&) {
                // One retry, then abort the run with the point's context.
                try {
                    pool.log_lik[static_cast<std::size_t>(i)] = log_lik(th, i);
                } catch (const std::exception& e2) {
                    throw std::runtime_error("likelihood evaluation failed twice at point " +
                                             std::to_string(i) + ": " + e2.what());
                }
            }
        }
    });
}

}  // namespace

PosteriorSample imis_calibrate(const PriorSet& priors, const LogLikelihoodFn& log_lik,
                               const ImisConfig& cfg, const Executor& exec) {
    cfg.validate();
    priors.validate();
    const ParamTransform transform(priors, cfg.transform_params);

    Pool pool;
    const int capacity = cfg.n0 + cfg.max_iterations * cfg.b;
    pool.eta.resize(capacity, kDim);
    pool.theta.resize(capacity, kDim);
    pool.log_lik.reserve(static_cast<std::size_t>(capacity));
    pool.log_prior.reserve(static_cast<std::size_t>(capacity));
    pool.log_mix.reserve(static_cast<std::size_t>(capacity));

    auto push_point = [&](const Eigen::VectorXd& eta) {
        const int i = pool.size();
        std::array<double, kDim> th;
        for (int c = 0; c < kDim; ++c) {
            th[static_cast<std::size_t>(c)] = transform.to_theta(eta(c), c);
            pool.theta(i, c) = th[static_cast<std::size_t>(c)];
        }
        pool.eta.row(i) = eta.transpose();
        pool.log_prior.push_back(transform.log_prior_eta(eta, th));
        pool.log_lik.push_back(0.0);
        pool.log_mix.push_back(0.0);
        return i;
    };

    // Stage 1: n0 prior draws.
    for (int i = 0; i < cfg.n0; ++i) {
        RngStream stream(StreamKey::derive(cfg.master_seed, "imis-prior",
                                           static_cast<std::uint64_t>(i), 0));
        Eigen::VectorXd eta(kDim);
        for (int c = 0; c < kDim; ++c)
            eta(c) = transform.to_eta(priors.dists[static_cast<std::size_t>(c)].sample(stream), c);
        push_point(eta);
    }
    evaluate_batch(pool, 0, cfg.n0, log_lik, exec);

    // Mahalanobis metric for the neighbourhood search: empirical prior
    // covariance on the proposal scale.
    Eigen::MatrixXd prior_cov;
    {
        const Eigen::MatrixXd init = pool.eta.topRows(cfg.n0);
        const Eigen::RowVectorXd mean = init.colwise().mean();
        const Eigen::MatrixXd centered = init.rowwise() - mean;
        prior_cov = centered.transpose() * centered / static_cast<double>(cfg.n0 - 1);
    }

    std::vector<MvNormal> components;
    const double log_n0 = std::log(static_cast<double>(cfg.n0));
    for (int i = 0; i < cfg.n0; ++i)
        pool.log_mix[static_cast<std::size_t>(i)] =
            log_n0 + pool.log_prior[static_cast<std::size_t>(i)];

    auto current_weights = [&]() {
        std::vector<double> lw(static_cast<std::size_t>(pool.size()));
        for (int i = 0; i < pool.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            // w ~ L * p / q with q = mixture numerator / N; the constant N
            // drops out in normalization.
            lw[k] = pool.log_lik[k] + pool.log_prior[k] - pool.log_mix[k];
        }
        return normalize_log_weights(lw);
    };

    std::vector<double> weights = current_weights();
    double e_unique = expected_unique(weights, cfg.j);
    int iterations = 0;
    bool stopped = e_unique >= cfg.stop_fraction * static_cast<double>(cfg.j);
    if (cfg.progress) cfg.progress(0, e_unique, ess(weights));

    while (!stopped && iterations < cfg.max_iterations) {
        ++iterations;
        const int n = pool.size();

        int center = 0;
        for (int i = 1; i < n; ++i)
            if (weights[static_cast<std::size_t>(i)] > weights[static_cast<std::size_t>(center)])
                center = i;
        const Eigen::VectorXd center_eta = pool.eta.row(center).transpose();

        const auto nb =
            nearest_neighbors(pool.eta.topRows(n), center_eta, cfg.b, prior_cov);
        Eigen::MatrixXd nb_pts(cfg.b, kDim);
        std::vector<double> nb_w(static_cast<std::size_t>(cfg.b));
        const double uniform_w = 1.0 / static_cast<double>(n);
        for (int k = 0; k < cfg.b; ++k) {
            nb_pts.row(k) = pool.eta.row(nb[static_cast<std::size_t>(k)]);
            nb_w[static_cast<std::size_t>(k)] =
                weights[static_cast<std::size_t>(nb[static_cast<std::size_t>(k)])] + uniform_w;
        }
        const Eigen::MatrixXd cov =
            cfg.proposal_cov_scale * weighted_covariance_about(nb_pts, nb_w, center_eta);
        components.push_back(MvNormal::from_moments(center_eta, cov));
        const MvNormal& comp = components.back();

        RngStream prop_stream(StreamKey::derive(cfg.master_seed, "imis-prop",
                                                static_cast<std::uint64_t>(iterations), 0));
        for (int k = 0; k < cfg.b; ++k) push_point(comp.sample(prop_stream));
        evaluate_batch(pool, n, cfg.b, log_lik, exec);

        const double log_b = std::log(static_cast<double>(cfg.b));
        for (int i = 0; i < n; ++i)
            pool.log_mix[static_cast<std::size_t>(i)] =
                logaddexp(pool.log_mix[static_cast<std::size_t>(i)],
                          log_b + comp.log_pdf(pool.eta.row(i).transpose()));
        for (int i = n; i < pool.size(); ++i)
            pool.log_mix[static_cast<std::size_t>(i)] = log_mixture_numerator(
                pool.log_prior[static_cast<std::size_t>(i)], components,
                pool.eta.row(i).transpose(), cfg.n0, cfg.b);

        weights = current_weights();
        e_unique = expected_unique(weights, cfg.j);
        stopped = e_unique >= cfg.stop_fraction * static_cast<double>(cfg.j);
        if (cfg.progress) cfg.progress(iterations, e_unique, ess(weights));
    }

    const int n = pool.size();
    RngStream resample_stream(StreamKey::derive(cfg.master_seed, "imis-resample", 0, 0));
    const std::vector<int> picks = resample_indices(weights, cfg.j, resample_stream);

    PosteriorSample ps;
    ps.resample.resize(cfg.j, kDim);
    ps.resample_source = picks;
    for (int k = 0; k < cfg.j; ++k)
        ps.resample.row(k) = pool.theta.row(picks[static_cast<std::size_t>(k)]);
    ps.evaluated_theta = pool.theta.topRows(n);
    ps.evaluated_eta = pool.eta.topRows(n);
    ps.log_lik = pool.log_lik;
    ps.log_prior_eta = pool.log_prior;
    ps.weights = weights;
    ps.components = components;
    ps.n0 = cfg.n0;
    ps.b = cfg.b;
    ps.ess_importance = ess(weights);
    ps.expected_unique = e_unique;
    {
        std::vector<int> sorted = picks;
        std::sort(sorted.begin(), sorted.end());
        // One pass for both the distinct count and the multiplicity ESS.
        int unique = 0;
        double sum_m2 = 0.0;
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t k = i;
            while (k < sorted.size() && sorted[k] == sorted[i]) ++k;
            const double m = static_cast<double>(k - i);
            sum_m2 += m * m;
            ++unique;
            i = k;
        }
        ps.unique_count = unique;
        ps.ess_value = static_cast<double>(cfg.j) * static_cast<double>(cfg.j) / sum_m2;
    }
    // MAP on the original parameter scale: highest log prior + log likelihood
    // among every evaluated point.
    double best = kNegInf;
    for (int i = 0; i < n; ++i) {
        std::array<double, kDim> th;
        for (int c = 0; c < kDim; ++c) th[static_cast<std::size_t>(c)] = pool.theta(i, c);
        const double lp = prior_log_density(th, priors);
        if (lp == kNegInf) continue;
        const double score = lp + pool.log_lik[static_cast<std::size_t>(i)];
        if (score > best) {
            best = score;
            ps.map_theta = th;
            ps.map_index = i;
        }
    }
    if (ps.map_index < 0) throw std::runtime_error("imis: no evaluated point has finite posterior density");
    ps.iterations_run = iterations;
    ps.stopped_early = stopped;
    ps.master_seed = cfg.master_seed;
    return ps;
}

PosteriorSample calibrate(const PriorSet& priors, const TargetSet& targets,
                          const NhFixed& fixed, const ImisConfig& cfg,
                          const Executor& exec) {
    if (targets.targets.empty()) throw std::invalid_argument("calibrate: empty target set");
    if (fixed.life_table == nullptr) throw std::invalid_argument("calibrate: missing life table");
    const std::uint64_t lik_seed = StreamKey::derive(cfg.master_seed, "imis-lik", 0, 0).state;
    const LifeTable& lt = *fixed.life_table;

    LogLikelihoodFn fn = [&targets, &fixed, &lt, lik_seed, n_lik = cfg.n_lik,
                          noise_adjusted = cfg.noise_adjusted_likelihood](
                             const std::array<double, 9>& theta,
                             std::int64_t point) -> double {
        NaturalHistoryParams p;
        p.set_calibrated(theta);
        p.lam7 = fixed.lam7;
        p.lam8 = fixed.lam8;
        // Reject parameter sets the annual-cycle engine cannot represent.
        if (p.p_adeno >= 0.998) return kNegInf;
        const double peak_hazard = weibull_hazard(p.l, p.gamma, fixed.age_max);
        if (!std::isfinite(peak_hazard) || peak_hazard > 1e12) return kNegInf;
        for (double rate : {p.lam2, p.lam3, p.lam4, p.lam5, p.lam6})
            if (rate > 1e12) return kNegInf;
        const CohortOutputs cohort =
            simulate_cohort(p, lt, n_lik, lik_seed, static_cast<std::uint64_t>(point),
                            fixed.age_max, Executor::sequential());
        const ModelPrediction phi = epi_outputs(cohort, targets.bins);
        return noise_adjusted ? log_likelihood_noise_adjusted(phi, targets)
                              : log_likelihood(phi, targets);
    };
    return imis_calibrate(priors, fn, cfg, exec);
}

PosteriorSummary posterior_summary(const PosteriorSample& ps) {
    PosteriorSummary s;
    const auto j = ps.resample.rows();
    Eigen::VectorXd mean = ps.resample.colwise().mean().transpose();
    Eigen::MatrixXd centered = ps.resample.rowwise() - mean.transpose();
    Eigen::MatrixXd cov =
        centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(j - 1));

    s.correlation.resize(kDim, kDim);
    for (int r = 0; r < kDim; ++r)
        for (int c = 0; c < kDim; ++c) {
            const double denom = std::sqrt(cov(r, r) * cov(c, c));
            s.correlation(r, c) = denom > 0.0 ? cov(r, c) / denom : (r == c ? 1.0 : 0.0);
        }

    for (int c = 0; c < kDim; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        s.mean[ci] = mean(c);
        s.sd[ci] = std::sqrt(cov(c, c));
        s.map[ci] = ps.map_theta[ci];
        std::vector<double> col(static_cast<std::size_t>(j));
        for (Eigen::Index r = 0; r < j; ++r) col[static_cast<std::size_t>(r)] = ps.resample(r, c);
        s.cri_lb[ci] = percentile(col, 0.025);
        s.cri_ub[ci] = percentile(std::move(col), 0.975);
    }
    return s;
}

PredictiveBands posterior_predictive(const PosteriorSample& ps, const NhFixed& fixed,
                                     std::int64_t n_per_draw, const TargetBinSpec& bins,
                                     std::uint64_t master_seed, const Executor& exec) {
    if (n_per_draw < 1) throw std::invalid_argument("posterior_predictive: n_per_draw must be >= 1");
    if (fixed.life_table == nullptr)
        throw std::invalid_argument("posterior_predictive: missing life table");
    const auto j = ps.resample.rows();
    const std::uint64_t seed = StreamKey::derive(master_seed, "postpred", 0, 0).state;

    std::vector<ModelPrediction> phis(static_cast<std::size_t>(j));
    exec.run_blocks(j, 1, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t d = lo; d < hi; ++d) {
            NaturalHistoryParams p;
            std::array<double, kDim> theta;
            for (int c = 0; c < kDim; ++c) theta[static_cast<std::size_t>(c)] = ps.resample(d, c);
            p.set_calibrated(theta);
            p.lam7 = fixed.lam7;
            p.lam8 = fixed.lam8;
            phis[static_cast<std::size_t>(d)] =
                epi_outputs(simulate_cohort(p, *fixed.life_table, n_per_draw, seed,
                                            static_cast<std::uint64_t>(d), fixed.age_max,
                                            Executor::sequential()),
                            bins);
        }
    });

    auto band = [&](auto value_of, auto missing_of, std::size_t count) {
        Band out;
        for (std::size_t b = 0; b < count; ++b) {
            std::vector<double> vals;
            vals.reserve(phis.size());
            for (const auto& phi : phis)
                if (!missing_of(phi, b)) vals.push_back(value_of(phi, b));
            if (vals.empty()) {
                out.mean.push_back(std::numeric_limits<double>::quiet_NaN());
                out.lb.push_back(std::numeric_limits<double>::quiet_NaN());
                out.ub.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double sum = 0.0;
            for (double v : vals) sum += v;
            out.mean.push_back(sum / static_cast<double>(vals.size()));
            out.lb.push_back(percentile(vals, 0.025));
            out.ub.push_back(percentile(std::move(vals), 0.975));
        }
        return out;
    };

    PredictiveBands bands;
    bands.adenoma_prevalence =
        band([](const ModelPrediction& p, std::size_t b) { return p.adenoma_prevalence[b]; },
             [](const ModelPrediction& p, std::size_t b) { return p.adenoma_prevalence_missing[b] != 0; },
             bins.adenoma_ages.size());
    bands.proportion_small =
        band([](const ModelPrediction& p, std::size_t b) { return p.proportion_small[b]; },
             [](const ModelPrediction& p, std::size_t b) { return p.proportion_small_missing[b] != 0; },
             bins.adenoma_ages.size());
    bands.incidence_early =
        band([](const ModelPrediction& p, std::size_t b) { return p.incidence_early[b]; },
             [](const ModelPrediction& p, std::size_t b) { return p.incidence_early_missing[b] != 0; },
             bins.incidence_bins.size());
    bands.incidence_late =
        band([](const ModelPrediction& p, std::size_t b) { return p.incidence_late[b]; },
             [](const ModelPrediction& p, std::size_t b) { return p.incidence_late_missing[b] != 0; },
             bins.incidence_bins.size());
    return bands;
}

}  // namespace crcsim
