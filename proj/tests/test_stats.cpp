#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "crcsim/distributions.hpp"
#include "crcsim/imis.hpp"
#include "crcsim/mvn.hpp"
#include "crcsim/special_functions.hpp"

using namespace crcsim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Simpson quadrature of the density over its effective support.
double integrate_density(const DistributionSpec& d) {
    double lo, hi;
    switch (d.family) {
        case DistFamily::beta:
            lo = 1e-9;
            hi = 1.0 - 1e-9;
            break;
        case DistFamily::uniform:
            lo = d.a;
            hi = d.b;
            break;
        default:
            lo = d.quantile(1e-10);
            hi = d.quantile(1.0 - 1e-10);
    }
    const int n = 20000;  // even
    const double h = (hi - lo) / n;
    double acc = d.pdf(lo) + d.pdf(hi);
    for (int i = 1; i < n; ++i) acc += d.pdf(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    for (double p : {1e-8, 1e-3, 0.12, 0.5, 0.77, 0.999, 1.0 - 1e-9})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
}

TEST_CASE("incomplete beta and its inverse") {
    // I_x(1,1) = x
    CHECK(inc_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    // symmetric case I_0.5(a,a) = 0.5
    CHECK(inc_beta(4.2, 4.2, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    for (double p : {0.001, 0.025, 0.4, 0.5, 0.975, 0.999})
        CHECK(inc_beta(3.0, 8.0, inc_beta_inv(3.0, 8.0, p)) == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("distribution moments") {
    const auto beta = DistributionSpec::make_beta(3.0, 8.0);
    CHECK(beta.mean() == doctest::Approx(3.0 / 11.0).epsilon(1e-12));

    const auto ln = DistributionSpec::make_lognormal(-3.45, 0.59);
    CHECK(ln.quantile(0.5) == doctest::Approx(std::exp(-3.45)).epsilon(1e-9));
    CHECK(ln.quantile(0.5) == doctest::Approx(0.0317).epsilon(1e-3));

    const auto uni = DistributionSpec::make_uniform(2.0, 6.0);
    CHECK(uni.mean() == doctest::Approx(4.0));
    CHECK(uni.sd() == doctest::Approx(4.0 / std::sqrt(12.0)));
}

TEST_CASE("quantile-cdf inverse property on a grid") {
    const DistributionSpec specs[] = {
        DistributionSpec::make_beta(3.0, 8.0),
        DistributionSpec::make_lognormal(-1.41, 0.10),
        DistributionSpec::make_normal(2.0, 0.5),
        DistributionSpec::make_uniform(-1.0, 4.0),
    };
    for (const auto& d : specs)
        for (double p = 0.02; p < 1.0; p += 0.07)
            CHECK(d.cdf(d.quantile(p)) == doctest::Approx(p).epsilon(1e-8));
}

TEST_CASE("densities integrate to one") {
    const DistributionSpec specs[] = {
        DistributionSpec::make_beta(3.0, 8.0),
        DistributionSpec::make_beta(6.0, 3.0),
        DistributionSpec::make_lognormal(-11.97, 0.59),
        DistributionSpec::make_normal(0.0, 2.0),
        DistributionSpec::make_uniform(0.25, 0.75),
    };
    for (const auto& d : specs) CHECK(integrate_density(d) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("out-of-support densities are zero") {
    const auto beta = DistributionSpec::make_beta(3.0, 8.0);
    CHECK(beta.log_pdf(-0.1) == -kInf);
    CHECK(beta.log_pdf(1.2) == -kInf);
    CHECK(beta.pdf(1.2) == 0.0);
    const auto ln = DistributionSpec::make_lognormal(0.0, 1.0);
    CHECK(ln.log_pdf(0.0) == -kInf);
    CHECK(ln.log_pdf(-3.0) == -kInf);
}

TEST_CASE("fit_from_interval closed forms") {
    const auto ln = fit_from_interval(DistFamily::lognormal, 1.0, 3.0);
    CHECK(ln.a == doctest::Approx(0.5493).epsilon(1e-3));
    CHECK(ln.b == doctest::Approx(0.2803).epsilon(1e-3));

    const auto std_ln =
        fit_from_interval(DistFamily::lognormal, std::exp(-1.96), std::exp(1.96));
    CHECK(std_ln.a == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std_ln.b == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("fit_from_interval round-trips the interval") {
    struct Case {
        DistFamily family;
        double lb, ub;
    } cases[] = {
        {DistFamily::beta, 0.734, 0.808},
        {DistFamily::beta, 0.855, 0.880},
        {DistFamily::beta, 0.920, 0.990},
        {DistFamily::lognormal, 9000.0, 11000.0},
        {DistFamily::lognormal, 0.98, 1.0},
        {DistFamily::normal, -2.0, 5.0},
    };
    for (const auto& c : cases) {
        const auto d = fit_from_interval(c.family, c.lb, c.ub);
        CHECK(d.quantile(0.025) == doctest::Approx(c.lb).epsilon(1e-4));
        CHECK(d.quantile(0.975) == doctest::Approx(c.ub).epsilon(1e-4));
    }
    // the beta contract is tighter: both quantiles within 1e-6
    const auto b = fit_from_interval(DistFamily::beta, 0.734, 0.808);
    CHECK(std::fabs(b.quantile(0.025) - 0.734) < 1e-6);
    CHECK(std::fabs(b.quantile(0.975) - 0.808) < 1e-6);
}

TEST_CASE("fit_from_interval rejects infeasible input") {
    CHECK_THROWS_AS(fit_from_interval(DistFamily::beta, 0.5, 1.5), std::domain_error);
    CHECK_THROWS_AS(fit_from_interval(DistFamily::lognormal, -1.0, 2.0), std::domain_error);
    CHECK_THROWS_AS(fit_from_interval(DistFamily::fixed, 0.0, 1.0), std::domain_error);
}

TEST_CASE("fit_from_moments closed forms") {
    const auto ln = fit_from_moments(DistFamily::lognormal, 0.035, 0.002);
    CHECK(ln.a == doctest::Approx(-3.3540).epsilon(1e-4));
    CHECK(ln.b == doctest::Approx(0.0571).epsilon(1e-3));
    CHECK(ln.mean() == doctest::Approx(0.035).epsilon(1e-12));
    CHECK(ln.sd() == doctest::Approx(0.002).epsilon(1e-12));

    const auto beta = fit_from_moments(DistFamily::beta, 0.25, 0.05);
    CHECK(beta.mean() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(beta.sd() == doctest::Approx(0.05).epsilon(1e-12));

    CHECK_THROWS_AS(fit_from_moments(DistFamily::beta, 0.5, 1e-7), std::domain_error);
    CHECK_THROWS_AS(fit_from_moments(DistFamily::beta, 0.5, 0.6), std::domain_error);
}

TEST_CASE("fit_from_moments Monte Carlo round trip") {
    const auto d = fit_from_moments(DistFamily::lognormal, 2.5, 0.7);
    RngStream stream(StreamKey::derive(7, "mc", 0, 0));
    const int n = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = d.sample(stream);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(mean == doctest::Approx(2.5).epsilon(0.01));
    CHECK(sd == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("prior log density") {
    PriorSet priors;
    priors.dists = {DistributionSpec::make_beta(3, 8),
                    DistributionSpec::make_beta(6, 3),
                    DistributionSpec::make_lognormal(-11.97, 0.59),
                    DistributionSpec::make_lognormal(1.04, 0.18),
                    DistributionSpec::make_lognormal(-3.45, 0.59),
                    DistributionSpec::make_lognormal(-3.91, 0.35),
                    DistributionSpec::make_lognormal(-1.15, 0.23),
                    DistributionSpec::make_lognormal(-1.41, 0.10),
                    DistributionSpec::make_lognormal(-0.78, 0.22)};
    priors.validate();

    const std::array<double, 9> truth = {0.25, 0.71, 2.86e-6, 2.78, 0.0346,
                                         0.0215, 0.3697, 0.2382, 0.4582};
    const double lp = prior_log_density(truth, priors);
    CHECK(std::isfinite(lp));
    CHECK(prior_log_density(truth, priors) == lp);  // reproducible bit-for-bit

    // out of support
    auto bad = truth;
    bad[0] = 1.2;
    CHECK(prior_log_density(bad, priors) == -kInf);

    // finite local maximum along each axis at a high-density point
    std::array<double, 9> mode{};
    for (int i = 0; i < 9; ++i) mode[i] = priors.dists[i].quantile(0.5);
    const double at_mode = prior_log_density(mode, priors);
    for (int i = 0; i < 9; ++i) {
        auto lo = mode, hi = mode;
        lo[i] = priors.dists[i].quantile(0.05);
        hi[i] = priors.dists[i].quantile(0.95);
        CHECK(at_mode > prior_log_density(lo, priors));
        CHECK(at_mode > prior_log_density(hi, priors));
    }
}

TEST_CASE("mvn log density") {
    const int d = 3;
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(d, 1.5);
    const auto mvn = MvNormal::from_moments(mean, Eigen::MatrixXd::Identity(d, d));
    CHECK(mvn.log_pdf(mean) == doctest::Approx(-0.5 * d * std::log(2 * M_PI)).epsilon(1e-12));

    // one dimension reduces to the scalar normal density
    const auto m1 = MvNormal::from_moments(Eigen::VectorXd::Constant(1, 0.4),
                                           Eigen::MatrixXd::Constant(1, 1, 2.25));
    CHECK(m1.log_pdf(Eigen::VectorXd::Constant(1, 1.9)) ==
          doctest::Approx(normal_log_pdf(1.9, 0.4, 1.5)).epsilon(1e-12));
}

TEST_CASE("mvn sampling covariance") {
    Eigen::MatrixXd cov(2, 2);
    cov << 2.0, 0.7, 0.7, 1.0;
    Eigen::VectorXd mean(2);
    mean << -1.0, 3.0;
    const auto mvn = MvNormal::from_moments(mean, cov);

    RngStream stream(StreamKey::derive(11, "mvn", 0, 0));
    const int n = 100000;
    Eigen::MatrixXd draws(n, 2);
    for (int i = 0; i < n; ++i) draws.row(i) = mvn.sample(stream).transpose();
    const Eigen::RowVectorXd m = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - m;
    const Eigen::MatrixXd sample_cov = centered.transpose() * centered / (n - 1.0);
    CHECK((sample_cov - cov).norm() / cov.norm() < 0.05);
}

TEST_CASE("mvn jitter handles a singular covariance") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 1.0, 1.0, 1.0;  // rank 1
    const auto mvn = MvNormal::from_moments(Eigen::VectorXd::Zero(2), cov);
    CHECK(std::isfinite(mvn.log_pdf(Eigen::VectorXd::Zero(2))));
    CHECK_THROWS(MvNormal::from_moments(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)));
}

TEST_CASE("effective sample size") {
    CHECK(ess({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(4.0));
    CHECK(ess({0.5, 0.25, 0.25}) == doctest::Approx(1.0 / 0.375).epsilon(1e-12));
    CHECK(ess({1.0, 0.0, 0.0}) == doctest::Approx(1.0));
    CHECK_THROWS(ess({0.0, 0.0}));

    // ess stays in [1, n] for arbitrary normalized weights
    RngStream stream(StreamKey::derive(3, "ess", 0, 0));
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> w(20);
        double sum = 0.0;
        for (auto& x : w) {
            x = stream.uniform();
            sum += x;
        }
        for (auto& x : w) x /= sum;
        const double e = ess(w);
        CHECK(e >= 1.0);
        CHECK(e <= 20.0 + 1e-9);
    }
}

TEST_CASE("weighted covariance matches unweighted under uniform weights") {
    RngStream stream(StreamKey::derive(5, "wc", 0, 0));
    const int n = 200;
    Eigen::MatrixXd pts(n, 3);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) pts(i, c) = stream.normal() * (c + 1.0);
    const std::vector<double> w(n, 1.0 / n);
    const Eigen::MatrixXd wc = weighted_covariance(pts, w);

    const Eigen::RowVectorXd m = pts.colwise().mean();
    const Eigen::MatrixXd centered = pts.rowwise() - m;
    const Eigen::MatrixXd sc = centered.transpose() * centered / static_cast<double>(n);
    CHECK((wc - sc).norm() < 1e-10);
}

TEST_CASE("nearest neighbors ranks by Mahalanobis distance") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0.0, 0.0,  //
        3.0, 0.0,     //
        0.0, 1.5,     //
        10.0, 10.0;
    Eigen::MatrixXd metric(2, 2);
    metric << 100.0, 0.0, 0.0, 1.0;  // x-distances are cheap, y expensive
    const auto nb = nearest_neighbors(pts, Eigen::Vector2d(0.0, 0.0), 3, metric);
    REQUIRE(nb.size() == 3);
    CHECK(nb[0] == 0);
    CHECK(nb[1] == 1);  // (3,0) closer than (0,1.5) under the metric
    CHECK(nb[2] == 2);
}

TEST_CASE("stream key determinism and independence") {
    const StreamKey a = StreamKey::derive(42, "unit", 3, 17);
    const StreamKey b = StreamKey::derive(42, "unit", 3, 17);
    const StreamKey c = StreamKey::derive(42, "unit", 3, 18);
    CHECK(a.state == b.state);
    CHECK(a.state != c.state);
    CHECK(a.uniform_at(5) == b.uniform_at(5));
    CHECK(a.uniform_at(5) != c.uniform_at(5));
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform_at(static_cast<std::uint64_t>(i));
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}
