#include "crcsim/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crcsim {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

double normal_log_pdf(double x, double mean, double sd) {
    if (!(sd > 0.0)) throw std::domain_error("normal_log_pdf: sd must be > 0");
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.9189385332046727418;  // ln sqrt(2*pi)
}

// Acklam's rational approximation, then one Halley step against erfc.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cont_frac(double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-15;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double inc_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("inc_beta: a,b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cont_frac(a, b, x) / a;
    }
    return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double inc_beta_inv(double a, double b, double p) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("inc_beta_inv: a,b must be > 0");
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;

    // Normal-score starting guess (Abramowitz & Stegun 26.5.22).
    double x;
    {
        const double y = normal_quantile(p);
        const double al = 1.0 / (2.0 * a - 1.0);
        const double be = 1.0 / (2.0 * b - 1.0);
        if (a > 1.0 && b > 1.0) {
            const double lam = (y * y - 3.0) / 6.0;
            const double h = 2.0 / (al + be);
            const double w = y * std::sqrt(h + lam) / h -
                             (be - al) * (lam + 5.0 / 6.0 - 2.0 / (3.0 * h));
            x = a / (a + b * std::exp(2.0 * w));
        } else {
            x = a / (a + b);  // mean as fallback
        }
    }
    x = std::min(std::max(x, 1e-12), 1.0 - 1e-12);

    // Safeguarded Newton on I_x(a,b) - p.
    double lo = 0.0, hi = 1.0;
    const double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    for (int it = 0; it < 200; ++it) {
        const double f = inc_beta(a, b, x) - p;
        if (f > 0.0) hi = x; else lo = x;
        const double log_pdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - ln_beta;
        double step = f * std::exp(-log_pdf);
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::fabs(xn - x) < 1e-15 * (1.0 + std::fabs(x))) { x = xn; break; }
        x = xn;
    }
    return x;
}

}  // namespace crcsim
