#pragma once

#include <array>
#include <cstddef>

namespace crcsim {

/// The 11 natural-history parameters. The first 9 (p_adeno .. lam6) are the
/// calibrated block theta_u, in the canonical calibration order; lam7/lam8 are
/// external stage-specific CRC mortality rates.
struct NaturalHistoryParams {
    double p_adeno = 0.25;   // adenoma prevalence at age 50
    double p_small = 0.71;   // proportion of adenomas that are small at age 50
    double l = 2.86e-6;      // Weibull scale of the adenoma-onset hazard
    double gamma = 2.78;     // Weibull shape
    double lam2 = 0.0346;    // small adenoma -> large adenoma
    double lam3 = 0.0215;    // large adenoma -> preclinical early CRC
    double lam4 = 0.3697;    // preclinical early -> preclinical late
    double lam5 = 0.2382;    // preclinical early -> clinical early (symptomatic)
    double lam6 = 0.4582;    // preclinical late -> clinical late (symptomatic)
    double lam7 = 0.0302;    // CRC mortality, early stage
    double lam8 = 0.2099;    // CRC mortality, late stage

    static constexpr std::size_t kNumCalibrated = 9;
    static constexpr std::size_t kNumTotal = 11;

    // Which of the 11 entries, in declaration order, belong to theta_u.
    static constexpr std::array<bool, kNumTotal> calibrated_mask = {
        true, true, true, true, true, true, true, true, true, false, false};

    static const std::array<const char*, kNumCalibrated>& calibrated_names();

    std::array<double, kNumCalibrated> calibrated() const {
        return {p_adeno, p_small, l, gamma, lam2, lam3, lam4, lam5, lam6};
    }

    void set_calibrated(const std::array<double, kNumCalibrated>& theta) {
        p_adeno = theta[0];
        p_small = theta[1];
        l = theta[2];
        gamma = theta[3];
        lam2 = theta[4];
        lam3 = theta[5];
        lam4 = theta[6];
        lam5 = theta[7];
        lam6 = theta[8];
    }

    /// Throws std::domain_error when a probability leaves (0,1) or a rate,
    /// scale or shape is not strictly positive and finite.
    void validate() const;
};

}  // namespace crcsim
