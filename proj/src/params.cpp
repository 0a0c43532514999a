#include "crcsim/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crcsim {

const std::array<const char*, NaturalHistoryParams::kNumCalibrated>&
NaturalHistoryParams::calibrated_names() {
    static const std::array<const char*, kNumCalibrated> names = {
        "p_adeno", "p_small", "l", "gamma", "lam2", "lam3", "lam4", "lam5", "lam6"};
    return names;
}

void NaturalHistoryParams::validate() const {
    auto check_prob = [](double v, const char* name) {
        if (!std::isfinite(v) || v <= 0.0 || v >= 1.0)
            throw std::domain_error(std::string(name) + " must be in (0,1)");
    };
    auto check_pos = [](double v, const char* name) {
        if (!std::isfinite(v) || v <= 0.0)
            throw std::domain_error(std::string(name) + " must be finite and > 0");
    };
    check_prob(p_adeno, "p_adeno");
    check_prob(p_small, "p_small");
    check_pos(l, "l");
    check_pos(gamma, "gamma");
    check_pos(lam2, "lam2");
    check_pos(lam3, "lam3");
    check_pos(lam4, "lam4");
    check_pos(lam5, "lam5");
    check_pos(lam6, "lam6");
    check_pos(lam7, "lam7");
    check_pos(lam8, "lam8");
}

}  // namespace crcsim
