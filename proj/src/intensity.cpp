#include "crcsim/intensity.hpp"

#include <cmath>
#include <stdexcept>

namespace crcsim {

double weibull_hazard(double scale, double shape, double age) {
    if (!std::isfinite(scale) || scale <= 0.0)
        throw std::domain_error("weibull_hazard: scale must be finite and > 0");
    if (!std::isfinite(shape) || shape <= 0.0)
        throw std::domain_error("weibull_hazard: shape must be finite and > 0");
    if (age < 0.0) throw std::domain_error("weibull_hazard: age must be >= 0");
    return scale * shape * std::pow(age, shape - 1.0);
}

Matrix9 build_intensity_matrix(const NaturalHistoryParams& params,
                               const LifeTable& life_table, int age,
                               double hr_lambda1) {
    if (!std::isfinite(hr_lambda1) || hr_lambda1 < 0.0)
        throw std::domain_error("build_intensity_matrix: hr_lambda1 must be >= 0");
    // Rates may sit at 0 here (sub-model configurations); strict positivity is
    // a calibration-domain constraint, not an engine one.
    for (double rate : {params.l, params.lam2, params.lam3, params.lam4, params.lam5,
                        params.lam6, params.lam7, params.lam8})
        if (!std::isfinite(rate) || rate < 0.0)
            throw std::domain_error("build_intensity_matrix: rates must be finite and >= 0");
    const double mu = life_table.rate(age);  // throws outside table range

    Matrix9 q = Matrix9::Zero();
    auto at = [&q](HealthState from, HealthState to) -> double& {
        return q(static_cast<int>(from), static_cast<int>(to));
    };

    at(HealthState::Normal, HealthState::SmallAdenoma) =
        params.l == 0.0 ? 0.0 : hr_lambda1 * weibull_hazard(params.l, params.gamma, age);
    at(HealthState::SmallAdenoma, HealthState::LargeAdenoma) = params.lam2;
    at(HealthState::LargeAdenoma, HealthState::PreclinicalEarlyCrc) = params.lam3;
    at(HealthState::PreclinicalEarlyCrc, HealthState::PreclinicalLateCrc) = params.lam4;
    at(HealthState::PreclinicalEarlyCrc, HealthState::ClinicalEarlyCrc) = params.lam5;
    at(HealthState::PreclinicalLateCrc, HealthState::ClinicalLateCrc) = params.lam6;
    at(HealthState::ClinicalEarlyCrc, HealthState::CrcDeath) = params.lam7;
    at(HealthState::ClinicalLateCrc, HealthState::CrcDeath) = params.lam8;

    for (int s = 0; s < kNumStates; ++s) {
        const auto state = static_cast<HealthState>(s);
        if (!is_alive(state)) continue;
        at(state, HealthState::OtherDeath) = mu;
        q(s, s) = -q.row(s).sum();
    }
    return q;
}

void validate_intensity_matrix(const Eigen::Ref<const Eigen::MatrixXd>& q, double tol) {
    if (q.rows() != q.cols()) throw std::domain_error("intensity matrix must be square");
    if (!q.allFinite()) throw std::domain_error("intensity matrix has non-finite entries");
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Eigen::Index j = 0; j < q.cols(); ++j)
            if (i != j && q(i, j) < 0.0)
                throw std::domain_error("intensity matrix off-diagonal < 0");
        // Tolerance scales with the row magnitude so legitimately large rates
        // (proposal tails) are not rejected on round-off.
        const double scale = std::max(1.0, q.row(i).cwiseAbs().maxCoeff());
        if (std::fabs(q.row(i).sum()) > tol * scale)
            throw std::domain_error("intensity matrix row sum exceeds tolerance");
    }
}

}  // namespace crcsim
