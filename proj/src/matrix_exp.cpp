#include "crcsim/matrix_exp.hpp"

#include <cmath>
#include <stdexcept>

namespace crcsim {

namespace {

template <typename Mat>
Mat expm_impl(const Mat& q) {
    validate_intensity_matrix(q);

    const double norm = q.template lpNorm<Eigen::Infinity>();
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        ++squarings;
        scale *= 0.5;
    }
    const Mat a = q * scale;

    // Taylor series; with ||a|| <= 0.5 the term norms fall geometrically, so
    // stopping once a term drops below 1e-16 bounds the tail well under 1e-12.
    Mat p = Mat::Identity(q.rows(), q.cols());
    Mat term = p;
    for (int k = 1; k <= 64; ++k) {
        term = (term * a) / static_cast<double>(k);
        p += term;
        if (term.template lpNorm<Eigen::Infinity>() < 1e-16) break;
    }
    for (int s = 0; s < squarings; ++s) p = p * p;

    // Entries are probabilities; negatives can only be round-off.
    p = p.cwiseMax(0.0);
    return p;
}

}  // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& q) {
    return expm_impl<Eigen::MatrixXd>(q);
}

Matrix9 matrix_exponential(const Matrix9& q) { return expm_impl<Matrix9>(q); }

}  // namespace crcsim
