// linalg.hpp: small dense helpers shared by the MPS code (private)

#pragma once

#include <complex>
#include <functional>
#include <utility>

#include <Eigen/Dense>

namespace sbzeno::linalg {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// M = Q R, Q with orthonormal columns, k = min(rows, cols).
std::pair<Mat, Mat> thin_qr(const Mat& m);
/// M = L Q, Q with orthonormal rows.
std::pair<Mat, Mat> thin_lq(const Mat& m);

struct KrylovStats {
    int matvecs{0};
    int substeps{1};
    double error{0.0};
};

/// exp(-i * h * tau) v for a Hermitian h given as a matvec, by Lanczos with full
/// reorthogonalization. Splits tau into substeps when max_dim is not enough; throws
/// NumericalError when even 64 substeps do not converge.
Vec expm_lanczos(const std::function<Vec(const Vec&)>& h, const Vec& v, double tau, int max_dim,
                 double tol, KrylovStats* stats = nullptr);

} // namespace sbzeno::linalg
