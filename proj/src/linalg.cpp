#include "linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sbzeno/errors.hpp"

namespace sbzeno::linalg {

std::pair<Mat, Mat> thin_qr(const Mat& m) {
    const Eigen::Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ() * Mat::Identity(m.rows(), k);
    Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return {std::move(q), std::move(r)};
}

std::pair<Mat, Mat> thin_lq(const Mat& m) {
    auto [q, r] = thin_qr(m.adjoint());
    return {r.adjoint(), q.adjoint()};
}

namespace {

// One Krylov solve; returns false when max_dim is exhausted before tol.
bool lanczos_step(const std::function<Vec(const Vec&)>& h, const Vec& v, double tau, int max_dim,
                  double tol, Vec& out, KrylovStats& stats) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) {
        out = v;
        return true;
    }
    const Eigen::Index n = v.size();
    const int kmax = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
    Mat basis(n, kmax);
    std::vector<double> alpha, beta;
    basis.col(0) = v / beta0;

    Eigen::VectorXcd coeff;
    for (int k = 0; k < kmax; ++k) {
        Vec w = h(basis.col(k));
        ++stats.matvecs;
        const double a = basis.col(k).dot(w).real();
        alpha.push_back(a);
        w -= a * basis.col(k);
        if (k > 0) w -= beta[static_cast<std::size_t>(k - 1)] * basis.col(k - 1);
        for (int pass = 0; pass < 2; ++pass) {
            const auto prev = basis.leftCols(k + 1);
            w -= prev * (prev.adjoint() * w);
        }
        const double b = w.norm();

        const int dim = k + 1;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
        for (int i = 0; i + 1 < dim; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const Eigen::MatrixXd& q = es.eigenvectors();
        Eigen::VectorXcd phase(dim);
        for (int i = 0; i < dim; ++i) phase(i) = std::exp(std::complex<double>(0.0, -tau * es.eigenvalues()(i)));
        coeff = q.cast<std::complex<double>>() * phase.cwiseProduct(q.row(0).transpose().cast<std::complex<double>>());

        const double scale = std::max(1.0, std::abs(a));
        const bool breakdown = b < 1e-13 * scale;
        const double err = breakdown ? 0.0 : b * std::abs(coeff(dim - 1));
        stats.error = std::max(stats.error, err * beta0);
        if (breakdown || err < tol || dim == n) {
            out = beta0 * (basis.leftCols(dim) * coeff);
            return true;
        }
        if (k + 1 == kmax) break;
        beta.push_back(b);
        basis.col(k + 1) = w / b;
    }
    return false;
}

} // namespace

Vec expm_lanczos(const std::function<Vec(const Vec&)>& h, const Vec& v, double tau, int max_dim,
                 double tol, KrylovStats* stats) {
    KrylovStats local;
    KrylovStats& st = stats ? *stats : local;
    for (int pieces = 1; pieces <= 64; pieces *= 2) {
        Vec cur = v;
        bool ok = true;
        KrylovStats trial;
        for (int p = 0; p < pieces && ok; ++p) {
            Vec next;
            ok = lanczos_step(h, cur, tau / pieces, max_dim, tol / pieces, next, trial);
            cur = std::move(next);
        }
        st.matvecs += trial.matvecs;
        if (ok) {
            st.substeps = pieces;
            st.error = trial.error;
            return cur;
        }
    }
    throw NumericalError("Krylov exponential did not converge with dimension " + std::to_string(max_dim));
}

} // namespace sbzeno::linalg
