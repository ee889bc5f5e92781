#include "sbzeno/spectral.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "sbzeno/errors.hpp"

namespace sbzeno {

void SpectralDensity::validate() const {
    if (!(s > 0.0)) throw DomainError("bath exponent s must be positive");
    if (!(alpha >= 0.0)) throw DomainError("coupling alpha must be non-negative");
    if (!(omega_c > 0.0)) throw DomainError("cutoff omega_c must be positive");
}

double evaluate_j(const SpectralDensity& sd, double omega) {
    if (omega < 0.0 || std::isnan(omega)) throw DomainError("J(omega) requires omega >= 0");
    if (omega >= sd.omega_c) return 0.0;
    return 2.0 * sd.alpha * std::pow(omega, sd.s) * std::pow(sd.omega_c, 1.0 - sd.s);
}

void gauss_legendre(std::size_t n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    nodes.resize(static_cast<Eigen::Index>(n));
    weights.resize(static_cast<Eigen::Index>(n));
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<Eigen::Index>(i);
        const auto hi = static_cast<Eigen::Index>(n - 1 - i);
        nodes(lo) = -x;
        nodes(hi) = x;
        weights(lo) = w;
        weights(hi) = w;
    }
}

DiscretizedBath discretize(const SpectralDensity& sd, std::size_t modes) {
    sd.validate();
    if (modes < 2) throw DomainError("discretize needs at least two modes");
    Eigen::VectorXd x, w;
    gauss_legendre(modes, x, w);

    DiscretizedBath bath;
    const auto m = static_cast<Eigen::Index>(modes);
    bath.omega.resize(m);
    bath.g.resize(m);
    bath.seed.resize(m);
    const double half = 0.5 * sd.omega_c;
    for (Eigen::Index j = 0; j < m; ++j) {
        const double om = half * (x(j) + 1.0);
        const double wj = half * w(j);
        bath.omega(j) = om;
        bath.g(j) = std::sqrt(wj * evaluate_j(sd, om));
        bath.seed(j) = std::sqrt(wj * std::pow(om / sd.omega_c, sd.s));
    }
    bath.seed.normalize();
    return bath;
}

ChainSystem chain_map(const DiscretizedBath& bath, std::size_t length) {
    const auto m = static_cast<Eigen::Index>(bath.size());
    const auto want = static_cast<Eigen::Index>(length + 1);
    if (want > m) throw DomainError("chain_map requires L+1 <= M");

    ChainSystem cs;
    cs.requested_sites = length + 1;
    cs.star_omega = bath.omega;
    cs.c0 = bath.g.norm();

    Eigen::MatrixXd u(m, want);
    Eigen::VectorXd eps(want), hop(want > 0 ? want - 1 : 0);
    u.col(0) = cs.c0 > 0.0 ? Eigen::VectorXd(bath.g / cs.c0) : bath.seed;

    Eigen::Index built = want;
    for (Eigen::Index k = 0; k < want; ++k) {
        Eigen::VectorXd r = bath.omega.cwiseProduct(u.col(k));
        eps(k) = u.col(k).dot(r);
        if (k + 1 == want) break;
        r -= eps(k) * u.col(k);
        if (k > 0) r -= hop(k - 1) * u.col(k - 1);
        // two passes of classical Gram-Schmidt against every previous vector
        for (int pass = 0; pass < 2; ++pass) {
            const auto prev = u.leftCols(k + 1);
            r -= prev * (prev.transpose() * r);
        }
        const double beta = r.norm();
        if (beta < 1e-14) {
            built = k + 1;
            break;
        }
        hop(k) = beta;
        u.col(k + 1) = r / beta;
    }
    cs.eps = eps.head(built);
    cs.hop = hop.head(built > 0 ? built - 1 : 0);
    cs.star_to_chain = u.leftCols(built);
    return cs;
}

std::size_t chain_length_for(double omega_c, double horizon) {
    const double l = std::ceil((2.0 / 3.0) * omega_c * horizon - 1e-12);
    return l < 1.0 ? 1 : static_cast<std::size_t>(l);
}

Eigen::VectorXd displacement_to_chain(const ChainSystem& cs, const Eigen::VectorXd& lambda_star) {
    if (lambda_star.size() != cs.star_to_chain.rows())
        throw DomainError("displacement_to_chain: expected " +
                          std::to_string(cs.star_to_chain.rows()) + " star displacements, got " +
                          std::to_string(lambda_star.size()));
    return cs.star_to_chain.transpose() * lambda_star;
}

StarOccupations star_occupations(const ChainSystem& cs, const Eigen::MatrixXcd& chain_corr,
                                 double tol) {
    const auto n = static_cast<Eigen::Index>(cs.sites());
    if (chain_corr.rows() != n || chain_corr.cols() != n)
        throw DomainError("star_occupations: correlation matrix must be (L+1)x(L+1)");
    const double scale = std::max(1.0, chain_corr.cwiseAbs().maxCoeff());
    if ((chain_corr - chain_corr.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
        throw DomainError("star_occupations: correlation matrix is not Hermitian");

    // U is real, so diag(U C U^T) only sees the real symmetric part of C.
    const Eigen::MatrixXd re = chain_corr.real();
    const Eigen::MatrixXd uc = cs.star_to_chain * re;
    StarOccupations out;
    out.omega = cs.star_omega;
    out.occupation = (uc.cwiseProduct(cs.star_to_chain)).rowwise().sum();
    return out;
}

void write_chain_csv(std::ostream& os, const ChainSystem& cs, const SpectralDensity& sd,
                     std::size_t modes) {
    const auto old = os.precision(15);
    os << "# s=" << sd.s << ",alpha=" << sd.alpha << ",omega_c=" << sd.omega_c << ",M=" << modes;
    os.precision(17);
    os << ",c0=" << cs.c0 << "\n";
    os << "k,eps_k,t_k\n";
    for (Eigen::Index k = 0; k < cs.eps.size(); ++k) {
        os << k << "," << cs.eps(k) << ",";
        if (k < cs.hop.size()) os << cs.hop(k);
        os << "\n";
    }
    os.precision(old);
}

} // namespace sbzeno
