// spectral.hpp: power-law bath, star discretization and chain mapping

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sbzeno {

/// Power-law spectral density J(w) = 2 alpha w^s wc^(1-s) with a hard cutoff at wc.
struct SpectralDensity {
    double s{1.0};        // bath exponent
    double alpha{0.05};   // dimensionless coupling
    double omega_c{1.0};  // cutoff, energy unit

    void validate() const;

    /// Closed-form integral of J over (0, omega_c).
    double total_weight() const { return 2.0 * alpha * omega_c * omega_c / (s + 1.0); }
};

double evaluate_j(const SpectralDensity& sd, double omega);

struct DiscretizedBath {
    Eigen::VectorXd omega;  // strictly increasing, inside (0, omega_c)
    Eigen::VectorXd g;      // coupling amplitudes
    Eigen::VectorXd seed;   // unit vector along the J shape, defined even when alpha = 0

    std::size_t size() const { return static_cast<std::size_t>(omega.size()); }
    double coupling_sum() const { return g.squaredNorm(); }
};

/// Gauss-Legendre discretization: g_j = sqrt(w_j J(omega_j)).
DiscretizedBath discretize(const SpectralDensity& sd, std::size_t modes);

/// Gauss-Legendre nodes and weights on (-1, 1), ascending nodes.
void gauss_legendre(std::size_t n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

struct ChainSystem {
    Eigen::VectorXd eps;            // on-site frequencies eps_0..eps_L
    Eigen::VectorXd hop;            // hoppings t_0..t_{L-1}
    double c0{0.0};                 // spin-chain coupling
    Eigen::MatrixXd star_to_chain;  // M x (L+1), columns are Lanczos vectors
    Eigen::VectorXd star_omega;     // star frequencies, kept for reconstruction
    std::size_t requested_sites{0}; // L+1 asked for; > sites() after breakdown

    std::size_t sites() const { return static_cast<std::size_t>(eps.size()); }
    std::size_t length() const { return sites() == 0 ? 0 : sites() - 1; }
    bool truncated() const { return requested_sites > sites(); }
};

/// Lanczos tridiagonalization of diag(omega) seeded with g/|g|, full reorthogonalization.
/// Produces L+1 chain sites. A decoupled bath (g = 0) yields c0 = 0 and an uncoupled chain
/// built from the flat vector.
ChainSystem chain_map(const DiscretizedBath& bath, std::size_t length);

/// Default chain length ceil((2/3) omega_c T).
std::size_t chain_length_for(double omega_c, double horizon);

/// mu = U^T lambda.
Eigen::VectorXd displacement_to_chain(const ChainSystem& cs, const Eigen::VectorXd& lambda_star);

struct StarOccupations {
    Eigen::VectorXd omega;
    Eigen::VectorXd occupation;
};

/// n_star = diag(U C U^T) for a chain correlation matrix C_jk = <b_j^dag b_k>.
StarOccupations star_occupations(const ChainSystem& cs, const Eigen::MatrixXcd& chain_corr,
                                 double tol = 1e-10);

void write_chain_csv(std::ostream& os, const ChainSystem& cs, const SpectralDensity& sd,
                     std::size_t modes);

} // namespace sbzeno
