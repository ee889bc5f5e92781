// oracle.hpp: exact propagation on small truncated Hilbert spaces
//
// Basis: |s, n_0, ..., n_L> with n_k < d on every chain site and, optionally,
// sum_k n_k <= photon_cap. The Hamiltonian is assembled directly from the chain
// coefficients as a sparse real matrix; it shares no code with the MPO path.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "sbzeno/model.hpp"

namespace sbzeno {

struct DenseSystemConfig {
    std::size_t fock{6};            // uniform cutoff d
    std::size_t photon_cap{0};      // 0 = no cap on the total photon number
    std::size_t max_dim{2000000};
};

class DenseSystem {
public:
    DenseSystem(const ModelParams& mp, const DenseSystemConfig& cfg);

    const ModelParams& params() const { return mp_; }
    std::size_t chain_sites() const { return sites_; }
    std::size_t fock() const { return cfg_.fock; }
    std::size_t photon_cap() const { return cfg_.photon_cap; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(states_.size()); }
    const Eigen::SparseMatrix<double>& hamiltonian() const { return h_; }

    /// Occupations of basis state i (entry 0 is the spin: 0 = up, 1 = down).
    const std::vector<std::uint8_t>& state(Eigen::Index i) const { return states_[static_cast<std::size_t>(i)]; }
    /// Index of an occupation pattern, -1 if it lies outside the truncated space.
    Eigen::Index index_of(const std::vector<std::uint8_t>& occ) const;

    Vec apply(const Vec& v) const { return h_ * v; }

    double expect_sigma_z(const Vec& v) const;
    double expect_sigma_x(const Vec& v) const;
    Eigen::VectorXd chain_occupations(const Vec& v) const;

private:
    std::uint64_t key(const std::vector<std::uint8_t>& occ) const;

    DenseSystemConfig cfg_;
    ModelParams mp_;
    std::size_t sites_{0};
    std::vector<std::vector<std::uint8_t>> states_;
    std::unordered_map<std::uint64_t, Eigen::Index> lookup_;
    Eigen::SparseMatrix<double> h_;
};

struct DenseState {
    Vec v;
    double deficit{0.0}; // weight lost to the truncation before renormalization
};

/// Initial state in the truncated basis. Throws if the coherent deficit exceeds max_deficit.
DenseState dense_state(const InitialStateSpec& spec, const DenseSystem& sys, double max_deficit = 1e-8);

struct PropagateStats {
    int matvecs{0};
    int substeps{0};
};

/// exp(-i H t) v by Arnoldi with adaptive sub-steps.
Vec krylov_propagate(const DenseSystem& sys, const Vec& v, double t, double tol = 1e-12,
                     PropagateStats* stats = nullptr);

/// Same propagator for an arbitrary sparse Hermitian matrix (used to validate the oracle).
Vec krylov_propagate(const Eigen::SparseMatrix<double>& h, const Vec& v, double t, double tol = 1e-12,
                     PropagateStats* stats = nullptr);

struct DenseTrajectory {
    std::vector<double> times;
    std::vector<double> sigma_z;
    std::vector<double> sigma_x;
    std::vector<double> norm;
};

/// Observables on the grid k*dt, k = 0..floor(T/dt).
DenseTrajectory dense_evolve(const DenseSystem& sys, const Vec& v0, double dt, double T, double tol = 1e-12);

struct ComparisonReport {
    std::string observable;
    std::vector<double> times;
    std::vector<double> value_mps;
    std::vector<double> value_dense;
    std::vector<double> abs_diff;
    double max_deviation{0.0};
    double tol{0.0};
    bool pass{false};
};

/// Pointwise comparison on matching time grids (throws DomainError on mismatch).
ComparisonReport compare(const std::vector<double>& times_mps, const std::vector<double>& values_mps,
                         const std::vector<double>& times_dense, const std::vector<double>& values_dense,
                         const std::string& observable, double tol);

void write_comparison_csv(std::ostream& os, const ComparisonReport& rep);

} // namespace sbzeno
