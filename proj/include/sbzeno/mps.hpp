// mps.hpp: matrix product states with optimized boson bases
//
// Site 0 is the qubit (physical dimension 2, no isometry). Sites 1..N-1 are chain
// bosons b_0..b_L. Each boson site stores its tensor in an optimized basis of
// dimension d_O together with an isometry V (d_O x d_k) whose rows are the basis
// vectors written in the truncated Fock basis:
//
//     |n~> = sum_n V(n~, n) |n>,      V V^dag = 1.
//
// Site tensors are stored as one (left x right) matrix per physical index.

#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sbzeno {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct MpsConfig {
    std::size_t bond_dim{6};          // D
    std::size_t local_dim{40};        // d_k, full Fock cutoff
    std::size_t obb_dim{16};          // d_O,k
    std::size_t max_local_dim{120};   // ceiling for adaptive coherent-state truncation
    double svd_cutoff{1e-12};
    double truncation_target{1e-10};  // coherent-state deficit target
    std::vector<std::size_t> obb_override; // per boson site, 0 = use obb_dim

    void validate() const;
    std::size_t obb_for(std::size_t boson) const;
};

struct SiteTensor {
    std::vector<Mat> blocks; // blocks[n] is left x right

    SiteTensor() = default;
    SiteTensor(std::size_t phys, Eigen::Index left, Eigen::Index right);

    std::size_t phys() const { return blocks.size(); }
    Eigen::Index left() const { return blocks.empty() ? 0 : blocks.front().rows(); }
    Eigen::Index right() const { return blocks.empty() ? 0 : blocks.front().cols(); }

    /// (left*phys) x right, physical index slowest.
    Mat stacked_rows() const;
    /// left x (phys*right), physical index slowest.
    Mat stacked_cols() const;
    void from_rows(const Mat& m, std::size_t phys);
    void from_cols(const Mat& m, std::size_t phys);

    double squared_norm() const;
};

class MpsState {
public:
    std::vector<SiteTensor> sites;
    std::vector<Mat> basis; // basis[0] is empty (qubit); basis[j] is V for boson site j
    std::size_t center{0};

    std::size_t size() const { return sites.size(); }
    std::size_t boson_count() const { return sites.empty() ? 0 : sites.size() - 1; }
    bool has_basis(std::size_t j) const { return basis[j].size() > 0; }
    /// Full local dimension (2 for the qubit, d_k for bosons).
    std::size_t local_dim(std::size_t j) const;
    std::size_t phys_dim(std::size_t j) const { return sites[j].phys(); }
    std::size_t max_bond() const;

    /// Site tensor written in the full local basis.
    SiteTensor full_site(std::size_t j) const;
    /// <n~|op|m~> for an operator given in the full local basis.
    Mat project_op(std::size_t j, const Mat& op) const;

    void move_center(std::size_t target);
    double norm() const;
    void normalize();

    /// Throws if dimensions are inconsistent.
    void check() const;

    /// Largest deviation from left/right orthonormality over all non-center sites,
    /// and from V V^dag = 1 over all boson sites.
    double gauge_error() const;
};

/// Operators on the truncated Fock space of dimension d.
Mat boson_annihilation(std::size_t d);
Mat boson_creation(std::size_t d);
Mat boson_number(std::size_t d);
Mat sigma_x();
Mat sigma_y();
Mat sigma_z();

/// Build an MPS from site tensors given in the full local basis: compress each boson
/// site into an optimized basis of dimension d_O (padded with Fock states), pad the
/// bonds up to the configured D with low-excitation directions, and right-canonicalize
/// with the center on the qubit. The represented vector is unchanged.
MpsState mps_from_full_sites(std::vector<SiteTensor> full, const MpsConfig& cfg);

MpsState canonicalize(MpsState psi, std::size_t new_center);

cplx overlap(const MpsState& bra, const MpsState& ket);

cplx expect_local(const MpsState& psi, const Mat& op, std::size_t site);

/// <psi| prod_k op_k |psi> for operators on distinct sites, operators in the full basis.
cplx expect_product(const MpsState& psi, const std::vector<std::pair<std::size_t, Mat>>& ops);

/// C(j, k) = <b_j^dag b_k> over chain sites j, k = 0..L.
Mat one_body_correlations(const MpsState& psi);

/// Chain occupations <b_k^dag b_k>, k = 0..L.
Eigen::VectorXd chain_occupations(const MpsState& psi);

struct Projection {
    MpsState state;
    double probability{0.0};
};

/// Apply |chi><chi| on the qubit, renormalize. Throws MeasurementAnnihilation if p < 1e-14.
Projection project_qubit(const MpsState& psi, const Eigen::Vector2cd& spin_state);

/// Reduced density matrix of the qubit.
Eigen::Matrix2cd qubit_density(const MpsState& psi);

/// Dense vector in the product basis, qubit index most significant.
Vec to_dense(const MpsState& psi);

void save_checkpoint(std::ostream& os, const MpsState& psi);
MpsState load_checkpoint(std::istream& is);

} // namespace sbzeno
