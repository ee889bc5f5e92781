// model.hpp: chain Hamiltonian MPO, variational polaron displacements, initial states

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbzeno/mps.hpp"
#include "sbzeno/spectral.hpp"

namespace sbzeno {

struct ModelParams {
    double delta{0.1}; // qubit splitting
    ChainSystem chain;

    void validate() const;
};

struct MpoTerm {
    Eigen::Index row{0};
    Eigen::Index col{0};
    Mat op; // full local basis
};

struct MpoSite {
    Eigen::Index left{1};
    Eigen::Index right{1};
    std::vector<MpoTerm> terms;
};

/// H = (Delta/2) sz + (c0/2) sx (b0 + b0^dag) + sum eps_k n_k + sum t_k (b_k^dag b_{k+1} + h.c.)
/// over sites [qubit, b_0, ..., b_L]. MPO channels: 0 = complete, 1/2 = pending hop,
/// 3 = not yet started.
struct Mpo {
    std::vector<MpoSite> sites;

    std::size_t size() const { return sites.size(); }
    std::size_t local_dim(std::size_t j) const {
        return static_cast<std::size_t>(sites[j].terms.front().op.rows());
    }
    std::size_t max_bond() const;
};

/// local_dims[k] is the Fock cutoff of chain site k; empty means `fock` everywhere.
Mpo build_mpo(const ModelParams& mp, std::size_t fock, const std::vector<std::size_t>& local_dims = {});

/// Dense Hamiltonian from an MPO (qubit index most significant). Small systems only.
Mat mpo_to_dense(const Mpo& mpo);

/// H|psi> as an MPS in the full local basis (no isometries).
MpsState apply_mpo(const Mpo& mpo, const MpsState& psi);

/// <psi|H|psi> / <psi|psi>.
double energy(const MpsState& psi, const Mpo& mpo);

/// <H^2> - <H>^2 for a normalized state.
double variance_of_h(const MpsState& psi, const Mpo& mpo);

struct UtParameters {
    Eigen::VectorXd xi;
    Eigen::VectorXd lambda_star;
    Eigen::VectorXd omega; // star frequencies the factors refer to
    double eta{1.0};
    double residual{0.0};
    int iterations{0};
    bool converged{false};
    bool damped{false};
};

/// Self-consistent xi_k = w_k / (w_k + eta Delta), eta = exp(-2 sum lambda_k^2),
/// lambda_k = g_k xi_k / (2 w_k), iterated from eta = 1. Non-convergence is reported
/// through `converged` with the last iterate kept.
UtParameters solve_ut(double delta, const DiscretizedBath& bath, double tol = 1e-13, int max_iter = 100000);

void write_ut_csv(std::ostream& os, const UtParameters& ut);

/// Shortest chain whose sites carry the polaron displacement up to a loss of `tol`
/// in the branch overlap exponent, 2 (|lambda|^2 - |mu|^2) <= tol. Returns max_length
/// if that is not enough.
std::size_t chain_length_for_displacement(const DiscretizedBath& bath, const UtParameters& ut, double tol,
                                          std::size_t max_length);

enum class InitialKind { BareBath, PhysicalBath, CoherencePlus };

std::string to_string(InitialKind k);
InitialKind initial_kind_from_string(const std::string& s);

struct InitialStateSpec {
    InitialKind kind{InitialKind::BareBath};
    std::optional<UtParameters> ut;

    void validate() const;
};

struct PreparedState {
    MpsState psi;
    double truncation_deficit{0.0};        // 1 - |psi|^2 before renormalization
    std::vector<std::size_t> local_dims;   // Fock cutoff per chain site
    Eigen::VectorXd chain_displacement;    // mu, empty for the bare bath
};

/// Coherent-state amplitudes exp(-mu^2/2) mu^n / sqrt(n!), n < d.
Eigen::VectorXd coherent_amplitudes(double mu, std::size_t d);

/// Smallest cutoff in [floor, cap] whose coherent deficit is <= target; throws if none.
std::size_t coherent_cutoff(double mu, double target, std::size_t floor, std::size_t cap);

PreparedState prepare_initial_state(const InitialStateSpec& spec, const ModelParams& mp,
                                    const MpsConfig& cfg);

/// Qubit state the initial state is a product with, if any (purity within 1e-10).
std::optional<Eigen::Vector2cd> product_spin_state(const MpsState& psi);

} // namespace sbzeno
