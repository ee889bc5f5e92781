// tdvp.hpp: one-site projector-splitting TDVP with optimized boson bases
//
// The MPS with isometries is treated as a comb: every chain tensor A_j has a leaf V_j
// hanging off its physical leg. A symmetric sweep visits, left to right with dt/2,
//
//     A_j forward, (A_j|V_j) bond backward, V_j forward, (A_j|A_j+1) bond backward
//
// and then replays the same sequence in reverse order. Bond and basis dimensions stay
// fixed, so each sub-step is an exact unitary on its local space.

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "sbzeno/model.hpp"
#include "sbzeno/mps.hpp"

namespace sbzeno {

struct TdvpConfig {
    double dt{0.1};
    int krylov_dim{20};
    double krylov_tol{1e-12};
    bool symmetric{true}; // false: single left-to-right Lie-Trotter sweep with the full dt

    void validate() const;
};

struct StepStats {
    int matvecs{0};
    int max_substeps{1};
};

/// Advance psi by dt (center moved to the qubit first; ends with center on the qubit).
void tdvp_step(MpsState& psi, const Mpo& mpo, const TdvpConfig& cfg, double dt, StepStats* stats = nullptr);

/// One step of cfg.dt on a copy.
MpsState step(MpsState psi, const Mpo& mpo, const TdvpConfig& cfg);

/// Advance by `duration` using steps of cfg.dt plus one shorter final step.
void advance(MpsState& psi, const Mpo& mpo, const TdvpConfig& cfg, double duration);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> sigma_z;
    std::vector<double> sigma_x;
    std::vector<double> norm;
    std::vector<double> energy;
    std::vector<cplx> survival_amp;
    std::vector<double> fidelity;
    std::vector<Eigen::VectorXd> chain_occ;
    std::vector<Eigen::VectorXd> star_occ; // filled only when a chain is supplied

    std::size_t size() const { return times.size(); }
};

struct EvolveOptions {
    std::size_t record_every{1};
    bool occupations{true};
    const ChainSystem* star_chain{nullptr}; // reconstruct star occupations when set
    bool check_chain_length{true};
    double omega_c{1.0};
    MpsState* final_state{nullptr}; // receives the state at T when set
};

/// Record the observables of psi at time t into rec (survival relative to psi0).
void record_snapshot(TrajectoryRecord& rec, double t, const MpsState& psi, const MpsState& psi0,
                     const Mpo& mpo, const EvolveOptions& opt);

/// Repeated steps up to T, recording every `record_every` steps and at T.
TrajectoryRecord evolve(const MpsState& psi0, const Mpo& mpo, const TdvpConfig& cfg, double T,
                        const EvolveOptions& opt = {});

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);
void write_occupation_csv(std::ostream& os, const TrajectoryRecord& rec);

} // namespace sbzeno
