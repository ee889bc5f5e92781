// zeno.hpp: repeated projective measurements and effective decay rates
//
// Two schemes: the whole system is projected back onto its initial state, or only
// the qubit is projected onto its initial spin state while the bath keeps its
// excitations. gamma(tau) is read off P_s(n tau) ~ exp(-gamma n tau).

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbzeno/model.hpp"
#include "sbzeno/tdvp.hpp"

namespace sbzeno {

enum class Scheme { WholeSystem, QubitOnly };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// floor((pi/Delta)/tau), at least 1.
std::size_t default_measurements(double delta, double tau);

/// cfg with dt shrunk so that an integer number of steps spans tau exactly.
TdvpConfig interval_config(const TdvpConfig& cfg, double tau);

/// <psi0| exp(-i H tau) |psi0> by TDVP.
cplx survival_amplitude(const MpsState& psi0, const Mpo& mpo, double tau, const TdvpConfig& cfg);

/// -(2/tau) ln|A(tau)|; +inf when |A| vanishes.
double decay_rate_whole(const MpsState& psi0, const Mpo& mpo, double tau, const TdvpConfig& cfg);

/// Least-squares slope through the origin of -ln P_s(k tau) against k tau.
double fit_decay_rate(double tau, const std::vector<double>& cumulative);

struct QubitOnlyOptions {
    std::size_t record_every{0};            // steps between fidelity samples inside intervals, 0 = none
    const ChainSystem* star_chain{nullptr}; // star occupations after each measurement when set
    bool chain_occupations{false};          // chain occupations after each measurement
};

struct QubitOnlyResult {
    double tau{0.0};
    std::vector<double> p;           // per-measurement success probabilities
    std::vector<double> cumulative;  // P_s(k tau)
    double gamma{0.0};
    bool aborted{false};
    std::string diagnostic;

    std::vector<double> fidelity_before; // |<psi0|psi(k tau^-)>|^2
    std::vector<double> fidelity_after;  // |<psi0|psi(k tau^+)>|^2
    std::vector<double> trace_times;     // fidelity trace with discontinuities at measurements
    std::vector<double> trace_fidelity;
    std::vector<Eigen::VectorXd> chain_occ_after;
    std::vector<Eigen::VectorXd> star_occ_after;
};

/// Evolve tau, project the qubit onto the initial spin state, repeat n times.
/// psi0 must be a product of a qubit state and a bath state.
QubitOnlyResult run_qubit_only(const MpsState& psi0, const Mpo& mpo, double tau, std::size_t n,
                               const TdvpConfig& cfg, const QubitOnlyOptions& opt = {});

struct FidelityTrace {
    std::vector<double> times;
    std::vector<double> fidelity;
    std::vector<double> at_measurements; // fidelity right after each measurement
};

FidelityTrace fidelity_trace(const MpsState& psi0, const Mpo& mpo, double tau, std::size_t n,
                             const TdvpConfig& cfg, std::size_t record_every = 1);

enum class ZenoClass { QzeOnly, QzeToQaze };

std::string to_string(ZenoClass c);

struct Classification {
    ZenoClass kind{ZenoClass::QzeOnly};
    std::optional<std::size_t> peak_index;
    double peak_tau{0.0};
    double band{0.0};
};

/// QZE-only when gamma never falls more than rel_band * max(gamma) below its running
/// maximum; otherwise QZE->QAZE with the peak at that running maximum.
Classification classify(const std::vector<double>& tau, const std::vector<double>& gamma, double rel_band = 0.02);

/// Everything needed to build and run one sweep point.
struct SweepSetup {
    SpectralDensity sd;
    std::size_t modes{2000};
    double delta{0.1};
    InitialKind initial{InitialKind::BareBath};
    MpsConfig mps;
    TdvpConfig tdvp;
    std::size_t chain_length{0};     // 0 = from the horizon
    std::size_t min_chain_length{12};
    double displacement_tol{0.01};   // displaced initial states: see chain_length_for_displacement
    std::size_t max_chain_length{200};
    bool chain_double{false};
    bool horizon_cap{true};
    std::size_t measurements{0};     // 0 = floor((pi/Delta)/tau)
    double rel_band{0.02};
    std::size_t threads{1};
    bool keep_traces{false};          // qubit-only: fidelity trace and star occupations per point
    std::size_t trace_every{1};

    void validate() const;
};

struct DecayPoint {
    double tau{0.0};
    double gamma{0.0};
    std::size_t measurements{1};
    std::size_t chain_sites{0};
    cplx amplitude{1.0};         // whole-system scheme
    std::vector<double> p;       // qubit-only scheme
    bool aborted{false};
    std::string diagnostic;

    // filled when SweepSetup::keep_traces is set (qubit-only scheme)
    std::vector<double> trace_times;
    std::vector<double> trace_fidelity;
    std::vector<double> fidelity_after;
    Eigen::VectorXd star_omega;
    std::vector<Eigen::VectorXd> star_occ_after;
};

struct DecayRateCurve {
    Scheme scheme{Scheme::WholeSystem};
    double delta{0.1};
    std::vector<DecayPoint> points;
    Classification classification;
};

/// Chain length used for a horizon T: the light-cone rule, at least min_chain_length,
/// long enough to hold the polaron displacement of displaced initial states.
std::size_t sweep_chain_length(const SweepSetup& setup, double horizon);

/// Ready-to-run state and Hamiltonian for a given chain length.
struct PreparedRun {
    ModelParams model;
    PreparedState state;
    Mpo mpo;
};

PreparedRun prepare_run(const SweepSetup& setup, std::size_t chain_length);

/// gamma at every grid point (independent jobs on setup.threads workers, merged in tau order).
DecayRateCurve sweep_tau(const SweepSetup& setup, Scheme scheme, const std::vector<double>& tau_grid);

void write_curve_csv(std::ostream& os, const DecayRateCurve& curve);
void write_survival_csv(std::ostream& os, const DecayRateCurve& curve);
/// t,fidelity for one point; measurement times appear twice (before, after).
void write_fidelity_csv(std::ostream& os, const DecayPoint& pt);
/// k,omega,n: star occupations after measurement k.
void write_star_occupation_csv(std::ostream& os, const DecayPoint& pt);

} // namespace sbzeno
