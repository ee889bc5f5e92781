#include "sbzeno/zeno.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "sbzeno/errors.hpp"

namespace sbzeno {

std::string to_string(Scheme s) { return s == Scheme::WholeSystem ? "whole" : "qubit"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "whole" || s == "whole_system") return Scheme::WholeSystem;
    if (s == "qubit" || s == "qubit_only") return Scheme::QubitOnly;
    throw DomainError("unknown measurement scheme '" + s + "' (expected whole or qubit)");
}

std::string to_string(ZenoClass c) { return c == ZenoClass::QzeOnly ? "QZE-only" : "QZE->QAZE"; }

std::size_t default_measurements(double delta, double tau) {
    if (!(delta > 0.0) || !(tau > 0.0)) throw DomainError("default_measurements: delta and tau must be positive");
    const double n = std::floor(std::numbers::pi / delta / tau + 1e-9);
    return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

TdvpConfig interval_config(const TdvpConfig& cfg, double tau) {
    cfg.validate();
    if (!(tau > 0.0)) throw DomainError("measurement interval tau must be positive");
    TdvpConfig out = cfg;
    const double steps = std::max(1.0, std::ceil(tau / cfg.dt - 1e-9));
    out.dt = tau / steps;
    return out;
}

namespace {

long steps_for(const TdvpConfig& c, double tau) { return std::lround(tau / c.dt); }

double fidelity(const MpsState& psi0, const MpsState& psi) {
    return std::norm(overlap(psi0, psi)) / (overlap(psi0, psi0).real() * overlap(psi, psi).real());
}

} // namespace

cplx survival_amplitude(const MpsState& psi0, const Mpo& mpo, double tau, const TdvpConfig& cfg) {
    const TdvpConfig c = interval_config(cfg, tau);
    MpsState psi = canonicalize(psi0, 0);
    const long steps = steps_for(c, tau);
    for (long s = 0; s < steps; ++s) tdvp_step(psi, mpo, c, c.dt);
    return overlap(psi0, psi) / std::sqrt(overlap(psi0, psi0).real() * overlap(psi, psi).real());
}

double decay_rate_whole(const MpsState& psi0, const Mpo& mpo, double tau, const TdvpConfig& cfg) {
    const double a = std::abs(survival_amplitude(psi0, mpo, tau, cfg));
    if (a <= std::numeric_limits<double>::min()) {
        std::cerr << "warning: survival amplitude vanished at tau=" << tau << "; decay rate reported as inf\n";
        return std::numeric_limits<double>::infinity();
    }
    return -2.0 / tau * std::log(std::min(a, 1.0));
}

double fit_decay_rate(double tau, const std::vector<double>& cumulative) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < cumulative.size(); ++k) {
        if (!(cumulative[k] > 0.0)) return std::numeric_limits<double>::infinity();
        const double x = static_cast<double>(k + 1) * tau;
        sxy += x * -std::log(std::min(cumulative[k], 1.0));
        sxx += x * x;
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

QubitOnlyResult run_qubit_only(const MpsState& psi0, const Mpo& mpo, double tau, std::size_t n,
                               const TdvpConfig& cfg, const QubitOnlyOptions& opt) {
    if (n == 0) throw DomainError("run_qubit_only: need at least one measurement");
    const auto spin = product_spin_state(psi0);
    if (!spin) throw DomainError("qubit-only scheme needs an initial state that is a product with the qubit");
    const TdvpConfig c = interval_config(cfg, tau);
    const long steps = steps_for(c, tau);

    QubitOnlyResult res;
    res.tau = tau;
    MpsState psi = canonicalize(psi0, 0);
    psi.normalize();
    const bool trace = opt.record_every > 0;
    if (trace) {
        res.trace_times.push_back(0.0);
        res.trace_fidelity.push_back(1.0);
    }
    double cum = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * tau;
        for (long s = 1; s <= steps; ++s) {
            tdvp_step(psi, mpo, c, c.dt);
            if (trace && s % static_cast<long>(opt.record_every) == 0 && s < steps) {
                res.trace_times.push_back(t0 + static_cast<double>(s) * c.dt);
                res.trace_fidelity.push_back(fidelity(psi0, psi));
            }
        }
        const double t1 = static_cast<double>(k + 1) * tau;
        const double before = fidelity(psi0, psi);
        res.fidelity_before.push_back(before);
        if (trace) {
            res.trace_times.push_back(t1);
            res.trace_fidelity.push_back(before);
        }
        try {
            Projection pr = project_qubit(psi, *spin);
            psi = std::move(pr.state);
            res.p.push_back(pr.probability);
        } catch (const MeasurementAnnihilation& e) {
            res.p.push_back(e.probability);
            res.cumulative.push_back(0.0);
            res.aborted = true;
            res.diagnostic = "measurement " + std::to_string(k + 1) + " annihilated the state (p=" +
                             std::to_string(e.probability) + ")";
            res.gamma = std::numeric_limits<double>::infinity();
            return res;
        }
        cum *= res.p.back();
        res.cumulative.push_back(cum);
        const double after = fidelity(psi0, psi);
        res.fidelity_after.push_back(after);
        if (trace) {
            res.trace_times.push_back(t1);
            res.trace_fidelity.push_back(after);
        }
        if (opt.chain_occupations || opt.star_chain) {
            const Mat corr = one_body_correlations(psi);
            res.chain_occ_after.push_back(corr.diagonal().real());
            if (opt.star_chain) res.star_occ_after.push_back(star_occupations(*opt.star_chain, corr).occupation);
        }
    }
    res.gamma = fit_decay_rate(tau, res.cumulative);
    return res;
}

FidelityTrace fidelity_trace(const MpsState& psi0, const Mpo& mpo, double tau, std::size_t n,
                             const TdvpConfig& cfg, std::size_t record_every) {
    QubitOnlyOptions opt;
    opt.record_every = std::max<std::size_t>(record_every, 1);
    const QubitOnlyResult r = run_qubit_only(psi0, mpo, tau, n, cfg, opt);
    return {r.trace_times, r.trace_fidelity, r.fidelity_after};
}

Classification classify(const std::vector<double>& tau, const std::vector<double>& gamma, double rel_band) {
    if (tau.size() != gamma.size()) throw DomainError("classify: tau and gamma differ in length");
    for (std::size_t i = 1; i < tau.size(); ++i)
        if (!(tau[i] > tau[i - 1])) throw DomainError("classify: tau grid must be strictly increasing");
    Classification c;
    double top = 0.0;
    for (double g : gamma)
        if (std::isfinite(g)) top = std::max(top, g);
    c.band = rel_band * top;
    if (gamma.empty()) return c;
    std::size_t best = 0;
    for (std::size_t i = 1; i < gamma.size(); ++i) {
        if (gamma[i] < gamma[best] - c.band) {
            c.kind = ZenoClass::QzeToQaze;
            c.peak_index = best;
            c.peak_tau = tau[best];
            return c;
        }
        if (gamma[i] > gamma[best]) best = i;
    }
    return c;
}

void SweepSetup::validate() const {
    sd.validate();
    if (modes < 2) throw DomainError("need at least 2 star modes");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    mps.validate();
    tdvp.validate();
    if (!(rel_band >= 0.0)) throw DomainError("rel_band must be non-negative");
    if (!(displacement_tol > 0.0)) throw DomainError("displacement_tol must be positive");
    if (threads == 0) throw DomainError("threads must be >= 1");
}

std::size_t sweep_chain_length(const SweepSetup& setup, double horizon) {
    std::size_t l = setup.chain_length;
    if (l == 0) {
        l = std::max(setup.min_chain_length, chain_length_for(setup.sd.omega_c, horizon));
        if (setup.initial != InitialKind::BareBath) {
            const DiscretizedBath bath = discretize(setup.sd, setup.modes);
            const UtParameters ut = solve_ut(setup.delta, bath);
            l = std::max(l, chain_length_for_displacement(bath, ut, setup.displacement_tol, setup.max_chain_length));
        }
        l = std::min(l, std::max(setup.max_chain_length, chain_length_for(setup.sd.omega_c, horizon)));
    }
    if (setup.chain_double) l *= 2;
    return l;
}

PreparedRun prepare_run(const SweepSetup& setup, std::size_t chain_length) {
    PreparedRun run;
    const DiscretizedBath bath = discretize(setup.sd, setup.modes);
    run.model.delta = setup.delta;
    run.model.chain = chain_map(bath, chain_length);
    InitialStateSpec spec;
    spec.kind = setup.initial;
    if (spec.kind != InitialKind::BareBath) {
        UtParameters ut = solve_ut(setup.delta, bath);
        if (!ut.converged)
            std::cerr << "warning: polaron self-consistency did not converge (residual " << ut.residual << ")\n";
        spec.ut = std::move(ut);
    }
    run.state = prepare_initial_state(spec, run.model, setup.mps);
    run.mpo = build_mpo(run.model, setup.mps.local_dim, run.state.local_dims);
    return run;
}

namespace {

DecayPoint run_point(const SweepSetup& setup, Scheme scheme, double tau) {
    DecayPoint pt;
    pt.tau = tau;
    if (scheme == Scheme::WholeSystem) {
        pt.measurements = 1;
        pt.chain_sites = sweep_chain_length(setup, tau) + 1;
        const PreparedRun run = prepare_run(setup, pt.chain_sites - 1);
        pt.amplitude = survival_amplitude(run.state.psi, run.mpo, tau, setup.tdvp);
        const double a = std::abs(pt.amplitude);
        pt.gamma = a > 0.0 ? -2.0 / tau * std::log(std::min(a, 1.0)) : std::numeric_limits<double>::infinity();
        if (!(a > 0.0)) pt.diagnostic = "survival amplitude vanished";
        return pt;
    }
    std::size_t n = setup.measurements > 0 ? setup.measurements : default_measurements(setup.delta, tau);
    if (setup.horizon_cap && static_cast<double>(n) * tau > std::numbers::pi / setup.delta * (1.0 + 1e-9))
        throw DomainError("n*tau exceeds the pi/Delta horizon; disable horizon_cap to allow it");
    pt.measurements = n;
    pt.chain_sites = sweep_chain_length(setup, static_cast<double>(n) * tau) + 1;
    const PreparedRun run = prepare_run(setup, pt.chain_sites - 1);
    QubitOnlyOptions opt;
    if (setup.keep_traces) {
        opt.record_every = setup.trace_every;
        opt.star_chain = &run.model.chain;
    }
    QubitOnlyResult r = run_qubit_only(run.state.psi, run.mpo, tau, n, setup.tdvp, opt);
    if (setup.keep_traces) {
        pt.trace_times = std::move(r.trace_times);
        pt.trace_fidelity = std::move(r.trace_fidelity);
        pt.fidelity_after = std::move(r.fidelity_after);
        pt.star_omega = run.model.chain.star_omega;
        pt.star_occ_after = std::move(r.star_occ_after);
    }
    pt.p = r.p;
    pt.gamma = r.gamma;
    pt.aborted = r.aborted;
    pt.diagnostic = r.diagnostic;
    return pt;
}

} // namespace

DecayRateCurve sweep_tau(const SweepSetup& setup, Scheme scheme, const std::vector<double>& tau_grid) {
    setup.validate();
    if (tau_grid.empty()) throw DomainError("empty tau grid");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] > 0.0)) throw DomainError("tau values must be positive");
        if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) throw DomainError("tau grid must be strictly increasing");
    }
    if (scheme == Scheme::QubitOnly && setup.initial == InitialKind::PhysicalBath)
        throw DomainError("qubit-only scheme needs a product initial state; the physical bath state is entangled");

    DecayRateCurve curve;
    curve.scheme = scheme;
    curve.delta = setup.delta;
    curve.points.resize(tau_grid.size());
    std::vector<std::exception_ptr> errors(tau_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < tau_grid.size(); i = next++) {
            try {
                curve.points[i] = run_point(setup, scheme, tau_grid[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min(setup.threads, tau_grid.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<double> g;
    for (const auto& p : curve.points) g.push_back(p.gamma);
    curve.classification = classify(tau_grid, g, setup.rel_band);
    return curve;
}

void write_curve_csv(std::ostream& os, const DecayRateCurve& curve) {
    const auto old = os.precision(15);
    const Classification& c = curve.classification;
    os << "# classification=" << to_string(c.kind) << ",band=" << c.band;
    if (c.peak_index) os << ",peak_tau=" << c.peak_tau << ",peak_delta_tau=" << c.peak_tau * curve.delta;
    os << "\n";
    os << "tau,delta_tau,gamma,scheme,measurements,chain_sites,qaze,peak,aborted\n";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const DecayPoint& p = curve.points[i];
        os << p.tau << "," << p.tau * curve.delta << "," << p.gamma << "," << to_string(curve.scheme) << ","
           << p.measurements << "," << p.chain_sites << "," << (c.kind == ZenoClass::QzeToQaze ? 1 : 0) << ","
           << (c.peak_index && *c.peak_index == i ? 1 : 0) << "," << (p.aborted ? 1 : 0) << "\n";
    }
    os.precision(old);
}

void write_survival_csv(std::ostream& os, const DecayRateCurve& curve) {
    const auto old = os.precision(15);
    os << "tau,k,p_k,survival\n";
    for (const auto& p : curve.points) {
        if (curve.scheme == Scheme::WholeSystem) {
            os << p.tau << ",1," << std::norm(p.amplitude) << "," << std::norm(p.amplitude) << "\n";
            continue;
        }
        double cum = 1.0;
        for (std::size_t k = 0; k < p.p.size(); ++k) {
            cum *= p.p[k];
            os << p.tau << "," << k + 1 << "," << p.p[k] << "," << cum << "\n";
        }
    }
    os.precision(old);
}

void write_fidelity_csv(std::ostream& os, const DecayPoint& pt) {
    const auto old = os.precision(15);
    os << "t,fidelity\n";
    for (std::size_t i = 0; i < pt.trace_times.size(); ++i) os << pt.trace_times[i] << "," << pt.trace_fidelity[i] << "\n";
    os.precision(old);
}

void write_star_occupation_csv(std::ostream& os, const DecayPoint& pt) {
    const auto old = os.precision(15);
    os << "k,omega,n\n";
    for (std::size_t k = 0; k < pt.star_occ_after.size(); ++k)
        for (Eigen::Index j = 0; j < pt.star_occ_after[k].size(); ++j)
            os << k + 1 << "," << pt.star_omega(j) << "," << pt.star_occ_after[k](j) << "\n";
    os.precision(old);
}

} // namespace sbzeno
