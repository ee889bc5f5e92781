// sbzeno: command-line front end
//
//   sbzeno chain  --config run.cfg          chain coefficients
//   sbzeno evolve --config run.cfg          single trajectory
//   sbzeno zeno   --config run.cfg          decay-rate sweep + classification
//   sbzeno verify --config run.cfg          MPS vs exact propagation on a small instance
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbzeno/config.hpp"
#include "sbzeno/oracle.hpp"
#include "sbzeno/spectral.hpp"
#include "sbzeno/tdvp.hpp"
#include "sbzeno/zeno.hpp"

using namespace sbzeno;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_verify = 4;

struct Common {
    std::string config_path;
    std::string out_dir;
    std::size_t threads{0};
    bool chain_double{false};
    std::vector<std::string> overrides;
};

RunConfig resolve(const Common& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) cfg = load_config(c.config_path);
    for (const auto& o : c.overrides) apply_override(cfg, o);
    if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
    if (c.threads > 0) cfg.threads = c.threads;
    if (c.chain_double) cfg.chain_double = true;
    cfg.validate();
    return cfg;
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    write_config_header(os, cfg);
    return os;
}

int cmd_chain(RunConfig cfg) {
    const std::size_t l = cfg.resolved_chain_length(cfg.evolve_time);
    cfg.chain_length = l;
    cfg.chain_double = false;
    const DiscretizedBath bath = discretize(cfg.sd, cfg.modes);
    const ChainSystem cs = chain_map(bath, l);
    if (cs.c0 == 0.0) std::cerr << "warning: alpha = 0, the qubit is decoupled and all couplings vanish\n";
    if (cs.truncated())
        std::cerr << "warning: Lanczos broke down after " << cs.sites() << " of " << cs.requested_sites << " sites\n";
    auto os = open_output(cfg, "chain.csv");
    write_chain_csv(os, cs, cfg.sd, cfg.modes);
    std::cout << "chain: " << cs.sites() << " sites, c0 = " << cs.c0 << "\n";
    return 0;
}

int cmd_evolve(RunConfig cfg) {
    const std::size_t l = cfg.resolved_chain_length(cfg.evolve_time);
    SweepSetup setup = cfg.sweep_setup();
    const PreparedRun run = prepare_run(setup, l);
    cfg.chain_length = l;
    cfg.chain_double = false;
    if (run.state.truncation_deficit > 0.0)
        std::cerr << "initial state truncation deficit " << run.state.truncation_deficit << "\n";

    EvolveOptions opt;
    opt.record_every = cfg.record_every;
    opt.occupations = cfg.occupations;
    opt.star_chain = cfg.star_occupations ? &run.model.chain : nullptr;
    opt.omega_c = cfg.sd.omega_c;
    MpsState last;
    if (!cfg.checkpoint.empty()) opt.final_state = &last;
    const TrajectoryRecord rec = evolve(run.state.psi, run.mpo, cfg.tdvp, cfg.evolve_time, opt);

    {
        auto os = open_output(cfg, "trajectory.csv");
        write_trajectory_csv(os, rec);
    }
    if (cfg.occupations) {
        auto os = open_output(cfg, "occupations.csv");
        write_occupation_csv(os, rec);
    }
    if (cfg.star_occupations) {
        auto os = open_output(cfg, "star_occupations.csv");
        os.precision(15);
        os << "t,omega,n\n";
        for (std::size_t i = 0; i < rec.star_occ.size(); ++i)
            for (Eigen::Index j = 0; j < rec.star_occ[i].size(); ++j)
                os << rec.times[i] << "," << run.model.chain.star_omega(j) << "," << rec.star_occ[i](j) << "\n";
    }
    if (cfg.initial != InitialKind::BareBath) {
        auto os = open_output(cfg, "ut.csv");
        write_ut_csv(os, solve_ut(cfg.delta, discretize(cfg.sd, cfg.modes)));
    }
    if (!cfg.checkpoint.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        const auto path = std::filesystem::path(cfg.out_dir) / cfg.checkpoint;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + path.string());
        save_checkpoint(os, last);
    }
    std::cout << "evolve: " << rec.size() << " samples, " << run.mpo.size() << " sites, final sigma_z = "
              << rec.sigma_z.back() << ", norm = " << rec.norm.back() << "\n";
    return 0;
}

int cmd_zeno(const RunConfig& cfg) {
    const std::vector<double> taus = cfg.tau_values();
    const DecayRateCurve curve = sweep_tau(cfg.sweep_setup(), cfg.scheme, taus);
    {
        auto os = open_output(cfg, "decay_rate.csv");
        write_curve_csv(os, curve);
    }
    if (cfg.scheme == Scheme::QubitOnly) {
        auto os = open_output(cfg, "survival.csv");
        write_survival_csv(os, curve);
    }
    if (cfg.traces && cfg.scheme == Scheme::QubitOnly) {
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const DecayPoint& pt = curve.points[i];
            const std::string id = "tau_" + std::to_string(i);
            {
                auto os = open_output(cfg, "fidelity_" + id + ".csv");
                os << "# tau=" << pt.tau << "\n";
                write_fidelity_csv(os, pt);
            }
            auto os = open_output(cfg, "star_occupations_" + id + ".csv");
            os << "# tau=" << pt.tau << "\n";
            write_star_occupation_csv(os, pt);
        }
    }
    for (const auto& p : curve.points)
        if (p.aborted) std::cerr << "warning: tau=" << p.tau << ": " << p.diagnostic << "\n";
    const Classification& c = curve.classification;
    std::cout << "classification: " << to_string(c.kind);
    if (c.peak_index) std::cout << " peak_tau=" << c.peak_tau << " peak_delta_tau=" << c.peak_tau * cfg.delta;
    std::cout << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    const DiscretizedBath bath = discretize(cfg.sd, cfg.modes);
    ModelParams mp;
    mp.delta = cfg.delta;
    mp.chain = chain_map(bath, cfg.verify_chain_length);

    InitialStateSpec spec;
    spec.kind = cfg.initial;
    if (spec.kind != InitialKind::BareBath) spec.ut = solve_ut(cfg.delta, bath);

    MpsConfig mc = cfg.mps;
    mc.bond_dim = cfg.verify_bond_dim;
    mc.local_dim = cfg.verify_dense.fock;
    mc.obb_dim = cfg.verify_dense.fock;
    mc.max_local_dim = cfg.verify_dense.fock;
    mc.obb_override.clear();
    const PreparedState prep = prepare_initial_state(spec, mp, mc);
    const Mpo mpo = build_mpo(mp, mc.local_dim, prep.local_dims);

    EvolveOptions opt;
    opt.occupations = false;
    opt.check_chain_length = false;
    const TrajectoryRecord rec = evolve(prep.psi, mpo, cfg.tdvp, cfg.verify_time, opt);

    const DenseSystem sys(mp, cfg.verify_dense);
    const DenseState v0 = dense_state(spec, sys);
    const DenseTrajectory ref = dense_evolve(sys, v0.v, cfg.tdvp.dt, cfg.verify_time);

    const ComparisonReport rep = compare(rec.times, rec.sigma_z, ref.times, ref.sigma_z, "sigma_z", cfg.verify_tol);
    {
        auto os = open_output(cfg, "verify.csv");
        write_comparison_csv(os, rep);
    }
    std::cout << "verify: dense dimension " << sys.dim() << ", max |sigma_z deviation| = " << rep.max_deviation
              << " (tol " << rep.tol << ") " << (rep.pass ? "PASS" : "FAIL") << "\n";
    if (!rep.pass) {
        std::size_t worst = 0;
        for (std::size_t i = 0; i < rep.abs_diff.size(); ++i)
            if (rep.abs_diff[i] > rep.abs_diff[worst]) worst = i;
        std::cerr << "diagnostic: largest deviation at t=" << rep.times[worst] << " (mps " << rep.value_mps[worst]
                  << ", exact " << rep.value_dense[worst] << "); tdvp.dt=" << cfg.tdvp.dt
                  << ", bond_dim=" << mc.bond_dim << "\n";
        return exit_verify;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-boson Zeno dynamics with MPS/TDVP"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "config file (key = value with [sections])");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--threads", common.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_flag("--chain-double", common.chain_double, "run at twice the automatic chain length");
        sub->add_option("--override", common.overrides, "section.key=value, repeatable");
    };
    auto* chain = app.add_subcommand("chain", "write chain coefficients");
    auto* evolve_cmd = app.add_subcommand("evolve", "single trajectory");
    auto* zeno = app.add_subcommand("zeno", "decay rate against the measurement interval");
    auto* verify = app.add_subcommand("verify", "compare against exact propagation");
    for (auto* s : {chain, evolve_cmd, zeno, verify}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        const RunConfig cfg = resolve(common);
        if (chain->parsed()) return cmd_chain(cfg);
        if (evolve_cmd->parsed()) return cmd_evolve(cfg);
        if (zeno->parsed()) return cmd_zeno(cfg);
        return cmd_verify(cfg);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}
