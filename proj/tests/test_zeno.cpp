#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "sbzeno/errors.hpp"
#include "sbzeno/zeno.hpp"
#include "support.hpp"

using namespace sbzeno;

namespace {

// exact propagator from the dense Hamiltonian
struct DenseProp {
    Mat u;
    Eigen::VectorXd e;
    explicit DenseProp(const Mat& h) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.real());
        u = es.eigenvectors().cast<cplx>();
        e = es.eigenvalues();
    }
    Vec apply(const Vec& v, double t) const {
        Vec c = u.adjoint() * v;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(cplx(0, -e(i) * t));
        return u * c;
    }
};

// evolve, keep the spin-up half, renormalize; returns the per-step probabilities
std::vector<double> dense_qubit_only(const DenseProp& prop, Vec v, double tau, std::size_t n) {
    std::vector<double> p;
    const Eigen::Index half = v.size() / 2;
    for (std::size_t k = 0; k < n; ++k) {
        v = prop.apply(v, tau);
        v.tail(half).setZero();
        p.push_back(v.squaredNorm());
        v /= v.norm();
    }
    return p;
}

SweepSetup small_setup(double s, double alpha) {
    SweepSetup su;
    su.sd = testing::density(s, alpha);
    su.modes = 400;
    su.delta = 0.1;
    su.chain_length = 6;
    su.mps = testing::full_config(6, 3);
    su.mps.obb_dim = 3;
    su.tdvp.dt = 0.1;
    return su;
}

} // namespace

TEST_CASE("measurement count and interval step") {
    CHECK(default_measurements(0.1, 1.0) == 31);
    CHECK(default_measurements(0.1, 0.05) == 628);
    CHECK(default_measurements(0.1, std::numbers::pi) == 10);
    CHECK(default_measurements(0.1, 40.0) == 1);
    CHECK_THROWS_AS(default_measurements(0.1, 0.0), DomainError);
    CHECK_THROWS_AS(default_measurements(-1.0, 1.0), DomainError);

    TdvpConfig c;
    c.dt = 0.1;
    CHECK(std::abs(interval_config(c, 0.25).dt - 0.25 / 3.0) < 1e-15);
    CHECK(interval_config(c, 0.05).dt == 0.05);
    CHECK(std::abs(interval_config(c, 1.0).dt - 0.1) < 1e-15);
    CHECK_THROWS_AS(interval_config(c, -1.0), DomainError);
}

TEST_CASE("decay rate fit") {
    const double tau = 0.7;
    std::vector<double> cum;
    for (int k = 1; k <= 12; ++k) cum.push_back(std::exp(-0.3 * k * tau));
    CHECK(std::abs(fit_decay_rate(tau, cum) - 0.3) < 1e-13);

    // slope through the origin, not through the first point
    const std::vector<double> bumpy = {0.9, 0.85, 0.7};
    double sxy = 0.0, sxx = 0.0;
    for (int k = 1; k <= 3; ++k) {
        sxy += k * tau * -std::log(bumpy[static_cast<std::size_t>(k - 1)]);
        sxx += k * tau * k * tau;
    }
    CHECK(std::abs(fit_decay_rate(tau, bumpy) - sxy / sxx) < 1e-14);
    CHECK(fit_decay_rate(tau, {1.0, 1.0}) == 0.0);
}

TEST_CASE("classification") {
    const std::vector<double> tau = {1, 2, 3, 4, 5};
    SUBCASE("monotone rise") {
        const Classification c = classify(tau, {0.1, 0.2, 0.3, 0.4, 0.5});
        CHECK(c.kind == ZenoClass::QzeOnly);
        CHECK_FALSE(c.peak_index.has_value());
        CHECK(std::abs(c.band - 0.01) < 1e-15);
    }
    SUBCASE("dip inside the band") {
        CHECK(classify(tau, {0.1, 0.5, 0.495, 0.5, 0.499}).kind == ZenoClass::QzeOnly);
    }
    SUBCASE("rise then fall") {
        const Classification c = classify(tau, {0.1, 0.3, 0.5, 0.4, 0.2});
        CHECK(c.kind == ZenoClass::QzeToQaze);
        REQUIRE(c.peak_index.has_value());
        CHECK(*c.peak_index == 2);
        CHECK(c.peak_tau == 3.0);
    }
    SUBCASE("slow drift is measured from the running maximum") {
        const Classification c = classify(tau, {0.5, 0.497, 0.494, 0.491, 0.488});
        CHECK(c.kind == ZenoClass::QzeToQaze);
        CHECK(*c.peak_index == 0);
    }
    SUBCASE("bad input") {
        CHECK_THROWS_AS(classify(tau, {0.1, 0.2}), DomainError);
        CHECK_THROWS_AS(classify({1, 1, 2}, {0.1, 0.2, 0.3}), DomainError);
    }
    CHECK(to_string(ZenoClass::QzeOnly) != to_string(ZenoClass::QzeToQaze));
    CHECK(scheme_from_string(to_string(Scheme::QubitOnly)) == Scheme::QubitOnly);
    CHECK(scheme_from_string(to_string(Scheme::WholeSystem)) == Scheme::WholeSystem);
    CHECK_THROWS_AS(scheme_from_string("bath"), DomainError);
}

TEST_CASE("decoupled qubit never decays") {
    const ModelParams mp = testing::small_model(1.0, 0.0, 0.1, 3);
    const Mpo mpo = build_mpo(mp, 4);
    const MpsState up = testing::product_state(Eigen::Vector2cd(1, 0), 4, 4, 2);
    TdvpConfig cfg;
    const cplx a = survival_amplitude(up, mpo, 2.0, cfg);
    CHECK(std::abs(a - std::exp(cplx(0, -0.1))) < 1e-12);
    CHECK(std::abs(decay_rate_whole(up, mpo, 2.0, cfg)) < 1e-11);

    QubitOnlyOptions opt;
    opt.record_every = 1;
    const QubitOnlyResult r = run_qubit_only(up, mpo, 2.0, 5, cfg, opt);
    REQUIRE(r.p.size() == 5);
    for (double p : r.p) CHECK(std::abs(p - 1.0) < 1e-12);
    CHECK(std::abs(r.gamma) < 1e-11);
    CHECK_FALSE(r.aborted);
    REQUIRE_FALSE(r.trace_fidelity.empty());
    for (double f : r.trace_fidelity) CHECK(std::abs(f - 1.0) < 1e-12);
}

TEST_CASE("whole-system amplitude against exact dynamics") {
    const ModelParams mp = testing::small_model(1.0, 0.4, 0.1, 2);
    const std::size_t d = 4;
    const Mpo mpo = build_mpo(mp, d);
    const MpsState up = testing::product_state(Eigen::Vector2cd(1, 0), 3, d, 8);
    const Vec v0 = to_dense(up);
    const DenseProp prop(testing::dense_hamiltonian(mp, d));
    TdvpConfig cfg;
    for (double tau : {0.3, 1.0, 4.5}) {
        CAPTURE(tau);
        const cplx a = survival_amplitude(up, mpo, tau, cfg);
        CHECK(std::abs(a - v0.dot(prop.apply(v0, tau))) < 1e-8);
        // projecting back onto the initial state n times gives |A|^(2n)
        CHECK(std::abs(decay_rate_whole(up, mpo, tau, cfg) + 2.0 / tau * std::log(std::abs(a))) < 1e-12);
    }
}

TEST_CASE("short-interval decay follows the energy variance") {
    const ModelParams mp = testing::small_model(1.0, 0.1, 0.1, 8, 2000);
    MpsConfig mc = testing::full_config(8, 4);
    mc.obb_dim = 4;
    const PreparedState prep = prepare_initial_state(InitialStateSpec{}, mp, mc);
    const Mpo mpo = build_mpo(mp, 8);
    const double var = variance_of_h(prep.psi, mpo);
    CHECK(std::abs(var - 0.025) < 1e-6);
    TdvpConfig cfg;
    for (double tau : {0.05, 0.1, 0.2}) {
        CAPTURE(tau);
        const double g = decay_rate_whole(prep.psi, mpo, tau, cfg);
        CHECK(std::abs(g / tau - var) < 0.05 * var);
        const double a2 = std::norm(survival_amplitude(prep.psi, mpo, tau, cfg));
        CHECK(std::abs((1.0 - a2) - var * tau * tau) < 0.05 * var * tau * tau);
    }
}

TEST_CASE("qubit-only measurements against exact dynamics") {
    const ModelParams mp = testing::small_model(1.0, 0.4, 0.1, 2);
    const std::size_t d = 4;
    const Mpo mpo = build_mpo(mp, d);
    const MpsState up = testing::product_state(Eigen::Vector2cd(1, 0), 3, d, 8);
    const DenseProp prop(testing::dense_hamiltonian(mp, d));
    TdvpConfig cfg;
    const double tau = 2.0;
    const std::size_t n = 6;
    const QubitOnlyResult r = run_qubit_only(up, mpo, tau, n, cfg);
    const std::vector<double> ref = dense_qubit_only(prop, to_dense(up), tau, n);
    REQUIRE(r.p.size() == n);
    REQUIRE(r.cumulative.size() == n);
    double cum = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(r.p[k] - ref[k]) < 1e-8);
        cum *= r.p[k];
        CHECK(std::abs(r.cumulative[k] - cum) < 1e-14);
    }
    CHECK(std::abs(r.gamma - fit_decay_rate(tau, r.cumulative)) < 1e-15);
    // the bath keeps its excitations, so later measurements differ from the first
    CHECK(std::abs(r.p[3] - r.p[0]) > 1e-6);
}

TEST_CASE("a single qubit measurement") {
    const ModelParams mp = testing::small_model(1.0, 0.3, 0.1, 4);
    const Mpo mpo = build_mpo(mp, 5);
    const MpsState up = testing::product_state(Eigen::Vector2cd(1, 0), 5, 5, 4, 3);
    TdvpConfig cfg;
    const double tau = 3.0;
    EvolveOptions eo;
    eo.check_chain_length = false;
    eo.occupations = false;
    const TrajectoryRecord tr = evolve(up, mpo, interval_config(cfg, tau), tau, eo);
    const double p1 = 0.5 * (1.0 + tr.sigma_z.back());
    const QubitOnlyResult r = run_qubit_only(up, mpo, tau, 1, cfg);
    REQUIRE(r.p.size() == 1);
    CHECK(std::abs(r.p[0] - p1) < 1e-10);
    CHECK(std::abs(r.gamma + std::log(p1) / tau) < 1e-10);
    // p1 >= |A|^2: the qubit projection keeps more than the whole-system one
    CHECK(r.p[0] >= std::norm(survival_amplitude(up, mpo, tau, cfg)));
}

TEST_CASE("fidelity traces") {
    const ModelParams mp = testing::small_model(1.0, 0.3, 0.1, 4);
    const Mpo mpo = build_mpo(mp, 5);
    const MpsState up = testing::product_state(Eigen::Vector2cd(1, 0), 5, 5, 4, 3);
    TdvpConfig cfg;
    cfg.dt = 0.25;
    const double tau = 1.0;
    QubitOnlyOptions opt;
    opt.record_every = 2;
    opt.star_chain = &mp.chain;
    const QubitOnlyResult r = run_qubit_only(up, mpo, tau, 4, cfg, opt);
    REQUIRE(r.fidelity_before.size() == 4);
    REQUIRE(r.fidelity_after.size() == 4);
    REQUIRE(r.star_occ_after.size() == 4);
    CHECK(std::abs(r.fidelity_before[0] - std::norm(survival_amplitude(up, mpo, tau, cfg))) < 1e-10);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(r.fidelity_after[k] >= r.fidelity_before[k] - 1e-12);
        CHECK(r.fidelity_after[k] <= 1.0 + 1e-12);
        CHECK((r.star_occ_after[k].array() >= -1e-12).all());
    }
    REQUIRE(r.trace_times.size() == r.trace_fidelity.size());
    CHECK(r.trace_times.front() == 0.0);
    CHECK(std::abs(r.trace_fidelity.front() - 1.0) < 1e-14);
    for (std::size_t i = 1; i < r.trace_times.size(); ++i) CHECK(r.trace_times[i] >= r.trace_times[i - 1]);
    CHECK(std::abs(r.trace_times.back() - 4.0) < 1e-12);

    const FidelityTrace ft = fidelity_trace(up, mpo, tau, 4, cfg, 2);
    REQUIRE(ft.at_measurements.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(ft.at_measurements[k] - r.fidelity_after[k]) < 1e-12);
}

TEST_CASE("measurement needs a product initial state") {
    const ModelParams mp = testing::small_model(1.0, 0.3, 0.1, 3);
    const Mpo mpo = build_mpo(mp, 4);
    const MpsState psi = testing::random_mps(4, 4, 4, 3);
    CHECK_THROWS_AS(run_qubit_only(psi, mpo, 1.0, 2, TdvpConfig{}), DomainError);
    const MpsState up = testing::product_state(Eigen::Vector2cd(1, 0), 4, 4, 2);
    CHECK_THROWS_AS(run_qubit_only(up, mpo, 1.0, 0, TdvpConfig{}), DomainError);
}

TEST_CASE("sweep input checks") {
    SweepSetup su = small_setup(1.0, 0.1);
    CHECK_THROWS_AS(sweep_tau(su, Scheme::WholeSystem, {}), DomainError);
    CHECK_THROWS_AS(sweep_tau(su, Scheme::WholeSystem, {1.0, 0.5}), DomainError);
    CHECK_THROWS_AS(sweep_tau(su, Scheme::WholeSystem, {0.0, 0.5}), DomainError);
    su.measurements = 100;
    CHECK_THROWS_AS(sweep_tau(su, Scheme::QubitOnly, {1.0}), DomainError);
    su.horizon_cap = false;
    su.measurements = 2;
    CHECK_NOTHROW(sweep_tau(su, Scheme::QubitOnly, {1.0}));
    su.initial = InitialKind::PhysicalBath;
    CHECK_THROWS_AS(sweep_tau(su, Scheme::QubitOnly, {1.0}), DomainError);
    su.threads = 0;
    CHECK_THROWS_AS(su.validate(), DomainError);
}

TEST_CASE("chain length for a sweep point") {
    SweepSetup su = small_setup(1.0, 0.1);
    su.chain_length = 0;
    CHECK(sweep_chain_length(su, 1.0) == 12);
    CHECK(sweep_chain_length(su, 30.0) == 20);
    su.chain_double = true;
    CHECK(sweep_chain_length(su, 30.0) == 40);
    su.chain_double = false;
    su.chain_length = 9;
    CHECK(sweep_chain_length(su, 30.0) == 9);
}

TEST_CASE("parallel sweeps are bit-identical") {
    SweepSetup su = small_setup(1.0, 0.2);
    const std::vector<double> grid = {0.5, 1.0, 2.0, 3.0, 5.0};
    for (Scheme sc : {Scheme::WholeSystem, Scheme::QubitOnly}) {
        su.threads = 1;
        const DecayRateCurve one = sweep_tau(su, sc, grid);
        su.threads = 2;
        const DecayRateCurve two = sweep_tau(su, sc, grid);
        REQUIRE(one.points.size() == grid.size());
        std::ostringstream a, b;
        write_curve_csv(a, one);
        write_curve_csv(b, two);
        CHECK(a.str() == b.str());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(one.points[i].gamma == two.points[i].gamma);
            CHECK(one.points[i].tau == grid[i]);
            CHECK(one.points[i].gamma > 0.0);
        }
    }
}

TEST_CASE("sweep output") {
    SweepSetup su = small_setup(1.0, 0.2);
    su.keep_traces = true;
    const DecayRateCurve whole = sweep_tau(su, Scheme::WholeSystem, {1.0, 2.0});
    const DecayRateCurve qubit = sweep_tau(su, Scheme::QubitOnly, {1.0, 2.0});
    CHECK(whole.points[0].measurements == 1);
    CHECK(qubit.points[0].measurements == 31);
    CHECK(qubit.points[1].measurements == 15);

    std::ostringstream c;
    write_curve_csv(c, whole);
    CHECK(c.str().rfind("# classification=", 0) == 0);
    CHECK(c.str().find("\ntau,delta_tau,gamma,scheme,measurements,chain_sites,qaze,peak,aborted\n") != std::string::npos);

    std::ostringstream s;
    write_survival_csv(s, qubit);
    CHECK(s.str().rfind("tau,k,p_k,survival\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : s.str()) lines += ch == '\n';
    CHECK(lines == 1 + 31 + 15);

    const DecayPoint& pt = qubit.points[0];
    CHECK(pt.fidelity_after.size() == 31);
    CHECK(pt.star_occ_after.size() == 31);
    CHECK(pt.star_omega.size() == 400);
    std::ostringstream f, o;
    write_fidelity_csv(f, pt);
    write_star_occupation_csv(o, pt);
    CHECK(f.str().rfind("t,fidelity\n", 0) == 0);
    CHECK(o.str().rfind("k,omega,n\n", 0) == 0);
}
