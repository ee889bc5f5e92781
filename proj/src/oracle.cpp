#include "sbzeno/oracle.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "sbzeno/errors.hpp"

namespace sbzeno {

DenseSystem::DenseSystem(const ModelParams& mp, const DenseSystemConfig& cfg) : cfg_(cfg), mp_(mp) {
    mp.validate();
    if (cfg.fock < 2 || cfg.fock > 255) throw DomainError("oracle: Fock cutoff must be in [2, 255]");
    sites_ = mp.chain.sites();
    if (sites_ == 0) throw DomainError("oracle: empty chain");
    if (static_cast<double>(sites_ + 1) * std::log2(static_cast<double>(cfg.fock)) > 62.0)
        throw DomainError("oracle: basis labels do not fit in 64 bits");

    // enumerate in lexicographic order, spin most significant
    std::vector<std::uint8_t> occ(sites_ + 1, 0);
    const std::size_t cap = cfg.photon_cap == 0 ? sites_ * (cfg.fock - 1) : cfg.photon_cap;
    auto rec = [&](auto&& self, std::size_t k, std::size_t left) -> void {
        if (k == sites_ + 1) {
            if (states_.size() >= cfg.max_dim)
                throw DomainError("oracle: dimension exceeds cap " + std::to_string(cfg.max_dim));
            states_.push_back(occ);
            return;
        }
        const std::size_t top = std::min(cfg.fock - 1, left);
        for (std::size_t n = 0; n <= top; ++n) {
            occ[k] = static_cast<std::uint8_t>(n);
            self(self, k + 1, left - n);
        }
        occ[k] = 0;
    };
    for (std::uint8_t s = 0; s < 2; ++s) {
        occ[0] = s;
        rec(rec, 1, cap);
    }
    lookup_.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) lookup_.emplace(key(states_[i]), static_cast<Eigen::Index>(i));

    const ChainSystem& ch = mp.chain;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(states_.size() * (2 * sites_ + 2));
    std::vector<std::uint8_t> tmp;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto& st = states_[i];
        const auto row = static_cast<Eigen::Index>(i);
        double diag = st[0] == 0 ? 0.5 * mp.delta : -0.5 * mp.delta;
        for (std::size_t k = 0; k < sites_; ++k) diag += ch.eps(static_cast<Eigen::Index>(k)) * st[k + 1];
        if (diag != 0.0) trip.emplace_back(row, row, diag);

        // sigma_x b_0^dag (and its transpose through symmetry)
        if (st[1] + 1u < cfg.fock) {
            tmp = st;
            tmp[0] ^= 1u;
            tmp[1] += 1;
            const Eigen::Index col = index_of(tmp);
            if (col >= 0) {
                const double amp = 0.5 * ch.c0 * std::sqrt(static_cast<double>(st[1]) + 1.0);
                trip.emplace_back(col, row, amp);
                trip.emplace_back(row, col, amp);
            }
        }
        // t_k b_k^dag b_{k+1}
        for (std::size_t k = 0; k + 1 < sites_; ++k) {
            if (st[k + 2] == 0 || st[k + 1] + 1u >= cfg.fock) continue;
            tmp = st;
            tmp[k + 1] += 1;
            tmp[k + 2] -= 1;
            const Eigen::Index col = index_of(tmp);
            if (col < 0) continue;
            const double amp = ch.hop(static_cast<Eigen::Index>(k)) *
                               std::sqrt((static_cast<double>(st[k + 1]) + 1.0) * static_cast<double>(st[k + 2]));
            trip.emplace_back(col, row, amp);
            trip.emplace_back(row, col, amp);
        }
    }
    h_.resize(dim(), dim());
    h_.setFromTriplets(trip.begin(), trip.end());
    h_.makeCompressed();
}

std::uint64_t DenseSystem::key(const std::vector<std::uint8_t>& occ) const {
    std::uint64_t k = 0;
    for (auto n : occ) k = k * cfg_.fock + n;
    return k;
}

Eigen::Index DenseSystem::index_of(const std::vector<std::uint8_t>& occ) const {
    if (occ.size() != sites_ + 1) return -1;
    for (std::size_t k = 1; k < occ.size(); ++k)
        if (occ[k] >= cfg_.fock) return -1;
    const auto it = lookup_.find(key(occ));
    return it == lookup_.end() ? -1 : it->second;
}

double DenseSystem::expect_sigma_z(const Vec& v) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i) acc += (states_[static_cast<std::size_t>(i)][0] == 0 ? 1.0 : -1.0) * std::norm(v(i));
    return acc / v.squaredNorm();
}

double DenseSystem::expect_sigma_x(const Vec& v) const {
    cplx acc = 0.0;
    std::vector<std::uint8_t> tmp;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        tmp = states_[static_cast<std::size_t>(i)];
        tmp[0] ^= 1u;
        const Eigen::Index j = index_of(tmp);
        if (j >= 0) acc += std::conj(v(j)) * v(i);
    }
    return acc.real() / v.squaredNorm();
}

Eigen::VectorXd DenseSystem::chain_occupations(const Vec& v) const {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sites_));
    for (Eigen::Index i = 0; i < dim(); ++i) {
        const double p = std::norm(v(i));
        const auto& st = states_[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < sites_; ++k) n(static_cast<Eigen::Index>(k)) += p * st[k + 1];
    }
    return n / v.squaredNorm();
}

DenseState dense_state(const InitialStateSpec& spec, const DenseSystem& sys, double max_deficit) {
    spec.validate();
    DenseState out;
    out.v = Vec::Zero(sys.dim());
    const std::size_t sites = sys.chain_sites();
    if (spec.kind == InitialKind::BareBath) {
        std::vector<std::uint8_t> occ(sites + 1, 0);
        out.v(sys.index_of(occ)) = 1.0;
        return out;
    }
    const Eigen::VectorXd mu = displacement_to_chain(sys.params().chain, spec.ut->lambda_star);
    const auto d = static_cast<Eigen::Index>(sys.fock());
    // per-site coherent amplitudes for -mu and +mu
    std::vector<Eigen::VectorXd> minus(sites), plus(sites);
    for (std::size_t k = 0; k < sites; ++k) {
        const double m = mu(static_cast<Eigen::Index>(k));
        minus[k].resize(d);
        plus[k].resize(d);
        double fact = 1.0;
        for (Eigen::Index n = 0; n < d; ++n) {
            if (n > 0) fact *= static_cast<double>(n);
            const double base = std::exp(-0.5 * m * m) / std::sqrt(fact);
            minus[k](n) = base * std::pow(-m, static_cast<double>(n));
            plus[k](n) = base * std::pow(m, static_cast<double>(n));
        }
    }
    const bool two = spec.kind == InitialKind::PhysicalBath;
    const double r2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < sys.dim(); ++i) {
        const auto& st = sys.state(i);
        double cm = 1.0, cp = 1.0;
        for (std::size_t k = 0; k < sites; ++k) {
            cm *= minus[k](st[k + 1]);
            cp *= plus[k](st[k + 1]);
        }
        const double sign = st[0] == 0 ? 1.0 : -1.0;
        // <s|+> = 1/sqrt2, <s|-> = sign/sqrt2
        out.v(i) = two ? 0.5 * (cm + sign * cp) : r2 * cm;
    }
    out.deficit = 1.0 - out.v.squaredNorm();
    if (out.deficit > max_deficit)
        throw NumericalError("oracle: coherent truncation deficit " + std::to_string(out.deficit) +
                             " exceeds " + std::to_string(max_deficit));
    out.v.normalize();
    return out;
}

namespace {

// Arnoldi on span{v, Hv, ...}; the small exponential comes from the matrix-function module.
bool arnoldi_piece(const Eigen::SparseMatrix<double>& h, const Vec& v, double t, double tol, int m_max,
                   Vec& out, PropagateStats& st) {
    const double beta = v.norm();
    if (beta == 0.0) {
        out = v;
        return true;
    }
    const Eigen::Index n = v.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(m_max, n));
    Mat q(n, m + 1);
    Mat hess = Mat::Zero(m + 1, m);
    q.col(0) = v / beta;
    for (int j = 0; j < m; ++j) {
        Vec w = h * q.col(j);
        ++st.matvecs;
        for (int i = 0; i <= j; ++i) {
            hess(i, j) = q.col(i).dot(w);
            w -= hess(i, j) * q.col(i);
        }
        for (int i = 0; i <= j; ++i) { // second Gram-Schmidt pass
            const cplx c = q.col(i).dot(w);
            hess(i, j) += c;
            w -= c * q.col(i);
        }
        const double hn = w.norm();
        const int dim = j + 1;
        const Mat small = (cplx(0.0, -t) * hess.topLeftCorner(dim, dim)).exp();
        const double err = beta * hn * std::abs(small(dim - 1, 0));
        if (hn < 1e-14 || err < tol || dim == n) {
            out = beta * (q.leftCols(dim) * small.col(0));
            return true;
        }
        if (j + 1 < m) {
            hess(j + 1, j) = hn;
            q.col(j + 1) = w / hn;
        }
    }
    return false;
}

} // namespace

Vec krylov_propagate(const Eigen::SparseMatrix<double>& h, const Vec& v, double t, double tol,
                     PropagateStats* stats) {
    PropagateStats local;
    PropagateStats& st = stats ? *stats : local;
    if (t == 0.0) return v;
    const int m_max = 30;
    Vec cur = v;
    double done = 0.0;
    double step = t;
    int halvings = 0;
    while (std::abs(t - done) > 1e-15 * std::abs(t)) {
        if (std::abs(step) > std::abs(t - done)) step = t - done;
        Vec next;
        const double local_tol = tol * std::abs(step) / std::abs(t);
        if (arnoldi_piece(h, cur, step, local_tol, m_max, next, st)) {
            cur = std::move(next);
            done += step;
            ++st.substeps;
        } else {
            step *= 0.5;
            if (++halvings > 60) throw NumericalError("oracle: Krylov propagation did not converge");
        }
    }
    return cur;
}

Vec krylov_propagate(const DenseSystem& sys, const Vec& v, double t, double tol, PropagateStats* stats) {
    if (v.size() != sys.dim()) throw DomainError("oracle: vector dimension mismatch");
    return krylov_propagate(sys.hamiltonian(), v, t, tol, stats);
}

DenseTrajectory dense_evolve(const DenseSystem& sys, const Vec& v0, double dt, double T, double tol) {
    if (!(dt > 0.0) || T < 0.0) throw DomainError("oracle: need dt > 0 and T >= 0");
    DenseTrajectory tr;
    Vec v = v0;
    const auto steps = static_cast<long>(std::floor(T / dt + 1e-9));
    for (long k = 0; k <= steps; ++k) {
        if (k > 0) v = krylov_propagate(sys, v, dt, tol);
        tr.times.push_back(static_cast<double>(k) * dt);
        tr.sigma_z.push_back(sys.expect_sigma_z(v));
        tr.sigma_x.push_back(sys.expect_sigma_x(v));
        tr.norm.push_back(v.norm());
    }
    return tr;
}

ComparisonReport compare(const std::vector<double>& times_mps, const std::vector<double>& values_mps,
                         const std::vector<double>& times_dense, const std::vector<double>& values_dense,
                         const std::string& observable, double tol) {
    if (times_mps.size() != values_mps.size() || times_dense.size() != values_dense.size())
        throw DomainError("compare: times and values differ in length");
    if (times_mps.size() != times_dense.size()) throw DomainError("compare: time grids differ in length");
    ComparisonReport rep;
    rep.observable = observable;
    rep.tol = tol;
    for (std::size_t i = 0; i < times_mps.size(); ++i) {
        if (std::abs(times_mps[i] - times_dense[i]) > 1e-9 * std::max(1.0, std::abs(times_dense[i])))
            throw DomainError("compare: time grids differ at index " + std::to_string(i));
        const double diff = std::abs(values_mps[i] - values_dense[i]);
        rep.times.push_back(times_mps[i]);
        rep.value_mps.push_back(values_mps[i]);
        rep.value_dense.push_back(values_dense[i]);
        rep.abs_diff.push_back(diff);
        rep.max_deviation = std::max(rep.max_deviation, diff);
    }
    rep.pass = rep.max_deviation <= tol;
    return rep;
}

void write_comparison_csv(std::ostream& os, const ComparisonReport& rep) {
    const auto old = os.precision(15);
    os << "# observable=" << rep.observable << ",max_deviation=" << rep.max_deviation << ",tol=" << rep.tol
       << ",result=" << (rep.pass ? "PASS" : "FAIL") << "\n";
    os << "t,value_mps,value_dense,abs_diff\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        os << rep.times[i] << "," << rep.value_mps[i] << "," << rep.value_dense[i] << "," << rep.abs_diff[i] << "\n";
    os.precision(old);
}

} // namespace sbzeno
