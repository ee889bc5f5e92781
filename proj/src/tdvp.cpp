#include "sbzeno/tdvp.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <string>

#include "sbzeno/errors.hpp"
#include "linalg.hpp"

namespace sbzeno {

void TdvpConfig::validate() const {
    if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
    if (krylov_dim < 3) throw DomainError("krylov_dim must be >= 3");
    if (!(krylov_tol > 0.0)) throw DomainError("krylov_tol must be positive");
}

namespace {

using Env = std::vector<Mat>; // one matrix per MPO channel

Vec pack(const SiteTensor& a) {
    const Eigen::Index blk = a.left() * a.right();
    Vec v(blk * static_cast<Eigen::Index>(a.phys()));
    for (std::size_t n = 0; n < a.phys(); ++n)
        v.segment(static_cast<Eigen::Index>(n) * blk, blk) = Eigen::Map<const Vec>(a.blocks[n].data(), blk);
    return v;
}

void unpack(const Vec& v, SiteTensor& a) {
    const Eigen::Index l = a.left(), r = a.right(), blk = l * r;
    for (std::size_t n = 0; n < a.phys(); ++n)
        a.blocks[n] = Eigen::Map<const Mat>(v.data() + static_cast<Eigen::Index>(n) * blk, l, r);
}

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }
Mat shape(const Vec& v, Eigen::Index rows, Eigen::Index cols) { return Eigen::Map<const Mat>(v.data(), rows, cols); }

// Orthonormal rows spanning the rows of u first, completed from `prefer` (rows), then
// from Fock unit vectors. Components of u below the relative threshold are dropped.
Mat span_with_completion(const Mat& u, const Mat& prefer, Eigen::Index target) {
    const Eigen::Index dk = u.cols();
    Mat out(target, dk);
    Eigen::Index have = 0;
    const double scale = std::max(u.rowwise().norm().maxCoeff(), 1e-300);
    auto offer = [&](Vec v, double floor) {
        if (have >= target) return;
        const double n0 = v.norm();
        if (n0 == 0.0) return;
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < have; ++i) {
                const Vec row = out.row(i).transpose();
                v -= row.dot(v) * row;
            }
        const double n1 = v.norm();
        if (n1 <= floor) return;
        out.row(have++) = (v / n1).transpose();
    };
    for (Eigen::Index i = 0; i < u.rows(); ++i) offer(u.row(i).transpose(), 1e-11 * scale);
    for (Eigen::Index i = 0; i < prefer.rows(); ++i) offer(prefer.row(i).transpose(), 0.5);
    for (Eigen::Index n = 0; n < dk && have < target; ++n) {
        Vec e = Vec::Zero(dk);
        e(n) = 1.0;
        offer(e, 0.5);
    }
    if (have < target) throw NumericalError("could not complete optimized basis");
    return out;
}

// MPO terms of one site whose operators are multiples of a common operator.
struct OpGroup {
    Mat op;
    Eigen::SparseMatrix<cplx> op_transpose;
    bool identity{false};
    std::vector<std::pair<std::size_t, cplx>> members; // (term index, factor)
};

std::vector<OpGroup> group_terms(const MpoSite& w) {
    std::vector<OpGroup> groups;
    for (std::size_t t = 0; t < w.terms.size(); ++t) {
        const Mat& op = w.terms[t].op;
        Eigen::Index r = 0, c = 0;
        op.cwiseAbs().maxCoeff(&r, &c);
        bool placed = false;
        for (auto& g : groups) {
            const cplx ref = g.op(r, c);
            if (ref == cplx(0.0)) continue;
            const cplx f = op(r, c) / ref;
            if ((op - f * g.op).norm() <= 1e-14 * op.norm()) {
                g.members.emplace_back(t, f);
                placed = true;
                break;
            }
        }
        if (placed) continue;
        OpGroup g;
        g.op = op;
        g.identity = op.isIdentity(0.0);
        g.members.emplace_back(t, cplx(1.0));
        groups.push_back(std::move(g));
    }
    for (auto& g : groups) g.op_transpose = Mat(g.op.transpose()).sparseView();
    return groups;
}

class Sweeper {
public:
    Sweeper(MpsState& psi, const Mpo& mpo, const TdvpConfig& cfg, StepStats& stats)
        : psi_(psi), mpo_(mpo), cfg_(cfg), stats_(stats), n_(psi.size()), left_(n_ + 1),
          right_(n_ + 1), groups_(n_), proj_(n_) {
        if (mpo.size() != n_) throw DomainError("tdvp: MPO and MPS sizes differ");
        for (std::size_t j = 0; j < n_; ++j) {
            if (mpo.local_dim(j) != psi.local_dim(j))
                throw DomainError("tdvp: MPO local dimension differs from state at site " + std::to_string(j));
            groups_[j] = group_terms(mpo.sites[j]);
            term_group_.emplace_back(mpo.sites[j].terms.size());
            for (std::size_t g = 0; g < groups_[j].size(); ++g)
                for (const auto& [t, f] : groups_[j][g].members) term_group_[j][t] = {g, f};
            refresh_projection(j);
        }
        psi_.move_center(0);
        left_[0] = Env{Mat::Identity(1, 1)};
        right_[n_] = Env{Mat::Identity(1, 1)};
        for (std::size_t j = n_; j-- > 1;) right_[j] = extend_right(right_[j + 1], j);
    }

    void sweep(double dt) {
        const double half = cfg_.symmetric ? 0.5 * dt : dt;
        for (std::size_t j = 0; j < n_; ++j) {
            evolve_site(j, half);
            if (psi_.has_basis(j)) basis_branch(j, half, /*forward_first=*/true);
            if (j + 1 < n_) shift_right(j, half);
        }
        if (!cfg_.symmetric) {
            // bring the center back with pure gauge moves
            for (std::size_t j = n_ - 1; j > 0; --j) {
                auto [l, q] = linalg::thin_lq(psi_.sites[j].stacked_cols());
                psi_.sites[j].from_cols(q, psi_.sites[j].phys());
                for (auto& b : psi_.sites[j - 1].blocks) b = b * l;
                right_[j] = extend_right(right_[j + 1], j);
            }
            psi_.center = 0;
            return;
        }
        for (std::size_t j = n_; j-- > 0;) {
            if (psi_.has_basis(j)) basis_branch(j, half, /*forward_first=*/false);
            evolve_site(j, half);
            if (j > 0) shift_left(j, half);
        }
        psi_.center = 0;
    }

private:
    void refresh_projection(std::size_t j) {
        proj_[j].resize(groups_[j].size());
        for (std::size_t g = 0; g < groups_[j].size(); ++g) proj_[j][g] = psi_.project_op(j, groups_[j][g].op);
    }

    // projected operator of term t
    Mat term_projection(std::size_t j, std::size_t t) const {
        const auto& [g, f] = term_group_[j][t];
        return f * proj_[j][g];
    }

    Env zero_env(Eigen::Index channels, Eigen::Index dim) const {
        return Env(static_cast<std::size_t>(channels), Mat::Zero(dim, dim));
    }

    // T[m] = L_a A[m] for all m, mixed through the projected operator, then closed with A^dag.
    Env extend_left(const Env& l, std::size_t j) const {
        const SiteTensor& a = psi_.sites[j];
        const MpoSite& w = mpo_.sites[j];
        Env out = zero_env(w.right, a.right());
        const Eigen::Index dl = a.left(), dr = a.right(), d = static_cast<Eigen::Index>(a.phys());
        const Mat cols = a.stacked_cols(); // dl x (d*dr), block n = A[n]
        for (std::size_t t = 0; t < w.terms.size(); ++t) {
            const auto& term = w.terms[t];
            const Mat la_a = l[static_cast<std::size_t>(term.row)] * cols;
            const Mat mixed = Eigen::Map<const Mat>(la_a.data(), dl * dr, d) * term_projection(j, t).transpose();
            Mat& o = out[static_cast<std::size_t>(term.col)];
            for (Eigen::Index n = 0; n < d; ++n)
                o.noalias() += a.blocks[static_cast<std::size_t>(n)].adjoint() *
                               Eigen::Map<const Mat>(mixed.col(n).data(), dl, dr);
        }
        return out;
    }

    Env extend_right(const Env& r, std::size_t j) const {
        const SiteTensor& a = psi_.sites[j];
        const MpoSite& w = mpo_.sites[j];
        Env out = zero_env(w.left, a.left());
        const Eigen::Index dl = a.left(), dr = a.right(), d = static_cast<Eigen::Index>(a.phys());
        const Mat rows = a.stacked_rows(); // (d*dl) x dr, block n = A[n]
        for (std::size_t t = 0; t < w.terms.size(); ++t) {
            const auto& term = w.terms[t];
            const Mat ar = rows * r[static_cast<std::size_t>(term.col)];
            Mat packed(dl * dr, d);
            for (Eigen::Index m = 0; m < d; ++m)
                Eigen::Map<Mat>(packed.col(m).data(), dl, dr) = ar.middleRows(m * dl, dl);
            const Mat mixed = packed * term_projection(j, t).transpose();
            Mat& o = out[static_cast<std::size_t>(term.row)];
            for (Eigen::Index n = 0; n < d; ++n)
                o.noalias() += Eigen::Map<const Mat>(mixed.col(n).data(), dl, dr) *
                               a.blocks[static_cast<std::size_t>(n)].adjoint();
        }
        return out;
    }

    // vec(L_a X R_b) = (R_b^T kron L_a) vec(X), summed over the terms of each group of site j
    std::vector<Mat> site_kernels(std::size_t j) const {
        const MpoSite& w = mpo_.sites[j];
        std::vector<Mat> k(groups_[j].size());
        const Eigen::Index dl = psi_.sites[j].left(), dr = psi_.sites[j].right();
        for (std::size_t g = 0; g < groups_[j].size(); ++g) {
            Mat& kg = k[g];
            kg = Mat::Zero(dl * dr, dl * dr);
            for (const auto& [t, f] : groups_[j][g].members) {
                const Mat la = f * left_[j][static_cast<std::size_t>(w.terms[t].row)];
                const Mat& rb = right_[j + 1][static_cast<std::size_t>(w.terms[t].col)];
                for (Eigen::Index r1 = 0; r1 < dr; ++r1)
                    for (Eigen::Index r2 = 0; r2 < dr; ++r2) {
                        const cplx c = rb(r2, r1);
                        if (c != cplx(0.0)) kg.block(r1 * dl, r2 * dl, dl, dl) += c * la;
                    }
            }
        }
        return k;
    }

    // H_eff acting on the packed tensor of site j
    Vec apply_site(std::size_t j, const std::vector<Mat>& kern, const Vec& v) const {
        const Eigen::Index d = static_cast<Eigen::Index>(psi_.sites[j].phys());
        const Eigen::Index blk = v.size() / d;
        const Eigen::Map<const Mat> x(v.data(), blk, d); // column m = vec(A[m])
        Mat out = Mat::Zero(blk, d);
        for (std::size_t g = 0; g < kern.size(); ++g) {
            if (groups_[j][g].identity)
                out.noalias() += kern[g] * x;
            else
                out.noalias() += (kern[g] * x) * proj_[j][g].transpose();
        }
        return flatten(out);
    }

    Vec exp_apply(const std::function<Vec(const Vec&)>& h, const Vec& v, double tau, std::size_t site) {
        linalg::KrylovStats ks;
        try {
            Vec out = linalg::expm_lanczos(h, v, tau, cfg_.krylov_dim, cfg_.krylov_tol, &ks);
            stats_.matvecs += ks.matvecs;
            stats_.max_substeps = std::max(stats_.max_substeps, ks.substeps);
            return out;
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at site " + std::to_string(site));
        }
    }

    void evolve_site(std::size_t j, double tau) {
        SiteTensor& a = psi_.sites[j];
        const std::vector<Mat> kern = site_kernels(j);
        const Vec v = exp_apply([&](const Vec& x) { return apply_site(j, kern, x); }, pack(a), tau, j);
        unpack(v, a);
    }

    // Zero-site bond between sites j and j+1; left_[j+1] and right_[j+1] must be current.
    Mat evolve_bond(std::size_t j, const Mat& c, double tau) {
        const Env& le = left_[j + 1];
        const Env& re = right_[j + 1];
        const Eigen::Index rows = c.rows(), cols = c.cols();
        auto h = [&](const Vec& x) {
            const Mat m = shape(x, rows, cols);
            Mat out = Mat::Zero(rows, cols);
            for (std::size_t b = 0; b < le.size(); ++b) out.noalias() += le[b] * m * re[b];
            return flatten(out);
        };
        return shape(exp_apply(h, flatten(c), -tau, j), rows, cols);
    }

    void shift_right(std::size_t j, double tau) {
        auto [q, r] = linalg::thin_qr(psi_.sites[j].stacked_rows());
        psi_.sites[j].from_rows(q, psi_.sites[j].phys());
        left_[j + 1] = extend_left(left_[j], j);
        const Mat c = evolve_bond(j, r, tau);
        for (auto& b : psi_.sites[j + 1].blocks) b = c * b;
        psi_.center = j + 1;
    }

    void shift_left(std::size_t j, double tau) {
        auto [l, q] = linalg::thin_lq(psi_.sites[j].stacked_cols());
        psi_.sites[j].from_cols(q, psi_.sites[j].phys());
        right_[j] = extend_right(right_[j + 1], j);
        const Mat c = evolve_bond(j - 1, l, tau);
        for (auto& b : psi_.sites[j - 1].blocks) b = b * c;
        psi_.center = j - 1;
    }

    // Leaf branch of boson site j: (A|V) bond and the isometry V itself.
    // forward_first: A was just evolved, so do bond backward then V forward;
    // otherwise V forward then bond backward (mirror order).
    void basis_branch(std::size_t j, double tau, bool forward_first) {
        SiteTensor& a = psi_.sites[j];
        const Eigen::Index blk = a.left() * a.right();
        const auto d_o = static_cast<Eigen::Index>(a.phys());
        const Mat x = shape(pack(a), blk, d_o);
        auto [q, c] = linalg::thin_qr(x); // q: blk x k, c: k x d_o

        // M_g = <q_i| sum L_a (x) R_b |q_j> per operator group
        const auto& groups = groups_[j];
        const std::vector<Mat> kern = site_kernels(j);
        std::vector<Mat> env(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g) env[g] = q.adjoint() * (kern[g] * q);

        auto bond_backward = [&](Mat& cc) {
            const Eigen::Index rows = cc.rows(), cols = cc.cols();
            auto h = [&](const Vec& xv) {
                const Mat m = shape(xv, rows, cols);
                Mat out = Mat::Zero(rows, cols);
                for (std::size_t g = 0; g < env.size(); ++g) {
                    if (groups[g].identity)
                        out.noalias() += env[g] * m;
                    else
                        out.noalias() += env[g] * (m * proj_[j][g].transpose());
                }
                return flatten(out);
            };
            cc = shape(exp_apply(h, flatten(cc), -tau, j), rows, cols);
        };
        auto leaf_forward = [&](Mat& u) {
            const Eigen::Index rows = u.rows(), cols = u.cols();
            auto h = [&](const Vec& xv) {
                const Mat m = shape(xv, rows, cols);
                Mat out = Mat::Zero(rows, cols);
                for (std::size_t g = 0; g < env.size(); ++g) {
                    if (groups[g].identity)
                        out.noalias() += env[g] * m;
                    else
                        out.noalias() += env[g] * Mat(m * groups[g].op_transpose);
                }
                return flatten(out);
            };
            u = shape(exp_apply(h, flatten(u), tau, j), rows, cols);
        };

        Mat& v = psi_.basis[j];
        if (forward_first) bond_backward(c);
        Mat u = c * v; // k x d_k
        leaf_forward(u);
        Mat v_new = span_with_completion(u, v, d_o);
        c = u * v_new.adjoint();
        v = std::move(v_new);
        refresh_projection(j);
        if (!forward_first) bond_backward(c);

        const Mat xn = q * c;
        unpack(flatten(xn), a);
    }

    MpsState& psi_;
    const Mpo& mpo_;
    const TdvpConfig& cfg_;
    StepStats& stats_;
    std::size_t n_;
    std::vector<Env> left_, right_;
    std::vector<std::vector<OpGroup>> groups_;
    std::vector<std::vector<std::pair<std::size_t, cplx>>> term_group_;
    std::vector<std::vector<Mat>> proj_; // projected operator per group
};

} // namespace

void tdvp_step(MpsState& psi, const Mpo& mpo, const TdvpConfig& cfg, double dt, StepStats* stats) {
    cfg.validate();
    StepStats local;
    Sweeper sw(psi, mpo, cfg, stats ? *stats : local);
    sw.sweep(dt);
}

MpsState step(MpsState psi, const Mpo& mpo, const TdvpConfig& cfg) {
    tdvp_step(psi, mpo, cfg, cfg.dt);
    return psi;
}

void advance(MpsState& psi, const Mpo& mpo, const TdvpConfig& cfg, double duration) {
    if (duration < 0.0) throw DomainError("advance: negative duration");
    const double n = std::floor(duration / cfg.dt + 1e-9);
    const auto steps = static_cast<long>(n);
    for (long s = 0; s < steps; ++s) tdvp_step(psi, mpo, cfg, cfg.dt);
    const double rest = duration - static_cast<double>(steps) * cfg.dt;
    if (rest > 1e-12 * std::max(1.0, duration)) tdvp_step(psi, mpo, cfg, rest);
}

void record_snapshot(TrajectoryRecord& rec, double t, const MpsState& psi, const MpsState& psi0,
                     const Mpo& mpo, const EvolveOptions& opt) {
    const double nrm2 = overlap(psi, psi).real();
    rec.times.push_back(t);
    rec.norm.push_back(std::sqrt(nrm2));
    rec.sigma_z.push_back(expect_local(psi, sigma_z(), 0).real() / nrm2);
    rec.sigma_x.push_back(expect_local(psi, sigma_x(), 0).real() / nrm2);
    rec.energy.push_back(energy(psi, mpo));
    const cplx a = overlap(psi0, psi);
    rec.survival_amp.push_back(a);
    rec.fidelity.push_back(std::norm(a));
    if (opt.occupations || opt.star_chain) {
        if (opt.star_chain) {
            const Mat corr = one_body_correlations(psi);
            rec.chain_occ.push_back(corr.diagonal().real());
            rec.star_occ.push_back(star_occupations(*opt.star_chain, corr).occupation);
        } else {
            rec.chain_occ.push_back(chain_occupations(psi));
        }
    }
}

TrajectoryRecord evolve(const MpsState& psi0, const Mpo& mpo, const TdvpConfig& cfg, double T,
                        const EvolveOptions& opt) {
    cfg.validate();
    if (T < 0.0) throw DomainError("evolve: negative horizon");
    if (opt.record_every == 0) throw DomainError("evolve: record_every must be >= 1");
    const std::size_t needed = chain_length_for(opt.omega_c, T);
    if (opt.check_chain_length && psi0.boson_count() < needed + 1)
        std::cerr << "warning: chain of " << psi0.boson_count() << " sites is shorter than the "
                  << needed + 1 << " needed to avoid end reflections up to T=" << T << "\n";

    TrajectoryRecord rec;
    MpsState psi = canonicalize(psi0, 0);
    record_snapshot(rec, 0.0, psi, psi0, mpo, opt);
    const auto steps = static_cast<long>(std::floor(T / cfg.dt + 1e-9));
    double t = 0.0;
    for (long s = 1; s <= steps; ++s) {
        tdvp_step(psi, mpo, cfg, cfg.dt);
        t = static_cast<double>(s) * cfg.dt;
        if (s % static_cast<long>(opt.record_every) == 0 || (s == steps && T - t <= 1e-12))
            record_snapshot(rec, t, psi, psi0, mpo, opt);
    }
    const double rest = T - t;
    if (rest > 1e-12 * std::max(1.0, T)) {
        tdvp_step(psi, mpo, cfg, rest);
        record_snapshot(rec, T, psi, psi0, mpo, opt);
    }
    if (opt.final_state) *opt.final_state = std::move(psi);
    return rec;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
    const auto old = os.precision(15);
    os << "t,sigma_z,sigma_x,norm,energy,re_survival,im_survival,fidelity\n";
    for (std::size_t i = 0; i < rec.size(); ++i)
        os << rec.times[i] << "," << rec.sigma_z[i] << "," << rec.sigma_x[i] << "," << rec.norm[i] << ","
           << rec.energy[i] << "," << rec.survival_amp[i].real() << "," << rec.survival_amp[i].imag() << ","
           << rec.fidelity[i] << "\n";
    os.precision(old);
}

void write_occupation_csv(std::ostream& os, const TrajectoryRecord& rec) {
    const auto old = os.precision(15);
    os << "t,site,n\n";
    for (std::size_t i = 0; i < rec.chain_occ.size(); ++i)
        for (Eigen::Index k = 0; k < rec.chain_occ[i].size(); ++k)
            os << rec.times[i] << "," << k << "," << rec.chain_occ[i](k) << "\n";
    os.precision(old);
}

} // namespace sbzeno
