#include "sbzeno/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "sbzeno/errors.hpp"

namespace sbzeno {

void ModelParams::validate() const {
    if (!(delta > 0.0)) throw DomainError("qubit splitting delta must be positive");
    if (chain.sites() == 0) throw DomainError("model has no chain");
}

std::size_t Mpo::max_bond() const {
    Eigen::Index d = 1;
    for (const auto& s : sites) d = std::max({d, s.left, s.right});
    return static_cast<std::size_t>(d);
}

Mpo build_mpo(const ModelParams& mp, std::size_t fock, const std::vector<std::size_t>& local_dims) {
    mp.validate();
    const ChainSystem& ch = mp.chain;
    const std::size_t nb = ch.sites();
    if (!local_dims.empty() && local_dims.size() != nb)
        throw DomainError("build_mpo: local dimension list does not match the chain");

    Mpo mpo;
    mpo.sites.resize(nb + 1);

    MpoSite& spin = mpo.sites[0];
    spin.left = 1;
    spin.right = 4;
    spin.terms.push_back({0, 0, 0.5 * mp.delta * sigma_z()});
    if (ch.c0 != 0.0) spin.terms.push_back({0, 1, 0.5 * ch.c0 * sigma_x()});
    spin.terms.push_back({0, 3, Mat::Identity(2, 2)});

    for (std::size_t k = 0; k < nb; ++k) {
        const std::size_t d = local_dims.empty() ? fock : local_dims[k];
        const Mat a = boson_annihilation(d);
        const Mat ad = boson_creation(d);
        const Mat id = Mat::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        const bool last = k + 1 == nb;
        const auto kk = static_cast<Eigen::Index>(k);

        MpoSite& s = mpo.sites[k + 1];
        s.left = 4;
        s.right = last ? 1 : 4;
        s.terms.push_back({0, 0, id});
        if (k == 0) {
            s.terms.push_back({1, 0, a + ad});
        } else {
            s.terms.push_back({1, 0, a});
            s.terms.push_back({2, 0, ad});
        }
        s.terms.push_back({3, 0, ch.eps(kk) * boson_number(d)});
        if (!last) {
            s.terms.push_back({3, 1, ch.hop(kk) * ad});
            s.terms.push_back({3, 2, ch.hop(kk) * a});
            s.terms.push_back({3, 3, id});
        }
    }
    return mpo;
}

Mat mpo_to_dense(const Mpo& mpo) {
    // acc[b] = partial operator ending in channel b
    std::vector<Mat> acc(1, Mat::Identity(1, 1));
    for (const auto& site : mpo.sites) {
        const auto d = static_cast<Eigen::Index>(site.terms.front().op.rows());
        const Eigen::Index dim = acc.front().rows() * d;
        std::vector<Mat> next(static_cast<std::size_t>(site.right), Mat::Zero(dim, dim));
        for (const auto& t : site.terms) {
            const Mat& left = acc[static_cast<std::size_t>(t.row)];
            Mat& out = next[static_cast<std::size_t>(t.col)];
            for (Eigen::Index i = 0; i < left.rows(); ++i)
                for (Eigen::Index j = 0; j < left.cols(); ++j)
                    if (left(i, j) != cplx(0.0)) out.block(i * d, j * d, d, d) += left(i, j) * t.op;
        }
        acc = std::move(next);
    }
    return acc.front();
}

MpsState apply_mpo(const Mpo& mpo, const MpsState& psi) {
    if (mpo.size() != psi.size()) throw DomainError("apply_mpo: size mismatch");
    MpsState out;
    out.sites.resize(psi.size());
    out.basis.assign(psi.size(), Mat());
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const SiteTensor f = psi.full_site(j);
        const MpoSite& w = mpo.sites[j];
        if (f.phys() != mpo.local_dim(j)) throw DomainError("apply_mpo: local dimension mismatch");
        const Eigen::Index l = f.left(), r = f.right();
        SiteTensor b(f.phys(), l * w.left, r * w.right);
        for (const auto& t : w.terms)
            for (Eigen::Index n = 0; n < t.op.rows(); ++n)
                for (Eigen::Index m = 0; m < t.op.cols(); ++m) {
                    const cplx c = t.op(n, m);
                    if (c == cplx(0.0)) continue;
                    b.blocks[static_cast<std::size_t>(n)].block(t.row * l, t.col * r, l, r) +=
                        c * f.blocks[static_cast<std::size_t>(m)];
                }
        out.sites[j] = std::move(b);
    }
    out.center = 0;
    return out;
}

double energy(const MpsState& psi, const Mpo& mpo) {
    const MpsState hpsi = apply_mpo(mpo, psi);
    return overlap(psi, hpsi).real() / overlap(psi, psi).real();
}

double variance_of_h(const MpsState& psi, const Mpo& mpo) {
    const MpsState hpsi = apply_mpo(mpo, psi);
    const double nrm = overlap(psi, psi).real();
    const double e = overlap(psi, hpsi).real() / nrm;
    const double h2 = overlap(hpsi, hpsi).real() / nrm;
    return h2 - e * e;
}

// ---------------------------------------------------------------------------
// variational polaron displacements

namespace {

double franck_condon(double eta, double delta, const DiscretizedBath& bath, Eigen::VectorXd* lambda,
                     Eigen::VectorXd* xi) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < bath.omega.size(); ++k) {
        const double w = bath.omega(k);
        const double x = w / (w + eta * delta);
        const double l = bath.g(k) * x / (2.0 * w);
        if (lambda) (*lambda)(k) = l;
        if (xi) (*xi)(k) = x;
        sum += l * l;
    }
    return std::exp(-2.0 * sum);
}

} // namespace

UtParameters solve_ut(double delta, const DiscretizedBath& bath, double tol, int max_iter) {
    if (!(tol > 0.0)) throw DomainError("solve_ut: tolerance must be positive");
    if (!(delta > 0.0)) throw DomainError("solve_ut: delta must be positive");
    UtParameters ut;
    ut.omega = bath.omega;
    ut.xi.resize(bath.omega.size());
    ut.lambda_star.resize(bath.omega.size());

    double eta = 1.0;
    double prev_change = 0.0;
    double mixing = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const double next = franck_condon(eta, delta, bath, nullptr, nullptr);
        const double change = next - eta;
        ut.iterations = it;
        ut.residual = std::abs(change);
        if (ut.residual <= tol) {
            eta = next;
            ut.converged = true;
            break;
        }
        if (prev_change * change < 0.0 && mixing == 1.0) {
            mixing = 0.5;
            ut.damped = true;
        }
        eta += mixing * change;
        prev_change = change;
    }
    ut.eta = eta;
    franck_condon(eta, delta, bath, &ut.lambda_star, &ut.xi);
    ut.residual = std::abs(franck_condon(eta, delta, bath, nullptr, nullptr) - eta);
    return ut;
}

void write_ut_csv(std::ostream& os, const UtParameters& ut) {
    const auto old = os.precision(17);
    os << "# eta=" << ut.eta << ",residual=" << ut.residual << ",converged=" << (ut.converged ? 1 : 0)
       << "\n";
    os << "k,omega_k,xi_k,lambda_k\n";
    for (Eigen::Index k = 0; k < ut.xi.size(); ++k)
        os << k << "," << ut.omega(k) << "," << ut.xi(k) << "," << ut.lambda_star(k) << "\n";
    os.precision(old);
}

// ---------------------------------------------------------------------------
// initial states

std::size_t chain_length_for_displacement(const DiscretizedBath& bath, const UtParameters& ut, double tol,
                                          std::size_t max_length) {
    if (!(tol > 0.0)) throw DomainError("displacement tolerance must be positive");
    if (ut.lambda_star.size() != static_cast<Eigen::Index>(bath.size()))
        throw DomainError("polaron parameters do not match the bath");
    const std::size_t cap = std::min(max_length, bath.size() - 1);
    const ChainSystem full = chain_map(bath, cap);
    const double total = ut.lambda_star.squaredNorm();
    double captured = 0.0;
    for (std::size_t l = 0; l < full.sites(); ++l) {
        const double m = full.star_to_chain.col(static_cast<Eigen::Index>(l)).dot(ut.lambda_star);
        captured += m * m;
        if (2.0 * (total - captured) <= tol) return std::max<std::size_t>(l, 1);
    }
    return cap;
}

std::string to_string(InitialKind k) {
    switch (k) {
    case InitialKind::BareBath: return "bare";
    case InitialKind::PhysicalBath: return "physical";
    case InitialKind::CoherencePlus: return "coherence";
    }
    return "?";
}

InitialKind initial_kind_from_string(const std::string& s) {
    if (s == "bare" || s == "bare_bath") return InitialKind::BareBath;
    if (s == "physical" || s == "physical_bath") return InitialKind::PhysicalBath;
    if (s == "coherence" || s == "coherence_plus") return InitialKind::CoherencePlus;
    throw DomainError("unknown initial state kind '" + s + "'");
}

void InitialStateSpec::validate() const {
    if (kind != InitialKind::BareBath && !ut)
        throw DomainError(to_string(kind) + " initial state needs UT displacements");
}

Eigen::VectorXd coherent_amplitudes(double mu, std::size_t d) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(d));
    if (d == 0) return c;
    c(0) = std::exp(-0.5 * mu * mu);
    for (Eigen::Index n = 1; n < c.size(); ++n) c(n) = c(n - 1) * mu / std::sqrt(static_cast<double>(n));
    return c;
}

std::size_t coherent_cutoff(double mu, double target, std::size_t floor, std::size_t cap) {
    for (std::size_t d = std::max<std::size_t>(floor, 1); d <= cap; ++d) {
        const double deficit = 1.0 - coherent_amplitudes(mu, d).squaredNorm();
        if (deficit <= target) return d;
    }
    throw NumericalError("coherent displacement " + std::to_string(mu) +
                         " needs a Fock cutoff above " + std::to_string(cap));
}

PreparedState prepare_initial_state(const InitialStateSpec& spec, const ModelParams& mp,
                                    const MpsConfig& cfg) {
    spec.validate();
    mp.validate();
    cfg.validate();
    const std::size_t nb = mp.chain.sites();

    PreparedState out;
    out.local_dims.assign(nb, cfg.local_dim);

    std::vector<SiteTensor> full(nb + 1);
    const double r2 = 1.0 / std::sqrt(2.0);

    if (spec.kind == InitialKind::BareBath) {
        full[0] = SiteTensor(2, 1, 1);
        full[0].blocks[0](0, 0) = 1.0;
        for (std::size_t k = 0; k < nb; ++k) {
            full[k + 1] = SiteTensor(cfg.local_dim, 1, 1);
            full[k + 1].blocks[0](0, 0) = 1.0;
        }
        out.psi = mps_from_full_sites(std::move(full), cfg);
        return out;
    }

    const Eigen::VectorXd mu = displacement_to_chain(mp.chain, spec.ut->lambda_star);
    out.chain_displacement = mu;
    const double per_site = cfg.truncation_target / static_cast<double>(nb);
    for (std::size_t k = 0; k < nb; ++k)
        out.local_dims[k] = coherent_cutoff(mu(static_cast<Eigen::Index>(k)), per_site, cfg.local_dim,
                                            cfg.max_local_dim);

    // |+> (x) Coh(-mu) and, for the physical bath, |-> (x) Coh(+mu)
    const bool two = spec.kind == InitialKind::PhysicalBath;
    const Eigen::Index w = two ? 2 : 1;
    full[0] = SiteTensor(2, 1, w);
    full[0].blocks[0](0, 0) = r2 * (two ? r2 : 1.0);
    full[0].blocks[1](0, 0) = r2 * (two ? r2 : 1.0);
    if (two) {
        full[0].blocks[0](0, 1) = r2 * r2;
        full[0].blocks[1](0, 1) = -r2 * r2;
    }
    double norm2 = 1.0;
    for (std::size_t k = 0; k < nb; ++k) {
        const std::size_t d = out.local_dims[k];
        const double m = mu(static_cast<Eigen::Index>(k));
        const Eigen::VectorXd minus = coherent_amplitudes(-m, d);
        const Eigen::VectorXd plus = coherent_amplitudes(m, d);
        norm2 *= minus.squaredNorm();
        const bool last = k + 1 == nb;
        SiteTensor s(d, w, last ? 1 : w);
        for (std::size_t n = 0; n < d; ++n) {
            const auto nn = static_cast<Eigen::Index>(n);
            s.blocks[n](0, 0) = minus(nn);
            if (two) s.blocks[n](1, last ? 0 : 1) = plus(nn);
        }
        full[k + 1] = std::move(s);
    }
    out.truncation_deficit = 1.0 - norm2;
    if (out.truncation_deficit > cfg.truncation_target)
        throw NumericalError("coherent-state truncation deficit " + std::to_string(out.truncation_deficit) +
                             " above target");
    out.psi = mps_from_full_sites(std::move(full), cfg);
    out.psi.normalize();
    return out;
}

std::optional<Eigen::Vector2cd> product_spin_state(const MpsState& psi) {
    const Eigen::Matrix2cd rho = qubit_density(psi);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
    if (es.eigenvalues()(1) < 1.0 - 1e-10) return std::nullopt;
    Eigen::Vector2cd v = es.eigenvectors().col(1);
    // fix the global phase so the largest component is real and positive
    const int big = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
    v *= std::abs(v(big)) / v(big);
    return v;
}

} // namespace sbzeno
