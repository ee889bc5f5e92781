#include "sbzeno/mps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "sbzeno/errors.hpp"
#include "linalg.hpp"

namespace sbzeno {

// ---------------------------------------------------------------------------
// config

void MpsConfig::validate() const {
    if (bond_dim < 1) throw DomainError("bond dimension must be >= 1");
    if (local_dim < 1) throw DomainError("local Fock dimension must be >= 1");
    if (obb_dim < 1 || obb_dim > local_dim)
        throw DomainError("optimized basis dimension must satisfy 1 <= d_O <= d_k");
    for (auto d : obb_override)
        if (d > local_dim) throw DomainError("per-site d_O override exceeds d_k");
    if (max_local_dim < local_dim) throw DomainError("max_local_dim must be >= local_dim");
}

std::size_t MpsConfig::obb_for(std::size_t boson) const {
    if (boson < obb_override.size() && obb_override[boson] > 0) return obb_override[boson];
    return obb_dim;
}

// ---------------------------------------------------------------------------
// site tensors

SiteTensor::SiteTensor(std::size_t phys, Eigen::Index left, Eigen::Index right)
    : blocks(phys, Mat::Zero(left, right)) {}

Mat SiteTensor::stacked_rows() const {
    const Eigen::Index l = left(), r = right();
    Mat m(l * static_cast<Eigen::Index>(phys()), r);
    for (std::size_t n = 0; n < phys(); ++n) m.middleRows(static_cast<Eigen::Index>(n) * l, l) = blocks[n];
    return m;
}

Mat SiteTensor::stacked_cols() const {
    const Eigen::Index l = left(), r = right();
    Mat m(l, r * static_cast<Eigen::Index>(phys()));
    for (std::size_t n = 0; n < phys(); ++n) m.middleCols(static_cast<Eigen::Index>(n) * r, r) = blocks[n];
    return m;
}

void SiteTensor::from_rows(const Mat& m, std::size_t phys) {
    const Eigen::Index l = m.rows() / static_cast<Eigen::Index>(phys);
    blocks.resize(phys);
    for (std::size_t n = 0; n < phys; ++n) blocks[n] = m.middleRows(static_cast<Eigen::Index>(n) * l, l);
}

void SiteTensor::from_cols(const Mat& m, std::size_t phys) {
    const Eigen::Index r = m.cols() / static_cast<Eigen::Index>(phys);
    blocks.resize(phys);
    for (std::size_t n = 0; n < phys; ++n) blocks[n] = m.middleCols(static_cast<Eigen::Index>(n) * r, r);
}

double SiteTensor::squared_norm() const {
    double s = 0.0;
    for (const auto& b : blocks) s += b.squaredNorm();
    return s;
}

// ---------------------------------------------------------------------------
// local operators

Mat boson_annihilation(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    Mat a = Mat::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

Mat boson_creation(std::size_t d) { return boson_annihilation(d).adjoint(); }

Mat boson_number(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    Mat m = Mat::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
    return m;
}

Mat sigma_x() {
    Mat m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

Mat sigma_y() {
    Mat m(2, 2);
    m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    return m;
}

Mat sigma_z() {
    Mat m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

// ---------------------------------------------------------------------------
// MpsState

std::size_t MpsState::local_dim(std::size_t j) const {
    return has_basis(j) ? static_cast<std::size_t>(basis[j].cols()) : sites[j].phys();
}

std::size_t MpsState::max_bond() const {
    Eigen::Index d = 1;
    for (const auto& s : sites) d = std::max({d, s.left(), s.right()});
    return static_cast<std::size_t>(d);
}

SiteTensor MpsState::full_site(std::size_t j) const {
    if (!has_basis(j)) return sites[j];
    const Mat& v = basis[j];
    const SiteTensor& a = sites[j];
    SiteTensor out(static_cast<std::size_t>(v.cols()), a.left(), a.right());
    for (Eigen::Index n = 0; n < v.cols(); ++n)
        for (std::size_t k = 0; k < a.phys(); ++k) {
            const cplx c = v(static_cast<Eigen::Index>(k), n);
            if (c != cplx(0.0)) out.blocks[static_cast<std::size_t>(n)] += c * a.blocks[k];
        }
    return out;
}

Mat MpsState::project_op(std::size_t j, const Mat& op) const {
    if (static_cast<std::size_t>(op.rows()) != local_dim(j) || op.rows() != op.cols())
        throw DomainError("operator dimension " + std::to_string(op.rows()) +
                          " does not match local dimension " + std::to_string(local_dim(j)) +
                          " at site " + std::to_string(j));
    if (!has_basis(j)) return op;
    return basis[j].conjugate() * op * basis[j].transpose();
}

void MpsState::move_center(std::size_t target) {
    if (target >= size()) throw DomainError("orthogonality center out of range");
    while (center < target) {
        const std::size_t j = center;
        auto [q, r] = linalg::thin_qr(sites[j].stacked_rows());
        sites[j].from_rows(q, sites[j].phys());
        for (auto& b : sites[j + 1].blocks) b = r * b;
        ++center;
    }
    while (center > target) {
        const std::size_t j = center;
        auto [l, q] = linalg::thin_lq(sites[j].stacked_cols());
        sites[j].from_cols(q, sites[j].phys());
        for (auto& b : sites[j - 1].blocks) b = b * l;
        --center;
    }
}

double MpsState::norm() const {
    return std::sqrt(std::max(0.0, overlap(*this, *this).real()));
}

void MpsState::normalize() {
    const double n = norm();
    if (n == 0.0) throw NumericalError("cannot normalize a zero state");
    for (auto& b : sites[center].blocks) b /= n;
}

void MpsState::check() const {
    if (sites.empty()) throw DomainError("empty MPS");
    if (basis.size() != sites.size()) throw DomainError("basis list size mismatch");
    if (sites.front().left() != 1 || sites.back().right() != 1)
        throw DomainError("MPS boundary bonds must be 1");
    for (std::size_t j = 0; j + 1 < size(); ++j)
        if (sites[j].right() != sites[j + 1].left())
            throw DomainError("bond mismatch between sites " + std::to_string(j) + " and " +
                              std::to_string(j + 1));
    for (std::size_t j = 0; j < size(); ++j)
        if (has_basis(j) && static_cast<std::size_t>(basis[j].rows()) != sites[j].phys())
            throw DomainError("isometry rows do not match site dimension at " + std::to_string(j));
    if (center >= size()) throw DomainError("center out of range");
}

double MpsState::gauge_error() const {
    double err = 0.0;
    for (std::size_t j = 0; j < size(); ++j) {
        if (j < center) {
            const Mat m = sites[j].stacked_rows();
            err = std::max(err, (m.adjoint() * m - Mat::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff());
        } else if (j > center) {
            const Mat m = sites[j].stacked_cols();
            err = std::max(err, (m * m.adjoint() - Mat::Identity(m.rows(), m.rows())).cwiseAbs().maxCoeff());
        }
        if (has_basis(j)) {
            const Mat& v = basis[j];
            err = std::max(err, (v * v.adjoint() - Mat::Identity(v.rows(), v.rows())).cwiseAbs().maxCoeff());
        }
    }
    return err;
}

// ---------------------------------------------------------------------------
// construction

namespace {

// Rows orthonormal to `existing` (rows), drawn from unit vectors in `order`.
Mat pad_rows(const Mat& existing, Eigen::Index target, const std::vector<Eigen::Index>& order) {
    const Eigen::Index width = existing.cols();
    Mat out(target, width);
    Eigen::Index have = std::min(existing.rows(), target);
    out.topRows(have) = existing.topRows(have);
    for (Eigen::Index c : order) {
        if (have >= target) break;
        Vec v = Vec::Zero(width);
        v(c) = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < have; ++i) {
                const Vec row = out.row(i).transpose();
                v -= row.dot(v) * row;
            }
        const double nv = v.norm();
        if (nv < 0.5) continue;
        out.row(have++) = (v / nv).transpose();
    }
    if (have < target) throw NumericalError("could not complete an orthonormal basis");
    return out;
}

} // namespace

MpsState mps_from_full_sites(std::vector<SiteTensor> full, const MpsConfig& cfg) {
    cfg.validate();
    if (full.empty() || full.front().phys() != 2)
        throw DomainError("first site must be the qubit (dimension 2)");
    const std::size_t nsites = full.size();

    MpsState psi;
    psi.sites.resize(nsites);
    psi.basis.assign(nsites, Mat());
    psi.sites[0] = std::move(full[0]);

    for (std::size_t j = 1; j < nsites; ++j) {
        const SiteTensor& f = full[j];
        const auto dk = static_cast<Eigen::Index>(f.phys());
        const Eigen::Index l = f.left(), r = f.right();
        Mat x(l * r, dk);
        for (Eigen::Index n = 0; n < dk; ++n)
            x.col(n) = Eigen::Map<const Vec>(f.blocks[static_cast<std::size_t>(n)].data(), l * r);

        const auto d_o = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.obb_for(j - 1), f.phys()));
        Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        Eigen::Index rank = 0;
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        while (rank < sv.size() && rank < d_o && sv(rank) > cfg.svd_cutoff * std::max(smax, 1e-300)) ++rank;
        Mat v0 = svd.matrixV().leftCols(rank).adjoint(); // rank x dk
        std::vector<Eigen::Index> order(static_cast<std::size_t>(dk));
        std::iota(order.begin(), order.end(), 0);
        Mat v = pad_rows(v0, d_o, order);
        Mat y = x * v.adjoint(); // (l*r) x d_o

        SiteTensor a(static_cast<std::size_t>(d_o), l, r);
        for (Eigen::Index k = 0; k < d_o; ++k)
            a.blocks[static_cast<std::size_t>(k)] = Eigen::Map<const Mat>(y.col(k).data(), l, r);
        psi.sites[j] = std::move(a);
        psi.basis[j] = std::move(v);
    }
    psi.check();

    psi.center = nsites - 1;
    psi.move_center(0);

    // bond targets limited by D and by the Hilbert space on either side
    std::vector<double> left_prod(nsites), right_prod(nsites);
    double acc = 1.0;
    for (std::size_t j = 0; j < nsites; ++j) {
        acc = std::min(acc * static_cast<double>(psi.sites[j].phys()), 1e9);
        left_prod[j] = acc;
    }
    acc = 1.0;
    for (std::size_t j = nsites; j-- > 0;) {
        acc = std::min(acc * static_cast<double>(psi.sites[j].phys()), 1e9);
        right_prod[j] = acc;
    }
    for (std::size_t j = nsites - 1; j >= 1; --j) {
        const auto target = static_cast<Eigen::Index>(
            std::min({static_cast<double>(cfg.bond_dim), left_prod[j - 1], right_prod[j]}));
        SiteTensor& b = psi.sites[j];
        if (b.left() < target) {
            const Eigen::Index r = b.right();
            const auto p = static_cast<Eigen::Index>(b.phys());
            std::vector<Eigen::Index> order(static_cast<std::size_t>(p * r));
            std::iota(order.begin(), order.end(), 0);
            // column n*r + rr; prefer low occupation on both indices
            std::stable_sort(order.begin(), order.end(), [r](Eigen::Index a, Eigen::Index c) {
                const auto ka = a / r + a % r, kc = c / r + c % r;
                return ka < kc;
            });
            const Eigen::Index old = b.left();
            b.from_cols(pad_rows(b.stacked_cols(), target, order), b.phys());
            for (auto& blk : psi.sites[j - 1].blocks) {
                Mat grown = Mat::Zero(blk.rows(), target);
                grown.leftCols(old) = blk;
                blk = std::move(grown);
            }
        }
    }
    psi.check();
    return psi;
}

MpsState canonicalize(MpsState psi, std::size_t new_center) {
    psi.move_center(new_center);
    return psi;
}

// ---------------------------------------------------------------------------
// contractions

namespace {

// E' = sum_{n,m} op(n,m) bra[n]^dag E ket[m]; a null op means identity on a shared basis.
Mat transfer(const Mat& e, const SiteTensor& bra, const SiteTensor& ket, const Mat* op) {
    Mat out = Mat::Zero(bra.right(), ket.right());
    if (op == nullptr) {
        for (std::size_t n = 0; n < ket.phys(); ++n)
            out.noalias() += bra.blocks[n].adjoint() * (e * ket.blocks[n]);
        return out;
    }
    std::vector<Mat> t(ket.phys());
    for (std::size_t m = 0; m < ket.phys(); ++m) t[m] = e * ket.blocks[m];
    Mat s(e.rows(), ket.right());
    for (std::size_t n = 0; n < bra.phys(); ++n) {
        s.setZero();
        bool any = false;
        for (std::size_t m = 0; m < ket.phys(); ++m) {
            const cplx c = (*op)(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            if (c == cplx(0.0)) continue;
            s += c * t[m];
            any = true;
        }
        if (any) out.noalias() += bra.blocks[n].adjoint() * s;
    }
    return out;
}

std::vector<Mat> left_identity_envs(const MpsState& psi) {
    std::vector<Mat> envs(psi.size() + 1);
    envs[0] = Mat::Identity(1, 1);
    for (std::size_t j = 0; j < psi.size(); ++j)
        envs[j + 1] = transfer(envs[j], psi.sites[j], psi.sites[j], nullptr);
    return envs;
}

std::vector<Mat> right_identity_envs(const MpsState& psi) {
    // envs[j] closes sites j..N-1; stored as (ket x bra) so that value = tr(E_left * ... )
    std::vector<Mat> envs(psi.size() + 1);
    envs[psi.size()] = Mat::Identity(1, 1);
    for (std::size_t j = psi.size(); j-- > 0;) {
        const SiteTensor& a = psi.sites[j];
        Mat out = Mat::Zero(a.left(), a.left());
        for (std::size_t n = 0; n < a.phys(); ++n)
            out.noalias() += a.blocks[n] * envs[j + 1] * a.blocks[n].adjoint();
        envs[j] = std::move(out);
    }
    return envs;
}

cplx close(const Mat& left, const Mat& right) {
    // left is (bra x ket), right is (ket x bra)
    return (left.cwiseProduct(right.transpose())).sum();
}

} // namespace

cplx overlap(const MpsState& bra, const MpsState& ket) {
    if (bra.size() != ket.size()) throw DomainError("overlap: site-count mismatch");
    Mat e = Mat::Identity(1, 1);
    for (std::size_t j = 0; j < bra.size(); ++j) {
        if (bra.local_dim(j) != ket.local_dim(j))
            throw DomainError("overlap: local dimension mismatch at site " + std::to_string(j));
        if (!bra.has_basis(j) && !ket.has_basis(j)) {
            e = transfer(e, bra.sites[j], ket.sites[j], nullptr);
            continue;
        }
        // <n~_bra | m~_ket> through the shared Fock basis
        const Mat g = bra.has_basis(j) && ket.has_basis(j)
                          ? Mat(bra.basis[j].conjugate() * ket.basis[j].transpose())
                          : (bra.has_basis(j) ? Mat(bra.basis[j].conjugate())
                                              : Mat(ket.basis[j].transpose()));
        e = transfer(e, bra.sites[j], ket.sites[j], &g);
    }
    return e(0, 0);
}

cplx expect_product(const MpsState& psi, const std::vector<std::pair<std::size_t, Mat>>& ops) {
    std::vector<const Mat*> at(psi.size(), nullptr);
    std::vector<Mat> projected;
    projected.reserve(ops.size());
    for (const auto& [site, op] : ops) {
        if (site >= psi.size()) throw DomainError("operator site out of range");
        if (at[site] != nullptr) throw DomainError("expect_product needs distinct sites");
        projected.push_back(psi.project_op(site, op));
        at[site] = &projected.back();
    }
    Mat e = Mat::Identity(1, 1);
    for (std::size_t j = 0; j < psi.size(); ++j) e = transfer(e, psi.sites[j], psi.sites[j], at[j]);
    return e(0, 0);
}

cplx expect_local(const MpsState& psi, const Mat& op, std::size_t site) {
    return expect_product(psi, {{site, op}});
}

Eigen::VectorXd chain_occupations(const MpsState& psi) {
    const auto left = left_identity_envs(psi);
    const auto right = right_identity_envs(psi);
    Eigen::VectorXd occ(static_cast<Eigen::Index>(psi.boson_count()));
    for (std::size_t j = 1; j < psi.size(); ++j) {
        const Mat op = psi.project_op(j, boson_number(psi.local_dim(j)));
        const Mat e = transfer(left[j], psi.sites[j], psi.sites[j], &op);
        occ(static_cast<Eigen::Index>(j - 1)) = close(e, right[j + 1]).real();
    }
    return occ / left[psi.size()](0, 0).real();
}

Mat one_body_correlations(const MpsState& psi) {
    const std::size_t nb = psi.boson_count();
    const auto left = left_identity_envs(psi);
    const auto right = right_identity_envs(psi);
    Mat c = Mat::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));

    std::vector<Mat> create(psi.size()), annihilate(psi.size()), number(psi.size());
    for (std::size_t j = 1; j < psi.size(); ++j) {
        const std::size_t d = psi.local_dim(j);
        create[j] = psi.project_op(j, boson_creation(d));
        annihilate[j] = psi.project_op(j, boson_annihilation(d));
        number[j] = psi.project_op(j, boson_number(d));
    }
    for (std::size_t j = 1; j < psi.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j - 1);
        c(jj, jj) = close(transfer(left[j], psi.sites[j], psi.sites[j], &number[j]), right[j + 1]);
        Mat e = transfer(left[j], psi.sites[j], psi.sites[j], &create[j]);
        for (std::size_t k = j + 1; k < psi.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k - 1);
            const Mat ek = transfer(e, psi.sites[k], psi.sites[k], &annihilate[k]);
            c(jj, kk) = close(ek, right[k + 1]);
            c(kk, jj) = std::conj(c(jj, kk));
            if (k + 1 < psi.size()) e = transfer(e, psi.sites[k], psi.sites[k], nullptr);
        }
    }
    const double nrm = close(left[psi.size()], right[psi.size()]).real();
    return c / nrm;
}

Projection project_qubit(const MpsState& psi, const Eigen::Vector2cd& spin_state) {
    if (std::abs(spin_state.norm() - 1.0) > 1e-12) throw DomainError("spin state must be normalized");
    Projection out{canonicalize(psi, 0), 0.0};
    SiteTensor& a = out.state.sites[0];
    const Mat amp = std::conj(spin_state(0)) * a.blocks[0] + std::conj(spin_state(1)) * a.blocks[1];
    const double total = a.squared_norm();
    a.blocks[0] = spin_state(0) * amp;
    a.blocks[1] = spin_state(1) * amp;
    const double p = a.squared_norm() / total;
    out.probability = p;
    if (p < 1e-14) throw MeasurementAnnihilation(p);
    const double scale = 1.0 / std::sqrt(a.squared_norm());
    for (auto& b : a.blocks) b *= scale;
    return out;
}

Eigen::Matrix2cd qubit_density(const MpsState& psi) {
    const MpsState c = canonicalize(psi, 0);
    const SiteTensor& a = c.sites[0];
    Eigen::Matrix2cd rho;
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t)
            rho(s, t) = (a.blocks[static_cast<std::size_t>(s)].cwiseProduct(
                             a.blocks[static_cast<std::size_t>(t)].conjugate())).sum();
    return rho / rho.trace().real();
}

Vec to_dense(const MpsState& psi) {
    Mat s = Mat::Identity(1, 1); // rows: product index so far, cols: bond
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const SiteTensor f = psi.full_site(j);
        const auto p = static_cast<Eigen::Index>(f.phys());
        Mat next(s.rows() * p, f.right());
        for (Eigen::Index i = 0; i < s.rows(); ++i)
            for (Eigen::Index n = 0; n < p; ++n)
                next.row(i * p + n) = s.row(i) * f.blocks[static_cast<std::size_t>(n)];
        s = std::move(next);
    }
    return s.col(0);
}

// ---------------------------------------------------------------------------
// checkpoint: "SBZMPS" magic, u32 version, u64 sites, u64 center, then per site
// u64 left, right, phys, fock (0 = no isometry); tensor payload row-major over
// (left, right, phys) as (re, im) doubles; isometry payload row-major (phys, fock).

namespace {

constexpr char kMagic[6] = {'S', 'B', 'Z', 'M', 'P', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DomainError("checkpoint truncated");
    return v;
}

void put_c(std::ostream& os, cplx c) {
    put(os, c.real());
    put(os, c.imag());
}

cplx get_c(std::istream& is) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    return {re, im};
}

} // namespace

void save_checkpoint(std::ostream& os, const MpsState& psi) {
    psi.check();
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, psi.size());
    put<std::uint64_t>(os, psi.center);
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const SiteTensor& a = psi.sites[j];
        put<std::uint64_t>(os, static_cast<std::uint64_t>(a.left()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(a.right()));
        put<std::uint64_t>(os, a.phys());
        put<std::uint64_t>(os, psi.has_basis(j) ? static_cast<std::uint64_t>(psi.basis[j].cols()) : 0);
        for (Eigen::Index l = 0; l < a.left(); ++l)
            for (Eigen::Index r = 0; r < a.right(); ++r)
                for (std::size_t n = 0; n < a.phys(); ++n) put_c(os, a.blocks[n](l, r));
        if (psi.has_basis(j))
            for (Eigen::Index k = 0; k < psi.basis[j].rows(); ++k)
                for (Eigen::Index n = 0; n < psi.basis[j].cols(); ++n) put_c(os, psi.basis[j](k, n));
    }
}

MpsState load_checkpoint(std::istream& is) {
    char magic[sizeof(kMagic)];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DomainError("not an MPS checkpoint");
    if (get<std::uint32_t>(is) != kVersion) throw DomainError("unsupported checkpoint version");
    const auto n = get<std::uint64_t>(is);
    MpsState psi;
    psi.center = get<std::uint64_t>(is);
    psi.sites.resize(n);
    psi.basis.assign(n, Mat());
    for (std::size_t j = 0; j < n; ++j) {
        const auto l = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        const auto r = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        const auto p = get<std::uint64_t>(is);
        const auto fock = static_cast<Eigen::Index>(get<std::uint64_t>(is));
        SiteTensor a(p, l, r);
        for (Eigen::Index li = 0; li < l; ++li)
            for (Eigen::Index ri = 0; ri < r; ++ri)
                for (std::size_t k = 0; k < p; ++k) a.blocks[k](li, ri) = get_c(is);
        psi.sites[j] = std::move(a);
        if (fock > 0) {
            Mat v(static_cast<Eigen::Index>(p), fock);
            for (Eigen::Index k = 0; k < v.rows(); ++k)
                for (Eigen::Index m = 0; m < fock; ++m) v(k, m) = get_c(is);
            psi.basis[j] = std::move(v);
        }
    }
    psi.check();
    return psi;
}

} // namespace sbzeno
