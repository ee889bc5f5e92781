// shared helpers for the unit tests
#pragma once

#include <random>
#include <vector>

#include "sbzeno/model.hpp"
#include "sbzeno/mps.hpp"
#include "sbzeno/spectral.hpp"

namespace testing {

using namespace sbzeno;

inline SpectralDensity density(double s, double alpha, double wc = 1.0) {
    SpectralDensity sd;
    sd.s = s;
    sd.alpha = alpha;
    sd.omega_c = wc;
    return sd;
}

inline ModelParams small_model(double s, double alpha, double delta, std::size_t length, std::size_t modes = 400) {
    ModelParams mp;
    mp.delta = delta;
    mp.chain = chain_map(discretize(density(s, alpha), modes), length);
    return mp;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// operator acting on one slot of [qubit, b_0, ..., b_L]
inline Mat embed(const Mat& op, std::size_t slot, std::size_t bosons, std::size_t d) {
    Mat out = slot == 0 ? op : Mat(Mat::Identity(2, 2));
    for (std::size_t k = 0; k < bosons; ++k) out = kron(out, slot == k + 1 ? op : Mat(Mat::Identity(d, d)));
    return out;
}

// H assembled term by term from Kronecker products
inline Mat dense_hamiltonian(const ModelParams& mp, std::size_t d) {
    const std::size_t nb = mp.chain.sites();
    Mat sz = Mat::Zero(2, 2), sx = Mat::Zero(2, 2), a = Mat::Zero(d, d);
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;
    sx(0, 1) = sx(1, 0) = 1.0;
    for (std::size_t n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const Mat ad = a.adjoint();
    Mat h = 0.5 * mp.delta * embed(sz, 0, nb, d);
    h += 0.5 * mp.chain.c0 * embed(sx, 0, nb, d) * embed(Mat(a + ad), 1, nb, d);
    for (std::size_t k = 0; k < nb; ++k) {
        h += mp.chain.eps(static_cast<Eigen::Index>(k)) * embed(Mat(ad * a), k + 1, nb, d);
        if (k + 1 < nb) {
            const double t = mp.chain.hop(static_cast<Eigen::Index>(k));
            const Mat hop = embed(ad, k + 1, nb, d) * embed(a, k + 2, nb, d);
            h += t * (hop + Mat(hop.adjoint()));
        }
    }
    return h;
}

inline MpsConfig full_config(std::size_t d, std::size_t bond) {
    MpsConfig c;
    c.bond_dim = bond;
    c.local_dim = d;
    c.obb_dim = d;
    c.max_local_dim = d;
    return c;
}

inline MpsState random_mps(std::size_t bosons, std::size_t d, std::size_t bond, unsigned seed,
                           std::size_t obb = 0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<SiteTensor> full(bosons + 1);
    for (std::size_t j = 0; j <= bosons; ++j) {
        const Eigen::Index l = j == 0 ? 1 : static_cast<Eigen::Index>(bond);
        const Eigen::Index r = j == bosons ? 1 : static_cast<Eigen::Index>(bond);
        full[j] = SiteTensor(j == 0 ? 2 : d, l, r);
        for (auto& b : full[j].blocks)
            for (Eigen::Index x = 0; x < b.size(); ++x) b.data()[x] = {nd(rng), nd(rng)};
    }
    MpsConfig cfg = full_config(d, bond);
    if (obb > 0) cfg.obb_dim = obb;
    MpsState psi = mps_from_full_sites(std::move(full), cfg);
    psi.normalize();
    return psi;
}

inline MpsState product_state(const Eigen::Vector2cd& spin, std::size_t bosons, std::size_t d, std::size_t bond = 1,
                              std::size_t obb = 0) {
    std::vector<SiteTensor> full(bosons + 1);
    full[0] = SiteTensor(2, 1, 1);
    full[0].blocks[0](0, 0) = spin(0);
    full[0].blocks[1](0, 0) = spin(1);
    for (std::size_t k = 0; k < bosons; ++k) {
        full[k + 1] = SiteTensor(d, 1, 1);
        full[k + 1].blocks[0](0, 0) = 1.0;
    }
    MpsConfig cfg = full_config(d, bond);
    if (obb > 0) cfg.obb_dim = obb;
    return mps_from_full_sites(std::move(full), cfg);
}

} // namespace testing
