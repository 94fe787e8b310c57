#pragma once

// Shared generators and oracle helpers for the test suites. Everything here is
// independent of the secular-equation code path it is used to check: spectra
// come from random draws and eigen-systems from Eigen's dense solver.

#include <Eigen/Dense>
#include <complex>
#include <random>

#include <adiflow/rank_one.hpp>

namespace testsupport {

using adiflow::cxd;
using adiflow::RankOneActivation;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Strictly ascending spectrum in [0, scale] with a floor on the smallest gap.
inline Eigen::VectorXd random_spectrum(std::mt19937_64& gen, int n, double scale = 5.0,
                                       double min_gap_frac = 0.01) {
    std::uniform_real_distribution<double> unif(0.0, scale);
    const double min_gap = min_gap_frac * scale / n;
    Eigen::VectorXd d(n);
    while (true) {
        for (int k = 0; k < n; ++k)
            d[k] = unif(gen);
        std::sort(d.data(), d.data() + n);
        bool ok = true;
        for (int k = 0; k + 1 < n; ++k)
            ok = ok && (d[k + 1] - d[k] >= min_gap);
        if (ok || n == 1)
            return d;
    }
}

/// Generic unit vector: complex Gaussian draws, renormalized, with a floor on
/// the smallest component so no level is accidentally (near-)frozen.
inline Eigen::VectorXcd random_unit_vector(std::mt19937_64& gen, int n,
                                           double min_component = 1e-6) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXcd v(n);
    while (true) {
        for (int k = 0; k < n; ++k)
            v[k] = cxd(normal(gen), normal(gen));
        v.normalize();
        if (v.cwiseAbs().minCoeff() >= min_component)
            return v;
    }
}

inline RankOneActivation random_activation(std::mt19937_64& gen, int n, double scale = 5.0) {
    return RankOneActivation(random_spectrum(gen, n, scale),
                             random_unit_vector(gen, n));
}

/// Random Hermitian matrix with entries of order one.
inline Eigen::MatrixXcd random_hermitian(std::mt19937_64& gen, int n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXcd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            m(r, c) = cxd(normal(gen), normal(gen));
    return 0.5 * (m + m.adjoint()).eval();
}

/// Random unitary via QR of a Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(std::mt19937_64& gen, int n) {
    Eigen::MatrixXcd m = random_hermitian(gen, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            m(r, c) = cxd(normal(gen), normal(gen));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    return qr.householderQ();
}

/// Dense-solver eigenvalues of D + mu |v><v| (the oracle path).
inline Eigen::VectorXd oracle_eigenvalues(const RankOneActivation& act, double mu) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(act.matrix(mu));
    return es.eigenvalues();
}

inline Eigen::MatrixXcd oracle_eigenvectors(const RankOneActivation& act, double mu) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(act.matrix(mu));
    return es.eigenvectors();
}

inline double overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return std::abs(a.dot(b));
}

} // namespace testsupport
