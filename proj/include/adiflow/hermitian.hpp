#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <sstream>

#include "errors.hpp"

namespace adiflow {

using cxd = std::complex<double>;

/// Per-entry Hermiticity tolerance for operator inputs.
inline constexpr double hermitian_tol = 1e-12;

inline void require_hermitian(const Eigen::MatrixXcd& h, double tol = hermitian_tol) {
    if (h.rows() != h.cols() || h.rows() < 1)
        throw validation_error("operator must be square and non-empty");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double dev = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol * scale) {
        std::ostringstream os;
        os << "operator is not Hermitian: max |H - H^dag| = " << dev;
        throw validation_error(os.str());
    }
}

/// Rotate a vector's global phase so its largest-magnitude component is real
/// and positive. Makes eigenvector comparisons phase-free.
inline void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const cxd z = v[imax];
    const double a = std::abs(z);
    if (a > 0.0)
        v *= std::conj(z) / a;
}

/// Eigenvalues ascending, eigenvectors as orthonormal columns in matching order.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXcd eigenvectors;

    Eigen::Index dim() const { return eigenvalues.size(); }

    bool nondegenerate(double tol = 0.0) const {
        for (Eigen::Index k = 0; k + 1 < eigenvalues.size(); ++k)
            if (eigenvalues[k + 1] - eigenvalues[k] <= tol)
                return false;
        return true;
    }
};

/// Dense Hermitian eigendecomposition with the real-positive phase convention.
/// Serves as the exact reference path: all secular-equation results are
/// checked against it.
inline SpectralDecomposition eigendecompose(const Eigen::MatrixXcd& h) {
    require_hermitian(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
        throw numerical_error("eigendecomposition failed to converge");
    SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index k = 0; k < out.eigenvectors.cols(); ++k)
        fix_phase(out.eigenvectors.col(k));
    return out;
}

/// Break exact or near degeneracies in an ascending spectrum by adding an
/// index ramp of spacing rel * (d_max - d_min). Utility for user data; the
/// library itself rejects degenerate spectra.
inline Eigen::VectorXd jitter_spectrum(Eigen::VectorXd d, double rel = 1e-9) {
    if (d.size() < 2)
        return d;
    const double spread = d[d.size() - 1] - d[0];
    const double step = rel * (spread > 0.0 ? spread : 1.0);
    for (Eigen::Index k = 0; k < d.size(); ++k)
        d[k] += static_cast<double>(k) * step;
    return d;
}

} // namespace adiflow
