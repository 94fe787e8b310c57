#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "hermitian.hpp"

namespace adiflow {

/// Components with |v_k| below this are treated as exactly zero: the level d_k
/// stays a fixed eigenvalue (level crossings permitted) and is excluded from
/// the secular sum.
inline constexpr double zero_component_tol = 1e-15;

/// Relative half-width of the forbidden zone around each pole d_k.
inline constexpr double pole_tol = 1e-14;

/// Secular root iteration: safeguarded Newton inside each interlacing bracket.
inline constexpr int root_iteration_cap = 200;
inline constexpr double root_tol_rel = 1e-13;

/// One rank-one sweep H(mu) = D + mu |v><v| expressed in the eigenbasis of D:
/// base eigenvalues d (strictly ascending) and unit-norm coupling components v.
struct RankOneActivation {
    Eigen::VectorXd d;
    Eigen::VectorXcd v;
    double mu_final = 0.0;

    RankOneActivation() = default;

    RankOneActivation(Eigen::VectorXd d_in, Eigen::VectorXcd v_in, double mu_f = 0.0)
        : d(std::move(d_in)), v(std::move(v_in)), mu_final(mu_f) {
        if (d.size() < 1 || d.size() != v.size())
            throw validation_error("activation needs matching non-empty d and v");
        for (Eigen::Index k = 0; k + 1 < d.size(); ++k)
            if (!(d[k] < d[k + 1]))
                throw validation_error(
                    "base spectrum must be strictly ascending (jitter_spectrum "
                    "can split degenerate input)");
        const double n2 = v.squaredNorm();
        if (std::abs(n2 - 1.0) > 1e-12)
            throw validation_error("coupling vector must have unit norm");
    }

    Eigen::Index dim() const { return d.size(); }

    double spread() const {
        return d.size() > 1 ? d[d.size() - 1] - d[0] : std::abs(d[0]);
    }

    /// Dense matrix D + mu |v><v| in the D eigenbasis.
    Eigen::MatrixXcd matrix(double mu) const {
        Eigen::MatrixXcd h = mu * (v * v.adjoint());
        h.diagonal() += d.cast<cxd>();
        return h;
    }
};

namespace detail {

inline double pole_scale(const RankOneActivation& act) {
    return std::max(1.0, act.d.cwiseAbs().maxCoeff());
}

struct SecularSystem {
    std::vector<int> active;      // indices with |v_k| above zero_component_tol
    std::vector<int> frozen;
    std::vector<double> da;       // d over active, ascending
    std::vector<double> aa;       // |v_k|^2 over active
    double total = 0.0;           // sum of active |v_k|^2

    explicit SecularSystem(const RankOneActivation& act) {
        for (Eigen::Index k = 0; k < act.dim(); ++k) {
            if (std::abs(act.v[k]) < zero_component_tol) {
                frozen.push_back(static_cast<int>(k));
            } else {
                active.push_back(static_cast<int>(k));
                da.push_back(act.d[k]);
                const double a = std::norm(act.v[k]);
                aa.push_back(a);
                total += a;
            }
        }
    }

    // w(s) = 1 + mu * sum_k a_k / (d_k - s), strictly monotone in each bracket
    void eval(double mu, double s, double& f, double& fp) const {
        f = 1.0;
        fp = 0.0;
        for (std::size_t k = 0; k < da.size(); ++k) {
            const double r = 1.0 / (da[k] - s);
            f += mu * aa[k] * r;
            fp += mu * aa[k] * r * r;
        }
    }
};

// Root of the secular function inside the open bracket (lo, hi); for mu > 0 the
// function runs from -inf at lo+ to +inf (or >= 0) at hi-, mirrored for mu < 0.
inline double secular_root(const SecularSystem& sys, double mu, double lo, double hi) {
    const double width = hi - lo;
    const bool increasing = mu > 0.0;
    double a = lo, b = hi;
    double s = 0.5 * (lo + hi);
    double f = 0.0, fp = 0.0;
    int it = 0;
    for (; it < root_iteration_cap; ++it) {
        sys.eval(mu, s, f, fp);
        if (f == 0.0)
            return s;
        const bool below = increasing ? (f < 0.0) : (f > 0.0);
        if (below)
            a = s;
        else
            b = s;
        const double floor_ulp =
            4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
        if (b - a <= std::max(root_tol_rel * width, floor_ulp))
            break;
        double snext = s - f / fp;           // fp > 0 for mu > 0, < 0 for mu < 0
        if (!(snext > a && snext < b))
            snext = 0.5 * (a + b);
        s = snext;
    }
    if (it >= root_iteration_cap) {
        std::ostringstream os;
        os << "secular root iteration cap reached in bracket (" << lo << ", " << hi
           << "), residual interval (" << a << ", " << b << "), f = " << f;
        throw numerical_error(os.str());
    }
    // quadratic polish toward machine-level residual
    for (int p = 0; p < 2; ++p) {
        sys.eval(mu, s, f, fp);
        const double snext = s - f / fp;
        if (snext > lo && snext < hi)
            s = snext;
    }
    return s;
}

inline std::vector<double> secular_roots(const SecularSystem& sys, double mu) {
    const std::size_t na = sys.da.size();
    std::vector<double> roots(na);
    if (na == 0)
        return roots;
    if (na == 1) {
        roots[0] = sys.da[0] + mu * sys.aa[0];
        return roots;
    }
    const double shift = mu * sys.total;
    if (mu > 0.0) {
        for (std::size_t j = 0; j + 1 < na; ++j)
            roots[j] = secular_root(sys, mu, sys.da[j], sys.da[j + 1]);
        roots[na - 1] = secular_root(sys, mu, sys.da[na - 1], sys.da[na - 1] + shift);
    } else {
        roots[0] = secular_root(sys, mu, sys.da[0] + shift, sys.da[0]);
        for (std::size_t j = 1; j < na; ++j)
            roots[j] = secular_root(sys, mu, sys.da[j - 1], sys.da[j]);
    }
    return roots;
}

} // namespace detail

/// Coupling strength mu(s) at which s is an exact eigenvalue of D + mu |v><v|:
/// the reciprocal of sum_k |v_k|^2 / (s - d_k).
inline double secular_mu(double s, const RankOneActivation& act) {
    const double tol = pole_tol * detail::pole_scale(act);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < act.dim(); ++k) {
        if (std::abs(s - act.d[k]) < tol) {
            std::ostringstream os;
            os << "s = " << s << " is within " << tol << " of pole d_" << k;
            throw pole_error(os.str());
        }
        sum += std::norm(act.v[k]) / (s - act.d[k]);
    }
    if (sum == 0.0)
        throw singular_error("secular sum vanishes; mu(s) undefined");
    return 1.0 / sum;
}

/// All N eigenvalues of D + mu |v><v|, ascending. Roots are bracketed by the
/// interlacing inequality: for mu > 0, s_k in (d_k, d_{k+1}) and the top root
/// in (d_{N-1}, d_{N-1} + mu * sum|v_k|^2]; mirrored for mu < 0. Zero
/// components of v freeze their levels at d_k exactly.
inline Eigen::VectorXd eigenvalues_at_mu(const RankOneActivation& act, double mu) {
    if (mu == 0.0)
        return act.d;
    detail::SecularSystem sys(act);
    std::vector<double> vals = detail::secular_roots(sys, mu);
    for (int k : sys.frozen)
        vals.push_back(act.d[k]);
    std::sort(vals.begin(), vals.end());
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// Eigenvector of D + mu(s) |v><v| for eigenvalue s, with components
/// proportional to v_k / (s - d_k), unit norm, real-positive phase convention.
inline Eigen::VectorXcd eigenvector_at(double s, const RankOneActivation& act) {
    const double tol = pole_tol * detail::pole_scale(act);
    Eigen::VectorXcd u(act.dim());
    for (Eigen::Index k = 0; k < act.dim(); ++k) {
        if (std::abs(s - act.d[k]) < tol) {
            std::ostringstream os;
            os << "s = " << s << " is within " << tol << " of pole d_" << k;
            throw pole_error(os.str());
        }
        u[k] = std::abs(act.v[k]) < zero_component_tol ? cxd(0.0)
                                                       : act.v[k] / (s - act.d[k]);
    }
    const double n = u.norm();
    if (n == 0.0)
        throw singular_error("eigenvector formula produced the zero vector");
    u /= n;
    fix_phase(u);
    return u;
}

/// Cumulative truncations of the eigenvalue power series in mu around level r:
/// entry q holds the series through order q+1. The order-to-order decrements
/// let callers detect divergence outside the (uncharacterized) convergence
/// region.
inline std::vector<double> lagrange_series_partials(const RankOneActivation& act,
                                                    double mu, int r, int order,
                                                    int order_cap = 8) {
    const int n_dim = static_cast<int>(act.dim());
    if (r < 0 || r >= n_dim)
        throw validation_error("level index out of range");
    if (n_dim < 2)
        throw validation_error("series requires dimension >= 2");
    if (order < 1)
        throw validation_error("series order must be >= 1");
    if (order > order_cap) {
        std::ostringstream os;
        os << "series order " << order << " exceeds cap " << order_cap
           << "; the constrained index sum grows combinatorially";
        throw validation_error(os.str());
    }

    // G[j] = sum over p != r of (|v_p|^2 - delta_{j,0}/(N-1)) / (d_r - d_p)^j.
    // The p-sums factor out of the product over tuple positions, so each
    // composition of n-1 into n parts contributes prod_i G[k_i].
    std::vector<double> g(static_cast<std::size_t>(order), 0.0);
    for (int p = 0; p < n_dim; ++p) {
        if (p == r)
            continue;
        const double a = std::norm(act.v[p]);
        g[0] += a - 1.0 / static_cast<double>(n_dim - 1);
        double denom = 1.0;
        for (int j = 1; j < order; ++j) {
            denom *= act.d[r] - act.d[p];
            g[static_cast<std::size_t>(j)] += a / denom;
        }
    }

    std::vector<double> partials;
    partials.reserve(static_cast<std::size_t>(order));
    double series = 0.0;
    double mu_pow = 1.0;
    for (int n = 1; n <= order; ++n) {
        mu_pow *= mu;
        double coeff = 0.0;
        // enumerate k_1..k_n >= 0 with sum = n-1
        std::vector<int> ks(static_cast<std::size_t>(n), 0);
        const auto recurse = [&](auto&& self, int pos, int remaining, double prod) -> void {
            if (pos == n - 1) {
                coeff += prod * g[static_cast<std::size_t>(remaining)];
                return;
            }
            for (int k = 0; k <= remaining; ++k)
                self(self, pos + 1, remaining - k, prod * g[static_cast<std::size_t>(k)]);
        };
        recurse(recurse, 0, n - 1, 1.0);
        series += mu_pow / static_cast<double>(n) * coeff;
        partials.push_back(act.d[r] - series);
    }
    return partials;
}

/// Truncated series value for the r-th eigenvalue of D + mu |v><v|.
inline double lagrange_series(const RankOneActivation& act, double mu, int r, int order,
                              int order_cap = 8) {
    return lagrange_series_partials(act, mu, r, order, order_cap).back();
}

enum class MuSign { positive, negative };

/// Interlacing test d_k <= s_k <= d_{k+1} for mu > 0, vertically mirrored for
/// mu < 0. slack admits spectra from finite-precision oracles.
inline bool interlacing_check(const Eigen::VectorXd& d, const Eigen::VectorXd& s,
                              MuSign sign, double slack = 0.0) {
    if (d.size() != s.size())
        throw validation_error("interlacing_check: length mismatch");
    const Eigen::Index n = d.size();
    if (sign == MuSign::positive) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (s[k] < d[k] - slack)
                return false;
            if (k + 1 < n && s[k] > d[k + 1] + slack)
                return false;
        }
    } else {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (s[k] > d[k] + slack)
                return false;
            if (k >= 1 && s[k] < d[k - 1] - slack)
                return false;
        }
    }
    return true;
}

} // namespace adiflow
