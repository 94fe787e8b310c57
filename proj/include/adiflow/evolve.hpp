#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "activation.hpp"
#include "errors.hpp"
#include "hermitian.hpp"
#include "rank_one.hpp"
#include "schedule.hpp"

namespace adiflow {

/// Piecewise-constant midpoint propagation of the time-dependent Schroedinger
/// equation: each step applies the exact exponential of the Hamiltonian frozen
/// at the step midpoint, computed through its eigendecomposition. Unitary to
/// solver precision; second-order accurate in the step size.
inline Eigen::VectorXcd evolve(const std::function<Eigen::MatrixXcd(double)>& h_of_t,
                               Eigen::VectorXcd psi, const Schedule& schedule, int steps) {
    if (steps < 1)
        throw validation_error("evolve needs steps >= 1");
    if (std::abs(psi.squaredNorm() - 1.0) > 1e-10)
        throw validation_error("initial state must have unit norm");
    const double dt = schedule.t_final() / steps;
    const cxd minus_i(0.0, -1.0);
    for (int j = 0; j < steps; ++j) {
        const double t_mid = (j + 0.5) * dt;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h_of_t(t_mid));
        if (es.info() != Eigen::Success)
            throw numerical_error("propagator eigendecomposition failed");
        Eigen::VectorXcd phases =
            (minus_i * dt * es.eigenvalues().array().cast<cxd>()).exp().matrix();
        psi = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * psi));
    }
    return psi;
}

/// Rank-one sweep in the D eigenbasis: H(t) = diag(d) + mu(t) |v><v|.
inline Eigen::VectorXcd evolve(const RankOneActivation& act, const Eigen::VectorXcd& psi0,
                               const Schedule& schedule, int steps) {
    return evolve(
        [&act, &schedule](double t) { return act.matrix(schedule.mu(t)); },
        psi0, schedule, steps);
}

struct EvolveCheck {
    Eigen::VectorXcd psi;
    double step_halving_error = 0.0;  // || psi(steps) - psi(steps/2) ||
    bool too_coarse = false;
};

/// Runs the propagation at the requested resolution and at half resolution;
/// flags the result when the measured difference exceeds accuracy_target.
inline EvolveCheck evolve_checked(const std::function<Eigen::MatrixXcd(double)>& h_of_t,
                                  const Eigen::VectorXcd& psi0, const Schedule& schedule,
                                  int steps, double accuracy_target = 1e-6) {
    EvolveCheck out;
    out.psi = evolve(h_of_t, psi0, schedule, steps);
    if (steps >= 2) {
        Eigen::VectorXcd coarse = evolve(h_of_t, psi0, schedule, steps / 2);
        out.step_halving_error = (out.psi - coarse).norm();
        out.too_coarse = out.step_halving_error > accuracy_target;
    }
    return out;
}

/// <v|s> for the eigenvalue s_val of the sweep. Levels pinned by zero coupling
/// components sit exactly on their pole and have vanishing overlap with v.
inline cxd coupling_overlap(double s_val, const RankOneActivation& act) {
    const double tol = pole_tol * detail::pole_scale(act);
    for (Eigen::Index k = 0; k < act.d.size(); ++k)
        if (std::abs(s_val - act.d[k]) < tol && std::abs(act.v[k]) < zero_component_tol)
            return cxd(0.0);
    return act.v.dot(eigenvector_at(s_val, act));
}

/// Adiabatic-condition quotient maximized over the unitless time grid and all
/// level pairs n != m:
///   |<s_m(u)|v><v|s_n(u)> dmu/du| / (s_n(u) - s_m(u))^2.
/// Pairs with vanishing numerator do not constrain the sweep; a vanishing gap
/// with a non-vanishing numerator raises divergence_error naming u.
struct AdiabaticEstimate {
    double time = 0.0;           // margin * max quotient
    double max_quotient = 0.0;
    double u_at_max = 0.0;
    double margin = 0.0;
};

inline AdiabaticEstimate adiabatic_time_estimate_detail(const RankOneActivation& act,
                                                        const Schedule& schedule,
                                                        double margin = 100.0,
                                                        int grid = 800) {
    if (!(margin > 1.0))
        throw validation_error("margin must exceed 1 (it realizes the 'much greater')");
    const int n = static_cast<int>(act.dim());

    std::vector<double> us;
    us.reserve(static_cast<std::size_t>(grid) + 64);
    for (int j = 1; j <= grid; ++j)
        us.push_back(static_cast<double>(j) / grid);
    // refine around the coupling values where gaps pinch: every (d_m - d_k)
    // against the dominant weight is a candidate crossing of the rising level
    Eigen::Index imax = 0;
    act.v.cwiseAbs().maxCoeff(&imax);
    const double vi_sq = std::norm(act.v[imax]);
    if (vi_sq > 0.0 && schedule.mu_final() > 0.0) {
        for (double mu_c : critical_mu_ladder(act.d, static_cast<int>(imax), vi_sq)) {
            if (mu_c >= schedule.mu_final())
                continue;
            // invert the shape by bisection
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (schedule.mu_shape(mid) < mu_c ? lo : hi) = mid;
            }
            const double uc = 0.5 * (lo + hi);
            for (int j = -24; j <= 24; ++j) {
                const double u = uc + j * 1e-4;
                if (u > 0.0 && u <= 1.0)
                    us.push_back(u);
            }
        }
    }

    AdiabaticEstimate est;
    est.margin = margin;
    for (double u : us) {
        const double mu = schedule.mu_shape(u);
        const double dmu = schedule.dmu_shape(u);
        const Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
        std::vector<cxd> v_overlap(static_cast<std::size_t>(n));
        for (int q = 0; q < n; ++q)
            v_overlap[static_cast<std::size_t>(q)] =
                mu == 0.0 ? act.v[q] : coupling_overlap(s[q], act);
        for (int nn = 0; nn < n; ++nn) {
            for (int mm = nn + 1; mm < n; ++mm) {
                const double numerator =
                    std::abs(std::conj(v_overlap[static_cast<std::size_t>(mm)]) *
                             v_overlap[static_cast<std::size_t>(nn)] * dmu);
                if (numerator == 0.0)
                    continue;
                const double gap = s[mm] - s[nn];
                if (std::abs(gap) < 1e-12) {
                    std::ostringstream os;
                    os << "gap between levels " << nn << " and " << mm << " vanishes at u = "
                       << u << " while the coupling overlap does not";
                    throw divergence_error(os.str());
                }
                const double quotient = numerator / (gap * gap);
                if (quotient > est.max_quotient) {
                    est.max_quotient = quotient;
                    est.u_at_max = u;
                }
            }
        }
    }
    est.time = margin * est.max_quotient;
    return est;
}

inline double adiabatic_time_estimate(const RankOneActivation& act, const Schedule& schedule,
                                      double margin = 100.0, int grid = 800) {
    return adiabatic_time_estimate_detail(act, schedule, margin, grid).time;
}

/// Worst-case sweep time with the gap replaced by its guaranteed edge-case
/// floor C0 eps^2: margin * max_u |dmu/du <s_m|v><v|s_n>| / (C0 eps^2)^2.
/// Grows as eps^-4 where the true quotient grows as the measured gap demands.
inline double worst_case_time_estimate(const RankOneActivation& act, const Schedule& schedule,
                                       double epsilon, double margin = 100.0, int grid = 400) {
    if (!(margin > 1.0))
        throw validation_error("margin must exceed 1");
    const double floor = min_gap_bound(act.d, epsilon);
    if (!(floor > 0.0))
        throw singular_error("gap floor vanishes (epsilon = 0)");
    const int n = static_cast<int>(act.dim());
    double max_num = 0.0;
    for (int j = 1; j <= grid; ++j) {
        const double u = static_cast<double>(j) / grid;
        const double mu = schedule.mu_shape(u);
        const double dmu = schedule.dmu_shape(u);
        const Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
        std::vector<cxd> v_overlap(static_cast<std::size_t>(n));
        for (int q = 0; q < n; ++q)
            v_overlap[static_cast<std::size_t>(q)] =
                mu == 0.0 ? act.v[q] : coupling_overlap(s[q], act);
        for (int nn = 0; nn < n; ++nn)
            for (int mm = nn + 1; mm < n; ++mm)
                max_num = std::max(max_num,
                                   std::abs(std::conj(v_overlap[static_cast<std::size_t>(mm)]) *
                                            v_overlap[static_cast<std::size_t>(nn)] * dmu));
    }
    return margin * max_num / (floor * floor);
}

/// Instantaneous-eigenstate tracking report for an adiabatic sweep started in
/// |d_n>: phase-minimized deviation from |s_n(mu(t_f))> and the overlap itself.
struct FidelityReport {
    double deviation = 0.0;  // min over global phase of ||U|d_n> - e^{i phi}|s_n>||
    double fidelity = 0.0;   // |<s_n(mu(t_f)) | U |d_n>|
    double t_final = 0.0;
    double estimate = 0.0;   // margin-100 adiabatic time estimate for context
};

inline FidelityReport verify_instantaneous_tracking(const RankOneActivation& act, int level,
                                                    const Schedule& schedule, int steps) {
    const int n = static_cast<int>(act.dim());
    if (level < 0 || level >= n)
        throw validation_error("level index out of range");
    Eigen::VectorXcd psi = evolve(act, Eigen::VectorXcd::Unit(n, level), schedule, steps);
    const double mu_f = schedule.mu(schedule.t_final());
    Eigen::VectorXcd target;
    if (mu_f == 0.0) {
        target = Eigen::VectorXcd::Unit(n, level);
    } else {
        const Eigen::VectorXd s = eigenvalues_at_mu(act, mu_f);
        const double tol = pole_tol * detail::pole_scale(act) * 10.0;
        bool at_pole = false;
        for (Eigen::Index q = 0; q < act.d.size(); ++q)
            at_pole = at_pole || std::abs(s[level] - act.d[q]) < tol;
        target = at_pole ? eigendecompose(act.matrix(mu_f)).eigenvectors.col(level)
                         : eigenvector_at(s[level], act);
    }
    FidelityReport rep;
    rep.t_final = schedule.t_final();
    rep.fidelity = std::abs(target.dot(psi));
    rep.deviation = std::sqrt(std::max(0.0, 2.0 - 2.0 * rep.fidelity));
    rep.estimate = adiabatic_time_estimate(act, schedule);
    return rep;
}

} // namespace adiflow
