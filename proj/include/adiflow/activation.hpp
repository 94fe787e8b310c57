#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "hermitian.hpp"
#include "rank_one.hpp"

namespace adiflow {

/// Near-eigenvector coupling directions: component 1 - (N-1) eps^2 at the
/// dominant index, eps everywhere else.
struct EdgeCaseConfig {
    int dominant_index = 0;
    double epsilon = 0.0;
    int dim = 0;

    void validate() const {
        if (dim < 1)
            throw validation_error("edge case dimension must be positive");
        if (dominant_index < 0 || dominant_index >= dim)
            throw validation_error("dominant index out of range");
        if (!(epsilon >= 0.0) || epsilon >= 1.0)
            throw validation_error("epsilon must lie in [0, 1)");
    }

    /// 1 - (N-1) eps^2 > eps, i.e. the dominant component actually dominates.
    bool dominance_holds() const {
        return 1.0 - (dim - 1) * epsilon * epsilon > epsilon;
    }
};

/// As written the edge-case vector is not exactly unit norm; both the raw
/// components and the norm are exposed, and normalized() is what enters any
/// spectral computation.
struct EdgeCaseVector {
    Eigen::VectorXcd raw;
    double norm = 1.0;

    Eigen::VectorXcd normalized() const { return raw / norm; }
};

inline EdgeCaseVector edge_case_v(const EdgeCaseConfig& cfg) {
    cfg.validate();
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(cfg.dim, cxd(cfg.epsilon, 0.0));
    v[cfg.dominant_index] = cxd(1.0 - (cfg.dim - 1) * cfg.epsilon * cfg.epsilon, 0.0);
    return EdgeCaseVector{v, v.norm()};
}

/// Normalized edge-case activation over the given base spectrum.
inline RankOneActivation edge_case_activation(const Eigen::VectorXd& d,
                                              const EdgeCaseConfig& cfg,
                                              double mu_final = 0.0) {
    if (d.size() != cfg.dim)
        throw validation_error("edge case dimension does not match spectrum");
    return RankOneActivation(d, edge_case_v(cfg).normalized(), mu_final);
}

/// Critical coupling at which levels k and k+1 avoid crossing:
/// (d_{k+1} - d_i) / |v_i|^2.
inline double critical_mu(const Eigen::VectorXd& d, int i, int k, cxd v_i) {
    const int n = static_cast<int>(d.size());
    if (i < 0 || i >= n || k < 0 || k + 1 > n - 1)
        throw validation_error("critical_mu: index out of range");
    const double w = std::norm(v_i);
    if (w <= 0.0)
        throw singular_error("critical_mu: dominant component |v_i| must be positive");
    return (d[k + 1] - d[i]) / w;
}

/// Critical values (d_m - d_i)/|v_i|^2 for m = i+1 .. N-1, ascending.
inline std::vector<double> critical_mu_ladder(const Eigen::VectorXd& d, int i, double vi_sq) {
    if (vi_sq <= 0.0)
        throw singular_error("critical ladder needs |v_i|^2 > 0");
    std::vector<double> out;
    for (int m = i + 1; m < d.size(); ++m)
        out.push_back((d[m] - d[i]) / vi_sq);
    return out;
}

namespace detail {

// Half-width of the ambiguous zone around ladder entry idx: guard_frac times
// the spacing to the nearest neighbouring critical value.
inline double guard_half_width(const std::vector<double>& ladder, std::size_t idx,
                               double guard_frac) {
    double local = std::numeric_limits<double>::infinity();
    if (idx > 0)
        local = std::min(local, ladder[idx] - ladder[idx - 1]);
    if (idx + 1 < ladder.size())
        local = std::min(local, ladder[idx + 1] - ladder[idx]);
    if (!std::isfinite(local))
        local = std::abs(ladder[idx]);
    return guard_frac * local;
}

inline void require_clear_of_guards(const std::vector<double>& ladder, double mu,
                                    double guard_frac) {
    for (std::size_t m = 0; m < ladder.size(); ++m) {
        if (std::abs(mu - ladder[m]) < guard_half_width(ladder, m, guard_frac)) {
            std::ostringstream os;
            os << "mu = " << mu << " lies in the guard band around the critical value "
               << ladder[m] << "; the outcome is epsilon-sensitive there";
            throw ambiguous_region_error(os.str());
        }
    }
}

} // namespace detail

enum class FinalLabelKind { unchanged, dominant, promoted };

struct FinalLabel {
    int index = 0;
    FinalLabelKind kind = FinalLabelKind::unchanged;
};

/// Which base eigenvector the adiabatically evolved |d_k> approaches in the
/// eps -> 0 limit: k below (d_k - d_i)/|v_i|^2, the dominant index i between
/// the two critical values, k+1 above. Uses the normalized edge-case vector.
inline FinalLabel predict_final_eigenvector(const Eigen::VectorXd& d, const EdgeCaseConfig& cfg,
                                            int k, double mu_final,
                                            double guard_frac = 1e-3) {
    cfg.validate();
    const int n = static_cast<int>(d.size());
    if (n != cfg.dim)
        throw validation_error("spectrum size does not match edge case dimension");
    if (k < 0 || k >= n)
        throw validation_error("level index out of range");
    const int i = cfg.dominant_index;
    const Eigen::VectorXcd v = edge_case_v(cfg).normalized();
    const double vi_sq = std::norm(v[i]);
    const std::vector<double> ladder = critical_mu_ladder(d, i, vi_sq);
    detail::require_clear_of_guards(ladder, mu_final, guard_frac);

    if (k < i || mu_final <= 0.0)
        return {k, FinalLabelKind::unchanged};
    const double mu_rise = (d[k] - d[i]) / vi_sq;       // zero when k == i
    if (mu_final < mu_rise)
        return {k, FinalLabelKind::unchanged};
    if (k == n - 1)
        return {i, FinalLabelKind::dominant};
    const double mu_pass = (d[k + 1] - d[i]) / vi_sq;
    if (mu_final < mu_pass)
        return {i, FinalLabelKind::dominant};
    return {k + 1, FinalLabelKind::promoted};
}

/// Overlap quadruple on the two sides of the critical value mu_{k+1}: the
/// eigenvalue pair (s_k, s_{k+1}) trades |v> for |d_{k+1}> as mu passes it.
struct SwapRecord {
    double mu_critical = 0.0;
    double delta_mu = 0.0;
    double v_sk_before = 0.0;     // |<v | s_k(mu - dmu)>|
    double dk1_sk1_before = 0.0;  // |<d_{k+1} | s_{k+1}(mu - dmu)>|
    double dk1_sk_after = 0.0;    // |<d_{k+1} | s_k(mu + dmu)>|
    double v_sk1_after = 0.0;     // |<v | s_{k+1}(mu + dmu)>|

    bool swapped(double threshold) const {
        return v_sk_before >= threshold && dk1_sk1_before >= threshold &&
               dk1_sk_after >= threshold && v_sk1_after >= threshold;
    }
};

inline SwapRecord swap_at_critical(const Eigen::VectorXd& d, const EdgeCaseConfig& cfg,
                                   int k, double delta_mu) {
    cfg.validate();
    const int n = static_cast<int>(d.size());
    if (n != cfg.dim)
        throw validation_error("spectrum size does not match edge case dimension");
    const int i = cfg.dominant_index;
    if (k < i || k + 1 >= n)
        throw validation_error("swap requires i <= k <= N-2");

    const Eigen::VectorXcd v = edge_case_v(cfg).normalized();
    const double vi_sq = std::norm(v[i]);
    const double mu_c = (d[k + 1] - d[i]) / vi_sq;
    const double mu_below = (d[k] - d[i]) / vi_sq;
    double window = mu_c - mu_below;
    if (k + 2 < n)
        window = std::min(window, (d[k + 2] - d[i]) / vi_sq - mu_c);
    if (!(delta_mu > 0.0) || delta_mu >= window) {
        std::ostringstream os;
        os << "delta_mu = " << delta_mu << " outside the admissible window (0, " << window
           << ") around mu_c = " << mu_c;
        throw validation_error(os.str());
    }

    SwapRecord rec;
    rec.mu_critical = mu_c;
    rec.delta_mu = delta_mu;

    if (cfg.epsilon == 0.0) {
        // v equals the basis vector e_i exactly: the levels truly cross and the
        // evolved states keep their eigenvectors. Identity pattern.
        rec.v_sk_before = 1.0;
        rec.dk1_sk1_before = 1.0;
        rec.dk1_sk_after = 0.0;
        rec.v_sk1_after = 0.0;
        return rec;
    }

    RankOneActivation act(d, v);
    const Eigen::VectorXd s_lo = eigenvalues_at_mu(act, mu_c - delta_mu);
    const Eigen::VectorXd s_hi = eigenvalues_at_mu(act, mu_c + delta_mu);
    const Eigen::VectorXcd sk_lo = eigenvector_at(s_lo[k], act);
    const Eigen::VectorXcd sk1_lo = eigenvector_at(s_lo[k + 1], act);
    const Eigen::VectorXcd sk_hi = eigenvector_at(s_hi[k], act);
    const Eigen::VectorXcd sk1_hi = eigenvector_at(s_hi[k + 1], act);
    rec.v_sk_before = std::abs(v.dot(sk_lo));
    rec.dk1_sk1_before = std::abs(sk1_lo[k + 1]);
    rec.dk1_sk_after = std::abs(sk_hi[k + 1]);
    rec.v_sk1_after = std::abs(v.dot(sk1_hi));
    return rec;
}

/// Permutation of eigenvalue slots: entry [slot] names the base eigenvector
/// occupying that slot. Composition convention matches sequential activations:
/// a.then(b) applies a first, then b.
class Permutation {
public:
    Permutation() = default;

    explicit Permutation(int n) : map_(static_cast<std::size_t>(n)) {
        std::iota(map_.begin(), map_.end(), 0);
    }

    static Permutation identity(int n) { return Permutation(n); }

    /// (k, k+1)
    static Permutation transposition(int n, int k) {
        if (k < 0 || k + 1 >= n)
            throw validation_error("transposition index out of range");
        Permutation p(n);
        std::swap(p.map_[static_cast<std::size_t>(k)], p.map_[static_cast<std::size_t>(k) + 1]);
        return p;
    }

    /// (first, first+1, ..., last): slot p < last takes the vector from p+1,
    /// slot last takes the vector from first.
    static Permutation cycle(int n, int first, int last) {
        if (first < 0 || last >= n || first > last)
            throw validation_error("cycle bounds out of range");
        Permutation p(n);
        for (int q = first; q < last; ++q)
            p.map_[static_cast<std::size_t>(q)] = q + 1;
        p.map_[static_cast<std::size_t>(last)] = first;
        return p;
    }

    int size() const { return static_cast<int>(map_.size()); }
    int operator[](int slot) const { return map_[static_cast<std::size_t>(slot)]; }

    Permutation then(const Permutation& next) const {
        if (next.size() != size())
            throw validation_error("permutation size mismatch");
        Permutation out(size());
        for (int p = 0; p < size(); ++p)
            out.map_[static_cast<std::size_t>(p)] = map_[static_cast<std::size_t>(next[p])];
        return out;
    }

    bool is_identity() const {
        for (int p = 0; p < size(); ++p)
            if (map_[static_cast<std::size_t>(p)] != p)
                return false;
        return true;
    }

    std::vector<std::vector<int>> cycles() const {
        std::vector<std::vector<int>> out;
        std::vector<bool> seen(map_.size(), false);
        for (int start = 0; start < size(); ++start) {
            if (seen[static_cast<std::size_t>(start)] || (*this)[start] == start)
                continue;
            std::vector<int> cyc;
            int cur = start;
            while (!seen[static_cast<std::size_t>(cur)]) {
                seen[static_cast<std::size_t>(cur)] = true;
                cyc.push_back(cur);
                cur = (*this)[cur];
            }
            out.push_back(std::move(cyc));
        }
        return out;
    }

    std::string cycle_notation() const {
        const auto cs = cycles();
        if (cs.empty())
            return "id";
        std::ostringstream os;
        for (const auto& cyc : cs) {
            os << '(';
            for (std::size_t q = 0; q < cyc.size(); ++q)
                os << cyc[q] << (q + 1 < cyc.size() ? " " : "");
            os << ')';
        }
        return os.str();
    }

    bool operator==(const Permutation&) const = default;

private:
    std::vector<int> map_;
};

/// Spectral term of an interaction operator: weight, unit eigenvector in the
/// ambient basis, and the coupling it is dialed to.
struct WeightedProjector {
    double lambda = 0.0;
    Eigen::VectorXcd vec;
    double mu_final = 0.0;
};

enum class ActivationOrder { descending_magnitude, ascending_magnitude, given };

/// Spectral decomposition of H_int into weighted rank-one projectors with
/// mu_final = g_final * lambda_k. Default order is descending |lambda| (highest
/// cost first). A zero interaction yields an empty list; otherwise zero-weight
/// terms are kept (their activation is a no-op).
inline std::vector<WeightedProjector> decompose_interaction(
    const Eigen::MatrixXcd& h_int, double g_final,
    ActivationOrder order = ActivationOrder::descending_magnitude) {
    SpectralDecomposition sd = eigendecompose(h_int);
    const int n = static_cast<int>(sd.dim());
    const double lmax = sd.eigenvalues.cwiseAbs().maxCoeff();
    if (lmax <= 1e-14 * std::max(1.0, static_cast<double>(n)))
        return {};
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (order == ActivationOrder::descending_magnitude) {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            const double ma = std::abs(sd.eigenvalues[a]), mb = std::abs(sd.eigenvalues[b]);
            if (ma != mb)
                return ma > mb;
            return sd.eigenvalues[a] > sd.eigenvalues[b];
        });
    } else if (order == ActivationOrder::ascending_magnitude) {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::abs(sd.eigenvalues[a]) < std::abs(sd.eigenvalues[b]);
        });
    }
    std::vector<WeightedProjector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int q : idx)
        out.push_back({sd.eigenvalues[q], sd.eigenvectors.col(q),
                       g_final * sd.eigenvalues[q]});
    return out;
}

/// Express a projector term in the eigenbasis of a starting Hamiltonian.
inline RankOneActivation bind_projector(const WeightedProjector& p,
                                        const SpectralDecomposition& base) {
    if (p.vec.size() != base.dim())
        throw validation_error("projector dimension does not match base");
    Eigen::VectorXcd coeffs = base.eigenvectors.adjoint() * p.vec;
    return RankOneActivation(base.eigenvalues, coeffs, p.mu_final);
}

/// Closed-form slot permutation of a single edge-case activation: the dominant
/// level i rises past every critical value below mu_final, giving the cycle
/// (i, i+1, ..., m). Throws unless the step is an edge case with off-dominant
/// weight at most eps_threshold and mu_final clear of guard bands.
inline Permutation predict_step_permutation(const RankOneActivation& act,
                                            double eps_threshold = 1e-3,
                                            double guard_frac = 1e-3) {
    const int n = static_cast<int>(act.dim());
    Eigen::Index imax = 0;
    act.v.cwiseAbs().maxCoeff(&imax);
    const int i = static_cast<int>(imax);
    double eps_step = 0.0;
    for (int q = 0; q < n; ++q)
        if (q != i)
            eps_step = std::max(eps_step, std::abs(act.v[q]));
    // 1% slack: the threshold refers to the raw edge-case parameter, while the
    // activation stores unit-normalized components, which are slightly larger.
    if (eps_step > eps_threshold * 1.01) {
        std::ostringstream os;
        os << "step is not an edge case: off-dominant weight " << eps_step << " exceeds "
           << eps_threshold << " (the numerical path remains available)";
        throw unsupported_prediction_error(os.str());
    }
    if (!std::isfinite(act.mu_final))
        throw validation_error("step coupling must be finite");
    if (act.mu_final <= 0.0 || i == n - 1)
        return Permutation::identity(n);
    const double vi_sq = std::norm(act.v[i]);
    const std::vector<double> ladder = critical_mu_ladder(act.d, i, vi_sq);
    detail::require_clear_of_guards(ladder, act.mu_final, guard_frac);
    int m = i;
    for (std::size_t q = 0; q < ladder.size(); ++q)
        if (ladder[q] < act.mu_final)
            m = i + 1 + static_cast<int>(q);
    if (m == i)
        return Permutation::identity(n);
    return Permutation::cycle(n, i, m);
}

struct PlanStep {
    RankOneActivation act;
    Permutation predicted;
};

/// Ordered activation sequence with per-step predicted permutations and their
/// left-to-right composition. Each step's coupling vector is expressed in the
/// eigenbasis current at that step; the base ladder is advanced through the
/// secular roots of the previous step.
struct ActivationPlan {
    SpectralDecomposition base;
    std::vector<PlanStep> steps;
    Permutation net;
};

inline ActivationPlan make_plan(const SpectralDecomposition& base,
                                const std::vector<std::pair<Eigen::VectorXcd, double>>& raw_steps,
                                double eps_threshold = 1e-3, double guard_frac = 1e-3) {
    const int n = static_cast<int>(base.dim());
    ActivationPlan plan{base, {}, Permutation::identity(n)};
    Eigen::VectorXd d_cur = base.eigenvalues;
    for (const auto& [v, mu_f] : raw_steps) {
        RankOneActivation act(d_cur, v, mu_f);
        Permutation step = predict_step_permutation(act, eps_threshold, guard_frac);
        plan.net = plan.net.then(step);
        plan.steps.push_back({act, std::move(step)});
        d_cur = eigenvalues_at_mu(act, mu_f);
    }
    return plan;
}

/// Net permutation of a plan, recomposed from the per-step records.
inline Permutation permutation_of_plan(const ActivationPlan& plan) {
    Permutation net = Permutation::identity(static_cast<int>(plan.base.dim()));
    for (const auto& step : plan.steps) {
        if (!std::isfinite(step.act.mu_final))
            throw validation_error("plan step has non-finite coupling");
        net = net.then(step.predicted);
    }
    if (!(net == plan.net))
        throw validation_error("plan net permutation does not match its step composition");
    return net;
}

/// Guaranteed lower bound C0 * eps^2 on every adjacent gap during an edge-case
/// sweep, with C0 = min_k (d_{k+1} - d_k)/2.
inline double min_gap_bound(const Eigen::VectorXd& d, double epsilon) {
    if (d.size() < 2)
        throw validation_error("gap bound needs at least two levels");
    double c0 = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k + 1 < d.size(); ++k)
        c0 = std::min(c0, 0.5 * (d[k + 1] - d[k]));
    return c0 * epsilon * epsilon;
}

struct ConvergenceConstants {
    double c1 = 0.0;  // post-critical: d_{k+1} - s_k < C1 eps^2
    double c2 = 0.0;  // pre-critical envelope: s_k - d_k <= C2 eps^2
    double z = 0.0;   // sum_{j >= k+2} 1/(d_j - d_{k+1})
};

/// Explicit convergence constants for the eps^2 pinching of s_k between d_k
/// and d_{k+1}. C1 = 2 (1 + (d_{k+1}-d_k) Z)(d_{k+1}-d_k). The pre-critical
/// bound is mu-dependent (see pre_critical_bound); C2 reports its value at the
/// midpoint mu = (d_k - d_i)/2, which is d_k - d_i.
inline ConvergenceConstants epsilon_convergence_constants(const Eigen::VectorXd& d, int i,
                                                          int k) {
    const int n = static_cast<int>(d.size());
    if (i < 0 || i >= n || k < 0 || k + 1 >= n)
        throw validation_error("constants need 0 <= i < N and 0 <= k <= N-2");
    ConvergenceConstants out;
    for (int j = k + 2; j < n; ++j)
        out.z += 1.0 / (d[j] - d[k + 1]);
    const double gap = d[k + 1] - d[k];
    out.c1 = 2.0 * (1.0 + gap * out.z) * gap;
    out.c2 = d[k] - d[i];
    return out;
}

/// mu-resolved pre-critical coefficient: s_k - d_k <= eps^2 * mu (d_k - d_i) /
/// ((d_k - d_i) - mu), valid for 0 <= mu < d_k - d_i. Saturated at mu = 0.
/// mu and eps refer to the raw edge-case parameterization: a sweep with the
/// unit-normalized vector reaches raw coupling mu at mu * |v_raw|^2.
inline double pre_critical_bound(const Eigen::VectorXd& d, int i, int k, double mu) {
    const int n = static_cast<int>(d.size());
    if (i < 0 || i >= n || k <= i || k >= n)
        throw validation_error("pre-critical bound needs i < k < N");
    const double spacing = d[k] - d[i];
    if (!(mu >= 0.0) || mu >= spacing)
        throw validation_error("pre-critical bound requires 0 <= mu < d_k - d_i");
    return mu * spacing / (spacing - mu);
}

struct GapScan {
    double min_gap = std::numeric_limits<double>::infinity();
    double mu_at_min = 0.0;
    double min_interlace = std::numeric_limits<double>::infinity();
    double mu_at_interlace = 0.0;
    std::size_t evaluations = 0;
};

/// Scan the minimum adjacent gap of D + mu|v><v| over [mu_lo, mu_hi], refining
/// around every local gap minimum down to refine_floor (callers tracking
/// edge-case crossings pass eps^2/10). Also tracks the closest approach of s_k
/// to the interlacing point d_{k+1} above it.
inline GapScan scan_min_gap(const RankOneActivation& act, double mu_lo, double mu_hi,
                            int coarse_steps = 1000, double refine_floor = 0.0) {
    if (!(mu_hi > mu_lo) || coarse_steps < 2)
        throw validation_error("scan needs mu_hi > mu_lo and >= 2 steps");
    const int n = static_cast<int>(act.dim());
    GapScan scan;

    const auto probe = [&](double mu) -> double {
        Eigen::VectorXd s = eigenvalues_at_mu(act, mu);
        ++scan.evaluations;
        double g = std::numeric_limits<double>::infinity();
        for (int k = 0; k + 1 < n; ++k)
            g = std::min(g, s[k + 1] - s[k]);
        if (g < scan.min_gap) {
            scan.min_gap = g;
            scan.mu_at_min = mu;
        }
        for (int k = 0; k + 1 < n; ++k) {
            const double il = act.d[k + 1] - s[k];
            if (il >= 0.0 && il < scan.min_interlace) {
                scan.min_interlace = il;
                scan.mu_at_interlace = mu;
            }
        }
        return g;
    };

    const double step0 = (mu_hi - mu_lo) / coarse_steps;
    std::vector<double> gaps(static_cast<std::size_t>(coarse_steps) + 1);
    for (int j = 0; j <= coarse_steps; ++j)
        gaps[static_cast<std::size_t>(j)] = probe(mu_lo + step0 * j);

    // zoom around each coarse local minimum until the step reaches the floor
    const double floor = refine_floor > 0.0 ? refine_floor : step0 * 1e-4;
    for (int j = 0; j <= coarse_steps; ++j) {
        const bool left_ok = j == 0 || gaps[j] <= gaps[j - 1];
        const bool right_ok = j == coarse_steps || gaps[j] <= gaps[j + 1];
        if (!(left_ok && right_ok))
            continue;
        double center = mu_lo + step0 * j;
        double step = step0;
        while (step > floor) {
            const double lo = std::max(mu_lo, center - 2.0 * step);
            const double hi = std::min(mu_hi, center + 2.0 * step);
            const int pts = 40;
            double best = std::numeric_limits<double>::infinity();
            double best_mu = center;
            for (int q = 0; q <= pts; ++q) {
                const double mu = lo + (hi - lo) * q / pts;
                const double g = probe(mu);
                if (g < best) {
                    best = g;
                    best_mu = mu;
                }
            }
            center = best_mu;
            step = (hi - lo) / pts;
        }
    }
    return scan;
}

} // namespace adiflow
