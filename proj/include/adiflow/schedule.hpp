#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace adiflow {

enum class ScheduleKind { linear, aqc_rational, custom_grid };

/// Monotone coupling ramp mu(t) with mu(0) = 0 and mu(t_final) = mu_final.
/// The shape functions are expressed in the unitless time u = t / t_final, so
/// the adiabatic-condition quotient is independent of t_final.
///
/// aqc_rational follows mu(t) = 1/(T/t - 1); reaching mu_final at t_final
/// fixes T = t_final (1 + mu_final)/mu_final, giving the shape
/// mu(u) = u mu_final / ((1 + mu_final) - u mu_final).
class Schedule {
public:
    static Schedule linear(double t_final, double mu_final) {
        return Schedule(ScheduleKind::linear, t_final, mu_final, {});
    }

    static Schedule aqc(double t_final, double mu_final) {
        if (!(mu_final > 0.0))
            throw validation_error("aqc schedule needs mu_final > 0");
        return Schedule(ScheduleKind::aqc_rational, t_final, mu_final, {});
    }

    /// Piecewise-linear schedule through (t, mu) samples.
    static Schedule from_grid(std::vector<std::pair<double, double>> samples) {
        if (samples.size() < 2)
            throw validation_error("custom schedule needs at least two samples");
        if (samples.front().first != 0.0 || samples.front().second != 0.0)
            throw validation_error("schedule must start at (t, mu) = (0, 0)");
        for (std::size_t q = 1; q < samples.size(); ++q) {
            if (!(samples[q].first > samples[q - 1].first))
                throw validation_error("schedule times must strictly increase");
            if (samples[q].second < samples[q - 1].second)
                throw validation_error("mu must be monotone non-decreasing");
        }
        const double t_final = samples.back().first;
        const double mu_final = samples.back().second;
        return Schedule(ScheduleKind::custom_grid, t_final, mu_final, std::move(samples));
    }

    ScheduleKind kind() const { return kind_; }
    double t_final() const { return t_final_; }
    double mu_final() const { return mu_final_; }

    /// Rescale to a new final time, preserving the shape.
    Schedule with_t_final(double t_final) const {
        Schedule s = *this;
        if (!(t_final > 0.0))
            throw validation_error("t_final must be positive");
        if (kind_ == ScheduleKind::custom_grid) {
            const double f = t_final / t_final_;
            for (auto& [t, mu] : s.samples_)
                t *= f;
        }
        s.t_final_ = t_final;
        return s;
    }

    double mu(double t) const { return mu_shape(t / t_final_); }

    double mu_shape(double u) const {
        u = std::min(std::max(u, 0.0), 1.0);
        switch (kind_) {
            case ScheduleKind::linear:
                return mu_final_ * u;
            case ScheduleKind::aqc_rational: {
                const double a = 1.0 + mu_final_;
                return u * mu_final_ / (a - u * mu_final_);
            }
            case ScheduleKind::custom_grid:
                return grid_mu(u * t_final_);
        }
        return 0.0;
    }

    double dmu_shape(double u) const {
        u = std::min(std::max(u, 0.0), 1.0);
        switch (kind_) {
            case ScheduleKind::linear:
                return mu_final_;
            case ScheduleKind::aqc_rational: {
                const double a = 1.0 + mu_final_;
                const double den = a - u * mu_final_;
                return mu_final_ * a / (den * den);
            }
            case ScheduleKind::custom_grid: {
                const double t = u * t_final_;
                for (std::size_t q = 1; q < samples_.size(); ++q) {
                    if (t <= samples_[q].first || q + 1 == samples_.size()) {
                        const double dt = samples_[q].first - samples_[q - 1].first;
                        const double dm = samples_[q].second - samples_[q - 1].second;
                        return dm / dt * t_final_;
                    }
                }
                return 0.0;
            }
        }
        return 0.0;
    }

private:
    Schedule(ScheduleKind kind, double t_final, double mu_final,
             std::vector<std::pair<double, double>> samples)
        : kind_(kind), t_final_(t_final), mu_final_(mu_final), samples_(std::move(samples)) {
        if (!(t_final_ > 0.0))
            throw validation_error("t_final must be positive");
    }

    double grid_mu(double t) const {
        if (t <= samples_.front().first)
            return samples_.front().second;
        for (std::size_t q = 1; q < samples_.size(); ++q) {
            if (t <= samples_[q].first) {
                const auto& [t0, m0] = samples_[q - 1];
                const auto& [t1, m1] = samples_[q];
                return m0 + (m1 - m0) * (t - t0) / (t1 - t0);
            }
        }
        return samples_.back().second;
    }

    ScheduleKind kind_;
    double t_final_;
    double mu_final_;
    std::vector<std::pair<double, double>> samples_;
};

} // namespace adiflow
