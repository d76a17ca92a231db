#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "common.hpp"
#include "dense.hpp"

namespace ceforge {

namespace detail {

// Cumulative integral of sin^m(u) over [0, pi] on a uniform grid, queried by
// linear interpolation. This is the slice-measure CDF of a (d-2)-sphere with
// m = d-3. Values can underflow to 0 near the endpoints for large m; the
// surviving mass around pi/2 is what matters.
class SinPowerCdf {
public:
    SinPowerCdf(unsigned m, size_t intervals = 8192) : m_(m), step_(std::numbers::pi / intervals) {
        cum_.resize(intervals + 1);
        cum_[0] = 0.0;
        double prev = 0.0;  // sin(0)^m with m >= 1
        for (size_t i = 1; i <= intervals; ++i) {
            const double u = static_cast<double>(i) * step_;
            const double cur = std::pow(std::sin(u), static_cast<double>(m));
            cum_[i] = cum_[i - 1] + 0.5 * (prev + cur) * step_;
            prev = cur;
        }
        total_ = cum_.back();
    }

    // Fraction of the slice sphere with polar angle <= psi.
    double fraction(double psi) const {
        if (psi <= 0.0) return 0.0;
        if (psi >= std::numbers::pi) return 1.0;
        if (m_ == 0) return psi / std::numbers::pi;
        const double x = psi / step_;
        const size_t i = std::min(cum_.size() - 2, static_cast<size_t>(x));
        const double frac = x - static_cast<double>(i);
        const double val = cum_[i] + frac * (cum_[i + 1] - cum_[i]);
        return std::clamp(val / total_, 0.0, 1.0);
    }

private:
    unsigned m_;
    double step_;
    double total_ = 1.0;
    std::vector<double> cum_;
};

// 8-point Gauss-Legendre abscissae/weights on [-1, 1].
inline constexpr double kGl8X[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
inline constexpr double kGl8W[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// IA/SF for d >= 3 by 1-D quadrature over cap slices at polar angle t from
// the first axis. The slice weight sin^{d-2}(t) is evaluated in log space
// relative to its maximum at t = theta, so the ratio stays well-formed at
// high dimension where both absolute areas underflow.
inline double cap_ratio_quadrature(double phi, double theta, size_t d, const SinPowerCdf& cdf,
                                   size_t panels) {
    const double cos_theta = std::cos(theta);
    const double cos_phi = std::cos(phi);
    const double sin_phi = std::sin(phi);
    const double log_sin_theta = std::log(std::sin(theta));
    const double power = static_cast<double>(d - 2);

    double num = 0.0, den = 0.0;
    const double h = theta / static_cast<double>(panels);
    for (size_t p = 0; p < panels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * h;
        for (int g = 0; g < 8; ++g) {
            const double t = mid + 0.5 * h * kGl8X[g];
            const double w = 0.5 * h * kGl8W[g];
            const double s = std::exp(power * (std::log(std::sin(t)) - log_sin_theta));
            const double c = std::clamp(
                (cos_theta - std::cos(t) * cos_phi) / (std::sin(t) * sin_phi), -1.0, 1.0);
            num += w * s * cdf.fraction(std::acos(c));
            den += w * s;
        }
    }
    return std::clamp(num / den, 0.0, 1.0);
}

} // namespace detail

// Area of the intersection of two hyperspherical caps of half-angle theta on
// the unit (d-1)-sphere whose axes are phi apart, divided by the area of one
// cap. 1 for coincident axes, 0 once the caps are disjoint (phi >= 2*theta).
inline double cap_overlap_ratio(double phi, double theta, size_t d) {
    if (d < 2) fail("cap_overlap_ratio: d must be >= 2");
    if (!(theta > 0.0 && theta <= std::numbers::pi / 2 + 1e-12)) {
        fail("cap_overlap_ratio: theta must lie in (0, pi/2]");
    }
    if (!(phi >= -1e-12 && phi <= std::numbers::pi + 1e-12)) {
        fail("cap_overlap_ratio: phi must lie in [0, pi]");
    }
    if (phi <= 0.0) return 1.0;
    if (phi >= 2.0 * theta) return 0.0;
    if (d == 2) return (2.0 * theta - phi) / (2.0 * theta);  // arc overlap
    detail::SinPowerCdf cdf(static_cast<unsigned>(d - 3));
    return detail::cap_ratio_quadrature(phi, theta, d, cdf, 256);
}

// Boundary weight of a node: the estimated risk that the nearest counterpart
// of a vector lies outside the cap shared with its assigned centroid.
inline double node_weight(std::span<const double> agg_unit, std::span<const double> centroid,
                          double theta, size_t d) {
    const double c = std::clamp(dot(agg_unit, centroid), -1.0, 1.0);
    return std::clamp(1.0 - cap_overlap_ratio(std::acos(c), theta, d), 0.0, 1.0);
}

// Precomputed IA/SF over a uniform phi grid for fixed (theta, d). Index
// construction evaluates this weight for every node in every partition;
// this keeps that O(1) per node after a single quadrature sweep.
class CapOverlapTable {
public:
    CapOverlapTable(double theta, size_t d, size_t grid = 2048)
        : theta_(theta), d_(d), step_(2.0 * theta / static_cast<double>(grid)) {
        if (d < 2) fail("CapOverlapTable: d must be >= 2");
        if (!(theta > 0.0 && theta <= std::numbers::pi / 2 + 1e-12)) {
            fail("CapOverlapTable: theta must lie in (0, pi/2]");
        }
        ratios_.resize(grid + 1);
        ratios_[0] = 1.0;
        ratios_[grid] = 0.0;
        if (d == 2) {
            for (size_t i = 1; i < grid; ++i) {
                ratios_[i] = 1.0 - static_cast<double>(i) / static_cast<double>(grid);
            }
            return;
        }
        detail::SinPowerCdf cdf(static_cast<unsigned>(d - 3));
        for (size_t i = 1; i < grid; ++i) {
            const double phi = static_cast<double>(i) * step_;
            ratios_[i] = detail::cap_ratio_quadrature(phi, theta_, d_, cdf, 128);
        }
    }

    double ratio(double phi) const {
        if (phi <= 0.0) return 1.0;
        if (phi >= 2.0 * theta_) return 0.0;
        const double x = phi / step_;
        const size_t i = std::min(ratios_.size() - 2, static_cast<size_t>(x));
        const double frac = x - static_cast<double>(i);
        return ratios_[i] + frac * (ratios_[i + 1] - ratios_[i]);
    }

    double weight_from_dot(double dot_value) const {
        const double phi = std::acos(std::clamp(dot_value, -1.0, 1.0));
        return std::clamp(1.0 - ratio(phi), 0.0, 1.0);
    }

    double theta() const { return theta_; }
    size_t dim() const { return d_; }

private:
    double theta_;
    size_t d_;
    double step_;
    std::vector<double> ratios_;
};

} // namespace ceforge
