#pragma once

// Initial curves of unit length sampled uniformly in arc length, and initial
// velocity fields.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wire/dynamics.hpp"
#include "wire/errors.hpp"
#include "wire/fields.hpp"
#include "wire/geometry.hpp"

namespace wire {

/// Closed chart curve c(s), s in [0, 2 pi), with its derivative.
struct ChartLoop {
    std::function<Vec(double)> point;
    std::function<Vec(double)> tangent;
};

namespace detail {

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                               0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                 0.4786286704993665, 0.2369268850561891};

inline double speed(const ManifoldModel& m, const ChartLoop& c, double s) {
    const Vec p = c.point(s);
    const Vec v = c.tangent(s);
    return std::sqrt(v.dot(metric_at(m, p) * v));
}

/// Length of c over [a, b] by 5-point Gauss-Legendre.
inline double gauss_length(const ManifoldModel& m, const ChartLoop& c, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i) sum += kGaussWeights[i] * speed(m, c, mid + half * kGaussNodes[i]);
    return half * sum;
}

}  // namespace detail

/// Cumulative length table of a loop on `cells` equal parameter cells.
class ArcLength {
public:
    ArcLength(const ManifoldModel& m, ChartLoop c, int cells = 2048) : m_(m), c_(std::move(c)), cum_(cells + 1, 0.0) {
        const double h = 2.0 * std::numbers::pi / cells;
        for (int i = 0; i < cells; ++i) cum_[i + 1] = cum_[i] + detail::gauss_length(m_, c_, i * h, (i + 1) * h);
    }

    double total() const { return cum_.back(); }

    /// Length from 0 to s.
    double length_to(double s) const {
        const int cells = static_cast<int>(cum_.size()) - 1;
        const double h = 2.0 * std::numbers::pi / cells;
        const int i = std::clamp(static_cast<int>(std::floor(s / h)), 0, cells - 1);
        return cum_[i] + detail::gauss_length(m_, c_, i * h, s);
    }

    /// Parameter whose length from 0 equals target, by Newton from the table.
    double parameter_at(double target) const {
        const int cells = static_cast<int>(cum_.size()) - 1;
        const double h = 2.0 * std::numbers::pi / cells;
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
        const int i = std::clamp(static_cast<int>(it - cum_.begin()) - 1, 0, cells - 1);
        double s = i * h + h * (target - cum_[i]) / std::max(cum_[i + 1] - cum_[i], 1e-300);
        for (int it2 = 0; it2 < 30; ++it2) {
            const double step = (length_to(s) - target) / detail::speed(m_, c_, s);
            s -= step;
            if (std::abs(step) < 1e-15) break;
        }
        return s;
    }

    /// N points equally spaced in arc length, the first at parameter 0.
    Field sample(int n) const {
        Field out(n, m_.dim());
        for (int k = 0; k < n; ++k) out.row(k) = c_.point(parameter_at(total() * k / n)).transpose();
        return out;
    }

    const ChartLoop& loop() const { return c_; }

private:
    const ManifoldModel& m_;
    ChartLoop c_;
    std::vector<double> cum_;
};

/// Chart circle of the given radius around center, in the plane of the first two coordinates.
inline ChartLoop chart_circle(const Vec& center, double radius, int mode = 0, double amplitude = 0.0) {
    ChartLoop c;
    c.point = [=](double s) {
        const double r = radius * (1.0 + amplitude * std::cos(mode * s));
        Vec p = center;
        p[0] += r * std::cos(s);
        p[1] += r * std::sin(s);
        return p;
    };
    c.tangent = [=](double s) {
        const double r = radius * (1.0 + amplitude * std::cos(mode * s));
        const double dr = -radius * amplitude * mode * std::sin(mode * s);
        Vec v = Vec::Zero(center.size());
        v[0] = dr * std::cos(s) - r * std::sin(s);
        v[1] = dr * std::sin(s) + r * std::cos(s);
        return v;
    };
    return c;
}

/// Flat circle of length 1, optionally with radius modulated by
/// 1 + amplitude cos(mode s), sampled uniformly in arc length.
inline Field flat_circle(int n, int dim = 2, int mode = 0, double amplitude = 0.0) {
    if (dim < 2) throw UsageError("a circle needs dimension at least 2");
    if (std::abs(amplitude) >= 1.0) throw UsageError("perturbation amplitude must be below 1");
    EuclideanModel m(dim);
    const ArcLength arc(m, chart_circle(Vec::Zero(dim), 1.0, mode, amplitude));
    return arc.sample(n) / arc.total();
}

/// Chart-circle radius in (lo, hi) giving a loop of unit length, by bisection.
inline double unit_length_radius(const ManifoldModel& m, const Vec& center, double lo, double hi) {
    auto len = [&](double r) { return ArcLength(m, chart_circle(center, r), 256).total(); };
    if (len(lo) > 1.0 || len(hi) < 1.0) throw UsageError("no loop of unit length around this center");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (len(mid) < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Unit-length loop of constant chart radius around center in the upper half-plane.
inline Field hyperbolic_loop(const ManifoldModel& m, int n, const Vec& center) {
    if (center.size() != 2) throw ShapeError("hyperbolic center needs 2 coordinates");
    if (!m.in_domain(center)) throw DomainError("loop center outside the chart domain of " + m.name());
    const double r = unit_length_radius(m, center, 1e-9 * center[1], (1.0 - 1e-9) * center[1]);
    return ArcLength(m, chart_circle(center, r)).sample(n);
}

/// Unit-length loop of constant chart radius around center in the stereographic chart.
inline Field sphere_loop(const ManifoldModel& m, int n, const Vec& center) {
    if (center.size() != 2) throw ShapeError("sphere center needs 2 coordinates");
    const double c2 = center.squaredNorm();
    // Loops through the chart origin would be fine, but beyond radius 1 + |c|
    // the length starts shrinking again; stay on the increasing branch.
    const double r = unit_length_radius(m, center, 1e-9, (1.0 + c2) / (1.0 + std::sqrt(c2)));
    return ArcLength(m, chart_circle(center, r)).sample(n);
}

/// Closed geodesic of unit length on the flat torus through point, along the first axis.
inline Field torus_geodesic(int n, const Vec& point) {
    if (point.size() != 2) throw ShapeError("torus point needs 2 coordinates");
    Field out(n, 2);
    for (int k = 0; k < n; ++k) {
        out(k, 0) = point[0] + static_cast<double>(k) / n;
        out(k, 1) = point[1];
    }
    return out;
}

/// Closest velocity to the given chart field that keeps the curve
/// inextensible at t = 0, g(D_x eta, xi) = 0: a multiple of the curvature
/// vector removes the mean stretching rate, then a tangential component
/// alpha xi with alpha_x = -g(D_x eta, xi) removes the rest.
inline Field admissible_velocity(const ManifoldModel& m, const Field& curve, const Field& velocity_chart) {
    detail::same_shape(curve, velocity_chart, "admissible_velocity");
    const GeometrySamples geo = sample_geometry(m, curve);
    const int N = static_cast<int>(curve.rows());
    Field xi = geo.to_frame(chart_diff_x(m, curve));
    for (int k = 0; k < N; ++k) xi.row(k).normalize();
    Field w = geo.to_frame(velocity_chart);

    const Field kappa = cov_dx(xi, xi, geo);
    const double k2 = norm2(kappa).mean();
    ScalarField rate = dot(xi, cov_dx(w, xi, geo));
    if (k2 > 1e-12) {
        w += (rate.mean() / k2) * kappa;
        rate = dot(xi, cov_dx(w, xi, geo));
    }
    rate.array() -= rate.mean();
    ScalarField alpha(N);
    alpha[0] = 0.0;
    for (int k = 0; k + 1 < N; ++k) alpha[k + 1] = alpha[k] - 0.5 * (rate[k] + rate[k + 1]) / N;
    alpha.array() -= alpha.mean();
    for (int k = 0; k < N; ++k) w.row(k) += alpha[k] * xi.row(k);
    return geo.to_chart(w);
}

/// Constant chart velocity.
inline Field translation_velocity(const Field& curve, const Vec& v) {
    if (v.size() != curve.cols()) throw ShapeError("translation velocity has wrong dimension");
    Field out(curve.rows(), curve.cols());
    for (int k = 0; k < curve.rows(); ++k) out.row(k) = v.transpose();
    return out;
}

/// omega * J (p - center) in the first two chart coordinates.
inline Field rotation_velocity(const Field& curve, double omega, const Vec& center) {
    if (center.size() != curve.cols()) throw ShapeError("rotation center has wrong dimension");
    Field out = Field::Zero(curve.rows(), curve.cols());
    for (int k = 0; k < curve.rows(); ++k) {
        out(k, 0) = -omega * (curve(k, 1) - center[1]);
        out(k, 1) = omega * (curve(k, 0) - center[0]);
    }
    return out;
}

/// Smooth random chart velocity from Fourier modes 1..3 with uniform
/// coefficients in [-amplitude, amplitude].
inline Field random_velocity(int n, int dim, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-amplitude, amplitude);
    Field out = Field::Zero(n, dim);
    for (int c = 0; c < dim; ++c)
        for (int mode = 1; mode <= 3; ++mode) {
            const double a = coef(rng), b = coef(rng);
            for (int k = 0; k < n; ++k) {
                const double x = 2.0 * std::numbers::pi * mode * k / n;
                out(k, c) += (a * std::cos(x) + b * std::sin(x)) / mode;
            }
        }
    return out;
}

}  // namespace wire
