#pragma once

// Periodic grid on the unit circle, vector fields along a curve in frame
// components, and the covariant difference operators built on them.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wire/errors.hpp"
#include "wire/geometry.hpp"

namespace wire {

/// Rows are grid points, columns are frame (or chart) components.
using Field = Eigen::MatrixXd;
using ScalarField = Eigen::VectorXd;
using FieldSeries = std::vector<Field>;

struct Grid {
    int n_points = 0;
    double dx = 0.0;

    explicit Grid(int n) : n_points(n), dx(1.0 / n) {
        if (n < 8) throw UsageError("grid needs N >= 8, got " + std::to_string(n));
    }
    double x(int k) const { return k * dx; }
    int wrap(int k) const { return ((k % n_points) + n_points) % n_points; }
};

/// Geometry evaluated at every curve point.
struct GeometrySamples {
    int n = 0;
    bool flat = false;
    std::vector<FrameMatrix> frame;
    std::vector<ChristoffelCoeffs> gamma;
    std::vector<CurvatureCoeffs> curvature;

    int size() const { return static_cast<int>(gamma.size()); }

    /// Pointwise Gamma(v, p).
    Field connection(const Field& v, const Field& p) const {
        Field out = Field::Zero(p.rows(), p.cols());
        if (flat) return out;
        for (int k = 0; k < size(); ++k) out.row(k) = gamma[k].apply(v.row(k).transpose(), p.row(k).transpose()).transpose();
        return out;
    }

    /// Pointwise R(u, v) p.
    Field curvature_apply(const Field& u, const Field& v, const Field& p) const {
        Field out = Field::Zero(p.rows(), p.cols());
        if (flat) return out;
        for (int k = 0; k < size(); ++k)
            out.row(k) = curvature[k]
                             .apply(u.row(k).transpose(), v.row(k).transpose(), p.row(k).transpose())
                             .transpose();
        return out;
    }

    /// Pointwise frame-to-chart conversion h p.
    Field to_chart(const Field& p) const {
        Field out(p.rows(), p.cols());
        for (int k = 0; k < size(); ++k) out.row(k) = (frame[k] * p.row(k).transpose()).transpose();
        return out;
    }

    /// Pointwise chart-to-frame conversion h^{-1} v.
    Field to_frame(const Field& v) const {
        Field out(v.rows(), v.cols());
        for (int k = 0; k < size(); ++k) out.row(k) = frame[k].lu().solve(v.row(k).transpose()).transpose();
        return out;
    }
};

/// Evaluates the model at each row of gamma; a row outside the chart raises DomainError.
inline GeometrySamples sample_geometry(const ManifoldModel& m, const Field& gamma) {
    if (gamma.cols() != m.dim()) throw ShapeError("curve dimension does not match the manifold");
    GeometrySamples g;
    g.n = m.dim();
    g.flat = m.is_flat();
    const int N = static_cast<int>(gamma.rows());
    g.frame.reserve(N);
    g.gamma.reserve(N);
    g.curvature.reserve(N);
    for (int k = 0; k < N; ++k) {
        const ChartPoint p = gamma.row(k).transpose();
        g.frame.push_back(frame_at(m, p));
        g.gamma.push_back(m.christoffel(p));
        g.curvature.push_back(m.curvature(p));
    }
    return g;
}

/// Full state of the coupled system at one time level. The *_prev fields
/// hold the preceding time level used by the three-level time stepper.
struct CurveState {
    Field gamma;
    Field xi;
    Field xi_t;
    Field eta;
    Field theta;
    double time = 0.0;

    Field gamma_prev;
    Field xi_prev;
    Field eta_prev;

    int n_points() const { return static_cast<int>(xi.rows()); }
    int dim() const { return static_cast<int>(xi.cols()); }
    bool has_prev() const { return xi_prev.size() > 0; }
};

namespace detail {
inline void same_shape(const Field& a, const Field& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(what) + ": field shapes differ (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
}
inline void same_points(const Field& a, const GeometrySamples& g, const char* what) {
    if (a.rows() != g.size()) throw ShapeError(std::string(what) + ": geometry sampled on a different grid");
}
}  // namespace detail

/// Centered periodic difference (p_{k+1} - p_{k-1}) / (2 dx).
inline Field diff_x(const Field& p) {
    const int N = static_cast<int>(p.rows());
    const double inv = 0.5 * N;
    Field out(p.rows(), p.cols());
    for (int k = 0; k < N; ++k) out.row(k) = inv * (p.row((k + 1) % N) - p.row((k + N - 1) % N));
    return out;
}

/// Compact periodic second difference (p_{k+1} - 2 p_k + p_{k-1}) / dx^2.
inline Field diff_xx(const Field& p) {
    const int N = static_cast<int>(p.rows());
    const double inv = static_cast<double>(N) * N;
    Field out(p.rows(), p.cols());
    for (int k = 0; k < N; ++k)
        out.row(k) = inv * (p.row((k + 1) % N) - 2.0 * p.row(k) + p.row((k + N - 1) % N));
    return out;
}

/// Centered difference of chart coordinates, using the model's chart
/// displacement so periodic charts difference correctly across the seam.
inline Field chart_diff_x(const ManifoldModel& m, const Field& gamma) {
    const int N = static_cast<int>(gamma.rows());
    Field out(gamma.rows(), gamma.cols());
    for (int k = 0; k < N; ++k)
        out.row(k) = (0.5 * N) * m.chart_difference(gamma.row((k + 1) % N).transpose(),
                                                    gamma.row((k + N - 1) % N).transpose())
                                     .transpose();
    return out;
}

/// D_x p = p_x + Gamma(xi, p).
inline Field cov_dx(const Field& p, const Field& xi, const GeometrySamples& geo) {
    detail::same_shape(p, xi, "cov_dx");
    detail::same_points(p, geo, "cov_dx");
    Field out = diff_x(p);
    if (!geo.flat) out += geo.connection(xi, p);
    return out;
}

/// D_t p at the middle of two time levels 2 dt apart.
inline Field cov_dt(const Field& p_prev, const Field& p_next, const Field& eta, double dt, const GeometrySamples& geo) {
    detail::same_shape(p_prev, p_next, "cov_dt");
    detail::same_shape(p_prev, eta, "cov_dt");
    detail::same_points(p_prev, geo, "cov_dt");
    if (!(dt > 0.0)) throw UsageError("cov_dt needs dt > 0");
    Field out = (p_next - p_prev) / (2.0 * dt);
    if (!geo.flat) out += geo.connection(eta, 0.5 * (p_next + p_prev));
    return out;
}

/// Pointwise dot product.
inline ScalarField dot(const Field& a, const Field& b) {
    detail::same_shape(a, b, "dot");
    return (a.array() * b.array()).rowwise().sum().matrix();
}

/// Pointwise squared norm.
inline ScalarField norm2(const Field& a) { return a.rowwise().squaredNorm(); }

/// |D_x xi|^2 per point, averaged over the two adjacent grid edges. For unit
/// vectors this makes g(xi, xi_xx) = -|xi_x|^2 hold exactly in flat space.
inline ScalarField dx_norm2(const Field& xi, const GeometrySamples& geo) {
    detail::same_points(xi, geo, "dx_norm2");
    const int N = static_cast<int>(xi.rows());
    const Field conn = geo.connection(xi, xi);
    ScalarField out(N);
    for (int k = 0; k < N; ++k) {
        const auto fwd = (xi.row((k + 1) % N) - xi.row(k)) * N + conn.row(k);
        const auto bwd = (xi.row(k) - xi.row((k + N - 1) % N)) * N + conn.row(k);
        out[k] = 0.5 * (fwd.squaredNorm() + bwd.squaredNorm());
    }
    return out;
}

/// v - g(v, xi) xi.
inline Field perp(const Field& v, const Field& xi) {
    detail::same_shape(v, xi, "perp");
    Field out = v;
    for (int k = 0; k < v.rows(); ++k) out.row(k) -= v.row(k).dot(xi.row(k)) * xi.row(k);
    return out;
}

/// dx * sum_k <p_k, q_k>.
inline double l2_inner(const Field& p, const Field& q) {
    detail::same_shape(p, q, "l2_inner");
    double s = 0.0;
    for (int k = 0; k < p.rows(); ++k) s += p.row(k).dot(q.row(k));
    return s / static_cast<double>(p.rows());
}

inline double l2_norm(const Field& p) { return std::sqrt(l2_inner(p, p)); }

/// Largest pointwise norm; for a scalar field, the largest absolute value.
template <class Derived>
double m0(const Eigen::MatrixBase<Derived>& u) {
    if (u.size() == 0) return 0.0;
    return std::sqrt(u.rowwise().squaredNorm().maxCoeff());
}

/// m0(u) + m0(u_x) + m0(u_t) with u_t supplied.
inline double m1(const Field& u, const Field& u_t) {
    detail::same_shape(u, u_t, "m1");
    return m0(u) + m0(diff_x(u)) + m0(u_t);
}

/// Time derivative of a series on a uniform time grid: centered inside,
/// second-order one-sided at both ends.
inline FieldSeries series_dt(const FieldSeries& s, double dt) {
    const int L = static_cast<int>(s.size());
    if (L < 3) throw UsageError("series_dt needs at least 3 time levels");
    FieldSeries out(L);
    for (int j = 1; j + 1 < L; ++j) out[j] = (s[j + 1] - s[j - 1]) / (2.0 * dt);
    out[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dt);
    out[L - 1] = (3.0 * s[L - 1] - 4.0 * s[L - 2] + s[L - 3]) / (2.0 * dt);
    return out;
}

/// sup over time of m0.
inline double M0(const FieldSeries& s) {
    double r = 0.0;
    for (const auto& f : s) r = std::max(r, m0(f));
    return r;
}

/// sup over time of m0(u) + m0(u_t).
inline double M01(const FieldSeries& s, double dt) {
    const FieldSeries st = series_dt(s, dt);
    double r = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) r = std::max(r, m0(s[j]) + m0(st[j]));
    return r;
}

/// sup over time of m1.
inline double M1(const FieldSeries& s, double dt) {
    const FieldSeries st = series_dt(s, dt);
    double r = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) r = std::max(r, m1(s[j], st[j]));
    return r;
}

inline FieldSeries series_diff(const FieldSeries& a, const FieldSeries& b) {
    if (a.size() != b.size()) throw ShapeError("series lengths differ");
    FieldSeries out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
    return out;
}

}  // namespace wire
