#pragma once

// Manifold models given by one chart carrying a global orthonormal frame.
// Vectors along the curve are stored as frame components, so the metric in
// those components is the identity.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "wire/errors.hpp"
#include "wire/expression.hpp"

namespace wire {

constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using ChartPoint = Vec;
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using MetricMatrix = FrameMatrix;

/// Connection coefficients in the frame: at(i, k, j) is the e_k component of
/// the covariant derivative of e_j along e_i.
struct ChristoffelCoeffs {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim> c{};

    explicit ChristoffelCoeffs(int dim = 0) : n(dim) {}
    double& at(int i, int k, int j) { return c[(i * n + k) * n + j]; }
    double at(int i, int k, int j) const { return c[(i * n + k) * n + j]; }

    /// Bilinear form (v, p) -> sum v^i p^j at(i, k, j) e_k.
    Vec apply(const Vec& v, const Vec& p) const {
        Vec out = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            if (v[i] == 0.0) continue;
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) out[k] += v[i] * p[j] * at(i, k, j);
        }
        return out;
    }

    /// Matrix of p -> apply(v, p).
    FrameMatrix matrix(const Vec& v) const {
        FrameMatrix m = FrameMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) m(k, j) += v[i] * at(i, k, j);
        return m;
    }

    /// Largest |at(i,k,j) + at(i,j,k)|.
    double antisymmetry_defect() const {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(at(i, k, j) + at(i, j, k)));
        return worst;
    }
};

/// Curvature in the frame: at(i, j, k, l) is the e_l component of R(e_i, e_j) e_k.
struct CurvatureCoeffs {
    int n = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> r{};

    explicit CurvatureCoeffs(int dim = 0) : n(dim) {}
    double& at(int i, int j, int k, int l) { return r[((i * n + j) * n + k) * n + l]; }
    double at(int i, int j, int k, int l) const { return r[((i * n + j) * n + k) * n + l]; }

    /// R(u, v) p.
    Vec apply(const Vec& u, const Vec& v, const Vec& p) const {
        Vec out = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            if (u[i] == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                const double uv = u[i] * v[j];
                if (uv == 0.0) continue;
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) out[l] += uv * p[k] * at(i, j, k, l);
            }
        }
        return out;
    }

    /// Largest violation of antisymmetry in (i,j) and in (k,l).
    double antisymmetry_defect() const {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        worst = std::max(worst, std::abs(at(i, j, k, l) + at(j, i, k, l)));
                        worst = std::max(worst, std::abs(at(i, j, k, l) + at(i, j, l, k)));
                    }
        return worst;
    }
};

/// A Riemannian manifold seen through one chart with an orthonormal frame.
/// Evaluators are pure and thread-safe.
class ManifoldModel {
public:
    virtual ~ManifoldModel() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual bool in_domain(const ChartPoint& p) const = 0;
    /// Frame-to-chart matrix: column j holds the chart components of e_j.
    virtual FrameMatrix frame(const ChartPoint& p) const = 0;
    virtual ChristoffelCoeffs christoffel(const ChartPoint& p) const = 0;
    virtual CurvatureCoeffs curvature(const ChartPoint& p) const = 0;
    /// Chart metric matrix G.
    virtual MetricMatrix metric(const ChartPoint& p) const = 0;
    virtual bool is_flat() const { return false; }
    /// Chart displacement from b to a; periodic charts return the shortest one.
    virtual Vec chart_difference(const ChartPoint& a, const ChartPoint& b) const { return a - b; }
};

using ManifoldPtr = std::shared_ptr<const ManifoldModel>;

namespace detail {
inline void require_domain(const ManifoldModel& m, const ChartPoint& p) {
    if (p.size() != m.dim()) throw ShapeError("chart point has wrong dimension for " + m.name());
    if (!m.in_domain(p)) {
        std::string coords;
        for (int i = 0; i < p.size(); ++i) coords += (i ? ", " : "") + std::to_string(p[i]);
        throw DomainError("point (" + coords + ") outside the chart domain of " + m.name());
    }
}
}  // namespace detail

inline FrameMatrix frame_at(const ManifoldModel& m, const ChartPoint& p) {
    detail::require_domain(m, p);
    return m.frame(p);
}

inline ChristoffelCoeffs christoffel_at(const ManifoldModel& m, const ChartPoint& p) {
    detail::require_domain(m, p);
    return m.christoffel(p);
}

inline CurvatureCoeffs curvature_at(const ManifoldModel& m, const ChartPoint& p) {
    detail::require_domain(m, p);
    return m.curvature(p);
}

inline MetricMatrix metric_at(const ManifoldModel& m, const ChartPoint& p) {
    detail::require_domain(m, p);
    return m.metric(p);
}

/// Flat space R^n with the coordinate frame.
class EuclideanModel final : public ManifoldModel {
public:
    explicit EuclideanModel(int n) : n_(n) {
        if (n < 1 || n > kMaxDim) throw UsageError("euclidean dimension must be 1.." + std::to_string(kMaxDim));
    }
    int dim() const override { return n_; }
    std::string name() const override { return "euclidean" + std::to_string(n_); }
    bool in_domain(const ChartPoint& p) const override { return p.allFinite(); }
    FrameMatrix frame(const ChartPoint&) const override { return FrameMatrix::Identity(n_, n_); }
    ChristoffelCoeffs christoffel(const ChartPoint&) const override { return ChristoffelCoeffs(n_); }
    CurvatureCoeffs curvature(const ChartPoint&) const override { return CurvatureCoeffs(n_); }
    MetricMatrix metric(const ChartPoint&) const override { return MetricMatrix::Identity(n_, n_); }
    bool is_flat() const override { return true; }

private:
    int n_;
};

/// Plane with metric exp(2 lambda) (dx^2 + dy^2) and frame e_i = exp(-lambda) d/dx^i.
class ConformalPlaneModel : public ManifoldModel {
public:
    using LogFactor = std::function<Jet2(double, double)>;
    using Domain = std::function<bool(double, double)>;

    ConformalPlaneModel(std::string name, LogFactor lambda, Domain domain)
        : name_(std::move(name)), lambda_(std::move(lambda)), domain_(std::move(domain)) {}

    int dim() const override { return 2; }
    std::string name() const override { return name_; }

    bool in_domain(const ChartPoint& p) const override {
        if (p.size() != 2 || !p.allFinite()) return false;
        if (domain_ && !domain_(p[0], p[1])) return false;
        const Jet2 l = lambda_(p[0], p[1]);
        return std::isfinite(l.f) && std::isfinite(l.g[0]) && std::isfinite(l.g[1]) && std::isfinite(l.laplacian());
    }

    FrameMatrix frame(const ChartPoint& p) const override {
        const double s = std::exp(-lambda_(p[0], p[1]).f);
        return s * FrameMatrix::Identity(2, 2);
    }

    ChristoffelCoeffs christoffel(const ChartPoint& p) const override {
        const Jet2 l = lambda_(p[0], p[1]);
        const double s = std::exp(-l.f);
        ChristoffelCoeffs c(2);
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
                for (int j = 0; j < 2; ++j)
                    c.at(i, k, j) = s * ((i == k ? l.g[j] : 0.0) - (i == j ? l.g[k] : 0.0));
        return c;
    }

    CurvatureCoeffs curvature(const ChartPoint& p) const override {
        const double k = gauss_curvature(p);
        CurvatureCoeffs r(2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int m = 0; m < 2; ++m)
                    for (int l = 0; l < 2; ++l)
                        r.at(i, j, m, l) = k * ((j == m && i == l ? 1.0 : 0.0) - (i == m && j == l ? 1.0 : 0.0));
        return r;
    }

    MetricMatrix metric(const ChartPoint& p) const override {
        const double e2 = std::exp(2.0 * lambda_(p[0], p[1]).f);
        return e2 * MetricMatrix::Identity(2, 2);
    }

    double gauss_curvature(const ChartPoint& p) const {
        const Jet2 l = lambda_(p[0], p[1]);
        return -std::exp(-2.0 * l.f) * l.laplacian();
    }

private:
    std::string name_;
    LogFactor lambda_;
    Domain domain_;
};

/// Flat torus R^2 / Z^2 with coordinates read modulo 1.
class FlatTorusModel final : public ManifoldModel {
public:
    int dim() const override { return 2; }
    std::string name() const override { return "flat-torus"; }
    bool in_domain(const ChartPoint& p) const override { return p.size() == 2 && p.allFinite(); }
    FrameMatrix frame(const ChartPoint&) const override { return FrameMatrix::Identity(2, 2); }
    ChristoffelCoeffs christoffel(const ChartPoint&) const override { return ChristoffelCoeffs(2); }
    CurvatureCoeffs curvature(const ChartPoint&) const override { return CurvatureCoeffs(2); }
    MetricMatrix metric(const ChartPoint&) const override { return MetricMatrix::Identity(2, 2); }
    bool is_flat() const override { return true; }
    Vec chart_difference(const ChartPoint& a, const ChartPoint& b) const override {
        Vec d = a - b;
        for (int i = 0; i < d.size(); ++i) d[i] -= std::round(d[i]);
        return d;
    }
};

inline ManifoldPtr make_euclidean(int n) { return std::make_shared<EuclideanModel>(n); }
inline ManifoldPtr make_flat_torus() { return std::make_shared<FlatTorusModel>(); }

/// Upper half-plane y > 0 with metric (dx^2 + dy^2) / y^2.
inline ManifoldPtr make_hyperbolic() {
    return std::make_shared<ConformalPlaneModel>(
        "hyperbolic",
        [](double, double y) { return -log(Jet2::variable(1, y)); },
        [](double, double y) { return y > 0.0; });
}

/// Unit sphere in the stereographic chart from the north pole, metric 4 / (1 + |x|^2)^2.
inline ManifoldPtr make_sphere() {
    return std::make_shared<ConformalPlaneModel>(
        "sphere",
        [](double x, double y) {
            const Jet2 X = Jet2::variable(0, x), Y = Jet2::variable(1, y);
            return Jet2::constant(std::log(2.0)) - log(Jet2::constant(1.0) + X * X + Y * Y);
        },
        nullptr);
}

/// Conformal plane with lambda given as an expression in x and y.
inline ManifoldPtr make_conformal(const std::string& lambda_expr) {
    auto expr = std::make_shared<Expression>(lambda_expr);
    return std::make_shared<ConformalPlaneModel>(
        "conformal", [expr](double x, double y) { return expr->eval(x, y); }, nullptr);
}

}  // namespace wire
