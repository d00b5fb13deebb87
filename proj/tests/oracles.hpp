#pragma once

// Independent reference computations used only by tests: finite-difference
// geometry, naive dense assembly and elimination, and small helpers.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wire/fields.hpp"
#include "wire/geometry.hpp"

namespace oracle {

using wire::Field;
using wire::Vec;

constexpr double kPi = std::numbers::pi;

/// Coordinate Christoffel symbols G^c_{ab} of the chart metric by central differences.
inline std::vector<double> coordinate_christoffel(const wire::ManifoldModel& m, const Vec& p, double h = 1e-5) {
    const int n = m.dim();
    std::vector<Eigen::MatrixXd> dg(n);
    for (int c = 0; c < n; ++c) {
        Vec a = p, b = p;
        a[c] += h;
        b[c] -= h;
        dg[c] = (Eigen::MatrixXd(m.metric(a)) - Eigen::MatrixXd(m.metric(b))) / (2 * h);
    }
    const Eigen::MatrixXd ginv = Eigen::MatrixXd(m.metric(p)).inverse();
    std::vector<double> out(n * n * n, 0.0);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0;
                for (int d = 0; d < n; ++d) s += 0.5 * ginv(c, d) * (dg[a](d, b) + dg[b](d, a) - dg[d](a, b));
                out[(c * n + a) * n + b] = s;
            }
    return out;
}

/// Frame connection coefficients from the chart metric alone: the e_k
/// component of nabla_{e_i} e_j, entry [(i*n + k)*n + j].
inline std::vector<double> frame_christoffel(const wire::ManifoldModel& m, const Vec& p, double h = 1e-5) {
    const int n = m.dim();
    const Eigen::MatrixXd fr = m.frame(p);
    const Eigen::MatrixXd inv = fr.inverse();
    std::vector<Eigen::MatrixXd> dfr(n);
    for (int b = 0; b < n; ++b) {
        Vec a1 = p, a2 = p;
        a1[b] += h;
        a2[b] -= h;
        dfr[b] = (Eigen::MatrixXd(m.frame(a1)) - Eigen::MatrixXd(m.frame(a2))) / (2 * h);
    }
    const std::vector<double> G = coordinate_christoffel(m, p, h);
    std::vector<double> out(n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // chart components of nabla_{e_i} e_j
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
            for (int b = 0; b < n; ++b) {
                const double eib = fr(b, i);
                for (int a = 0; a < n; ++a) {
                    v[a] += eib * dfr[b](a, j);
                    for (int c = 0; c < n; ++c) v[c] += eib * fr(a, j) * G[(c * n + b) * n + a];
                }
            }
            const Eigen::VectorXd w = inv * v;
            for (int k = 0; k < n; ++k) out[(i * n + k) * n + j] = w[k];
        }
    return out;
}

/// Frame curvature R(e_i, e_j) e_k, entry [((i*n + j)*n + k)*n + l], from
/// finite differences of the model's connection coefficients.
inline std::vector<double> frame_curvature(const wire::ManifoldModel& m, const Vec& p, double h = 1e-5) {
    const int n = m.dim();
    const Eigen::MatrixXd fr = m.frame(p);
    const wire::ChristoffelCoeffs g = m.christoffel(p);
    // dG[b] = d/dx^b of the coefficients
    std::vector<wire::ChristoffelCoeffs> gp, gm;
    for (int b = 0; b < n; ++b) {
        Vec a1 = p, a2 = p;
        a1[b] += h;
        a2[b] -= h;
        gp.push_back(m.christoffel(a1));
        gm.push_back(m.christoffel(a2));
    }
    auto e_of = [&](int i, int j, int mm, int k) {  // e_i applied to Gamma_j^mm_k
        double s = 0;
        for (int b = 0; b < n; ++b) s += fr(b, i) * (gp[b].at(j, mm, k) - gm[b].at(j, mm, k)) / (2 * h);
        return s;
    };
    std::vector<double> out(n * n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = e_of(i, j, l, k) - e_of(j, i, l, k);
                    for (int mm = 0; mm < n; ++mm) s += g.at(j, mm, k) * g.at(i, l, mm) - g.at(i, mm, k) * g.at(j, l, mm);
                    for (int q = 0; q < n; ++q) s -= (g.at(i, q, j) - g.at(j, q, i)) * g.at(q, l, k);
                    out[((i * n + j) * n + k) * n + l] = s;
                }
    return out;
}

/// Gaussian elimination with partial pivoting on a dense copy.
inline Eigen::VectorXd gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    Eigen::VectorXd x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

/// Dense matrix of the covariant centered difference, built entry by entry
/// from the model's coefficients at the curve points; index (k, a) -> k*n + a.
inline std::vector<std::vector<double>> dense_dx(const wire::ManifoldModel& m, const Field& gamma, const Field& xi) {
    const int N = static_cast<int>(xi.rows()), n = static_cast<int>(xi.cols());
    std::vector<std::vector<double>> d(N * n, std::vector<double>(N * n, 0.0));
    for (int k = 0; k < N; ++k) {
        const wire::ChristoffelCoeffs g = m.christoffel(gamma.row(k).transpose());
        for (int a = 0; a < n; ++a) {
            d[k * n + a][((k + 1) % N) * n + a] += 0.5 * N;
            d[k * n + a][((k + N - 1) % N) * n + a] -= 0.5 * N;
            for (int b = 0; b < n; ++b)
                for (int i = 0; i < n; ++i) d[k * n + a][k * n + b] += xi(k, i) * g.at(i, a, b);
        }
    }
    return d;
}

/// Pointwise unit random field.
inline Field random_unit_field(int N, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Field f(N, n);
    for (int k = 0; k < N; ++k) {
        for (int a = 0; a < n; ++a) f(k, a) = z(rng);
        f.row(k).normalize();
    }
    return f;
}

inline Field random_field(int N, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Field f(N, n);
    for (int k = 0; k < N; ++k)
        for (int a = 0; a < n; ++a) f(k, a) = z(rng);
    return f;
}

/// Unit-length flat circle sampled at x_k = k / N with its exact tangent.
inline void exact_circle(int N, Field& gamma, Field& xi) {
    gamma.resize(N, 2);
    xi.resize(N, 2);
    const double r = 1.0 / (2 * kPi);
    for (int k = 0; k < N; ++k) {
        const double s = 2 * kPi * k / N;
        gamma(k, 0) = r * std::cos(s);
        gamma(k, 1) = r * std::sin(s);
        xi(k, 0) = -std::sin(s);
        xi(k, 1) = std::cos(s);
    }
}

inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace oracle
