#pragma once

// Monitored quantities along a run: energy and its parts, constraint drift,
// bentness, multiplier range, tangent coherence and characteristic transport.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "wire/dynamics.hpp"
#include "wire/elliptic.hpp"
#include "wire/fields.hpp"

namespace wire {

struct EnergyParts {
    double dt_part = 0.0;   // |D_t xi|^2
    double eta_part = 0.0;  // |eta|^2
    double dx_part = 0.0;   // |D_x xi|^2
    double total() const { return dt_part + eta_part + dx_part; }
};

struct DiagnosticsRecord {
    double time = 0.0;
    double energy = 0.0;
    EnergyParts parts;
    double constraint_drift = 0.0;
    double bentness = std::numeric_limits<double>::quiet_NaN();
    double mu_min = std::numeric_limits<double>::quiet_NaN();
    double mu_max = std::numeric_limits<double>::quiet_NaN();
    double gamma_xi_drift = 0.0;
    double transport_residual = std::numeric_limits<double>::quiet_NaN();
};

/// L2 quadrature of |D_t xi|^2, |eta|^2 and |D_x xi|^2.
inline EnergyParts energy(const CurveState& s, const GeometrySamples& geo) {
    EnergyParts e;
    const Field dti = s.xi_t + geo.connection(s.eta, s.xi);
    e.dt_part = l2_inner(dti, dti);
    e.eta_part = l2_inner(s.eta, s.eta);
    e.dx_part = dx_norm2(s.xi, geo).sum() / static_cast<double>(s.n_points());
    return e;
}

/// max_k | |xi_k|^2 - 1 |.
inline double constraint_drift(const Field& xi) { return (norm2(xi).array() - 1.0).abs().maxCoeff(); }

/// Largest mismatch between the discrete rate of |xi^+-|^2 along the grid
/// characteristics and +-2 g(xi^+-, theta^perp), over consecutive levels of a
/// trajectory with dt = dx. Returns nullopt when dt differs from dx.
inline std::optional<double> transport_check(const std::vector<CurveState>& traj, const ManifoldModel& m, double dt) {
    if (traj.size() < 2) throw UsageError("transport_check needs at least 2 time levels");
    const int N = traj.front().n_points();
    if (std::abs(dt * N - 1.0) > 1e-12) return std::nullopt;
    struct Level {
        Field plus, minus, th_perp;
    };
    std::vector<Level> lv;
    for (const auto& s : traj) {
        if (s.theta.size() == 0) throw UsageError("transport_check needs theta on every level");
        const GeometrySamples g = sample_geometry(m, s.gamma);
        const Field dxi = cov_dx(s.xi, s.xi, g);
        const Field dti = s.xi_t + g.connection(s.eta, s.xi);
        lv.push_back({dxi + dti, dxi - dti, perp(s.theta, s.xi)});
    }
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < lv.size(); ++j) {
        for (int k = 0; k < N; ++k) {
            for (int sgn : {+1, -1}) {
                const int kn = ((k - sgn) % N + N) % N;  // characteristic x -+ t
                const Field& a = sgn > 0 ? lv[j].plus : lv[j].minus;
                const Field& b = sgn > 0 ? lv[j + 1].plus : lv[j + 1].minus;
                const double rate = (b.row(kn).squaredNorm() - a.row(k).squaredNorm()) / dt;
                const double rhs = sgn * (a.row(k).dot(lv[j].th_perp.row(k)) + b.row(kn).dot(lv[j + 1].th_perp.row(kn)));
                worst = std::max(worst, std::abs(rate - rhs));
            }
        }
    }
    return worst;
}

/// Per-level diagnostics; bentness costs a linear solve and is evaluated
/// only when requested.
inline DiagnosticsRecord diagnose(const CurveState& s, const ManifoldModel& m, bool with_bentness,
                                  const EllipticOptions& opt = {}) {
    const GeometrySamples g = sample_geometry(m, s.gamma);
    DiagnosticsRecord r;
    r.time = s.time;
    r.parts = energy(s, g);
    r.energy = r.parts.total();
    r.constraint_drift = constraint_drift(s.xi);
    if (with_bentness) r.bentness = bentness(s.xi, g, opt).b_value;
    if (s.theta.size() > 0) {
        const ScalarField mu = reconstruct_mu(s, g);
        r.mu_min = mu.minCoeff();
        r.mu_max = mu.maxCoeff();
    }
    r.gamma_xi_drift = m0(g.to_frame(chart_diff_x(m, s.gamma)) - s.xi);
    return r;
}

}  // namespace wire
