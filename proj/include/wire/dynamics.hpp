#pragma once

// The coupled system for (theta, xi, eta, gamma): source assembly, the
// marching time step, the fixed-point map over a short window, admissible
// initial data, the multiplier and the residual of the original equation.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "wire/elliptic.hpp"
#include "wire/errors.hpp"
#include "wire/fields.hpp"
#include "wire/geometry.hpp"
#include "wire/wave.hpp"

namespace wire {

/// Geometry at the curve points, with a chart exit reported as ChartExitError.
inline GeometrySamples sample_along(const ManifoldModel& m, const Field& gamma) {
    try {
        return sample_geometry(m, gamma);
    } catch (const ChartExitError&) {
        throw;
    } catch (const DomainError& e) {
        throw ChartExitError(std::string("curve left the chart: ") + e.what());
    }
}

/// Psi and Phi at one time level. D_t xi is xi_t + Gamma(eta, xi); when
/// dt_norm2 is given it replaces |D_t xi|^2 pointwise.
inline SourceTerms assemble_sources(const CurveState& s, const GeometrySamples& geo,
                                    const ScalarField* dt_norm2 = nullptr) {
    detail::same_shape(s.xi, s.xi_t, "assemble_sources");
    detail::same_shape(s.xi, s.eta, "assemble_sources");
    const Field dxi = cov_dx(s.xi, s.xi, geo);
    const Field dti = s.xi_t + geo.connection(s.eta, s.xi);
    const ScalarField d2 = dx_norm2(s.xi, geo);
    const ScalarField t2 = dt_norm2 ? *dt_norm2 : norm2(dti);
    SourceTerms src;
    src.phi = Field(s.xi.rows(), s.xi.cols());
    for (int k = 0; k < s.xi.rows(); ++k) src.phi.row(k) = (t2[k] - d2[k]) * s.xi.row(k);
    if (geo.flat) {
        src.psi = Field::Zero(s.xi.rows(), s.xi.cols());
    } else {
        src.psi = geo.curvature_apply(s.xi, dxi, s.xi) - geo.curvature_apply(s.xi, dti, s.eta);
        src.phi -= geo.curvature_apply(s.xi, s.eta, s.eta);
    }
    return src;
}

/// Right-hand side of eta_t = -Gamma(eta, eta) + flux + D_x xi, where flux is
/// D_x theta + Psi from the theta solve.
inline Field eta_rate(const Field& eta, const Field& xi, const Field& flux, const GeometrySamples& geo) {
    return flux + cov_dx(xi, xi, geo) - geo.connection(eta, eta);
}

struct StepOptions {
    EllipticOptions elliptic;
    LeapfrogOptions leapfrog;
    /// Extra passes resolving the dependence of theta on the centered D_t xi.
    int corrector_passes = 2;
    /// Bentness is checked against the threshold every this many steps.
    int bentness_every = 10;
};

/// Marches the coupled system: theta solve, leapfrog for xi, explicit
/// midpoint for eta and gamma. All unknowns live on integer time levels.
class Stepper {
public:
    Stepper(ManifoldPtr model, StepOptions opt = {}) : model_(std::move(model)), opt_(opt) {}

    /// Advances by dt. On return, `state` carries theta and the centered
    /// xi_t of its own level; the returned state is the next level.
    CurveState step(CurveState& state, double dt) {
        detail::check_cfl(dt, state.n_points());
        const GeometrySamples geo = sample_along(*model_, state.gamma);
        EllipticOptions eopt = opt_.elliptic;
        eopt.check_bentness = opt_.elliptic.check_bentness && opt_.bentness_every > 0 &&
                              count_ % opt_.bentness_every == 0;
        ++count_;
        const FluxFormSolver theta_solver(state.xi, geo, eopt);
        return state.has_prev() ? advance(state, geo, theta_solver, dt) : start(state, geo, theta_solver, dt);
    }

    const StepOptions& options() const { return opt_; }
    const ManifoldModel& model() const { return *model_; }

private:
    CurveState start(CurveState& s, const GeometrySamples& geo, const FluxFormSolver& solver, double dt) {
        const SourceTerms src = assemble_sources(s, geo);
        const FluxSolution th = solver.solve(src.psi, src.phi);
        s.theta = th.u;

        CurveState next;
        next.time = s.time + dt;
        const Field rate = eta_rate(s.eta, s.xi, th.flux, geo);
        next.eta = s.eta + dt * rate;
        const Field half = s.gamma + 0.5 * dt * geo.to_chart(s.eta);
        const GeometrySamples geo_half = sample_along(*model_, half);
        next.gamma = s.gamma + dt * geo_half.to_chart(s.eta + 0.5 * dt * rate);
        const GeometrySamples geo_next = sample_along(*model_, next.gamma);

        LeapfrogLevels lv;
        lv.geo = &geo;
        lv.geo_next = &geo_next;
        lv.eta = s.eta;
        lv.eta_next = next.eta;
        next.xi = leapfrog_start(s.xi, s.xi_t, s.theta, lv, dt, opt_.leapfrog);
        next.xi_t = 2.0 * (next.xi - s.xi) / dt - s.xi_t;

        // Heun corrector for eta; a first-order start would seed an
        // oscillating mode of the two-step scheme that never decays.
        EllipticOptions eopt = opt_.elliptic;
        eopt.check_bentness = false;
        const FluxSolution th1 = solve_theta(next, assemble_sources(next, geo_next), geo_next, eopt);
        next.eta = s.eta + 0.5 * dt * (rate + eta_rate(next.eta, next.xi, th1.flux, geo_next));
        lv.eta_next = next.eta;
        next.xi = leapfrog_start(s.xi, s.xi_t, s.theta, lv, dt, opt_.leapfrog);
        next.xi_t = 2.0 * (next.xi - s.xi) / dt - s.xi_t;

        next.gamma_prev = s.gamma;
        next.xi_prev = s.xi;
        next.eta_prev = s.eta;
        return next;
    }

    CurveState advance(CurveState& s, const GeometrySamples& geo, const FluxFormSolver& solver, double dt) {
        const GeometrySamples geo_prev = sample_along(*model_, s.gamma_prev);
        CurveState next;
        next.time = s.time + dt;
        next.gamma = s.gamma_prev + 2.0 * dt * geo.to_chart(s.eta);
        const GeometrySamples geo_next = sample_along(*model_, next.gamma);

        const Field conn = geo.connection(s.eta, s.xi);
        LeapfrogLevels lv;
        lv.geo = &geo;
        lv.geo_next = &geo_next;
        lv.eta = s.eta;
        lv.conn_prev = geo_prev.connection(s.eta_prev, s.xi_prev);

        Field w = s.xi_t;
        Field xi_next = s.xi_prev + 2.0 * dt * w;
        FluxSolution th;
        for (int pass = 0; pass <= opt_.corrector_passes; ++pass) {
            ScalarField t2(s.n_points());
            for (int k = 0; k < s.n_points(); ++k)
                t2[k] = 0.5 * (((xi_next.row(k) - s.xi.row(k)) / dt + conn.row(k)).squaredNorm() +
                               ((s.xi.row(k) - s.xi_prev.row(k)) / dt + conn.row(k)).squaredNorm());
            s.xi_t = w;
            const SourceTerms src = assemble_sources(s, geo, &t2);
            th = solver.solve(src.psi, src.phi);
            next.eta = s.eta_prev + 2.0 * dt * eta_rate(s.eta, s.xi, th.flux, geo);
            lv.eta_next = next.eta;
            xi_next = leapfrog_step(s.xi_prev, s.xi, th.u, lv, dt, opt_.leapfrog);
            w = (xi_next - s.xi_prev) / (2.0 * dt);
        }
        s.theta = th.u;
        s.xi_t = w;

        next.xi = std::move(xi_next);
        next.xi_t = (3.0 * next.xi - 4.0 * s.xi + s.xi_prev) / (2.0 * dt);
        next.gamma_prev = s.gamma;
        next.xi_prev = s.xi;
        next.eta_prev = s.eta;
        return next;
    }

    ManifoldPtr model_;
    StepOptions opt_;
    long count_ = 0;
};

/// Initial data of the coupled system.
struct InitialData {
    Field a;        // curve, chart coordinates
    Field b;        // eta, frame components
    Field a_tilde;  // xi
    Field b_tilde;  // xi_t
    /// Largest pointwise size of the component of xi_t removed along xi.
    double correction = 0.0;

    CurveState to_state() const {
        CurveState s;
        s.gamma = a;
        s.eta = b;
        s.xi = a_tilde;
        s.xi_t = b_tilde;
        return s;
    }
};

/// Builds admissible initial data from curve samples and a velocity field in
/// chart components: xi is the normalized discrete tangent in the frame and
/// xi_t follows from the compatibility identity, projected orthogonal to xi.
inline InitialData prepare_initial(const ManifoldModel& m, const Field& curve, const Field& velocity_chart) {
    detail::same_shape(curve, velocity_chart, "prepare_initial");
    if (curve.rows() < 8) throw UsageError("prepare_initial needs at least 8 curve samples");
    const GeometrySamples geo = sample_geometry(m, curve);
    InitialData d;
    d.a = curve;
    d.b = geo.to_frame(velocity_chart);
    Field tangent = geo.to_frame(chart_diff_x(m, curve));
    for (int k = 0; k < tangent.rows(); ++k) {
        const double len = tangent.row(k).norm();
        if (!(len > 1e-12)) throw DegenerateCurveError("curve tangent vanishes at sample " + std::to_string(k));
        tangent.row(k) /= len;
    }
    d.a_tilde = tangent;
    Field bt = cov_dx(d.b, d.a_tilde, geo) - geo.connection(d.b, d.a_tilde);
    for (int k = 0; k < bt.rows(); ++k) {
        const double along = bt.row(k).dot(d.a_tilde.row(k));
        d.correction = std::max(d.correction, std::abs(along));
        bt.row(k) -= along * d.a_tilde.row(k);
    }
    d.b_tilde = bt;
    return d;
}

/// Lagrange multiplier |D_x xi|^2 - |D_t xi|^2 - g(theta, xi) - 1.
inline ScalarField reconstruct_mu(const CurveState& s, const GeometrySamples& geo) {
    if (s.theta.size() == 0) throw UsageError("reconstruct_mu needs a solved theta");
    const Field dti = s.xi_t + geo.connection(s.eta, s.xi);
    return dx_norm2(s.xi, geo) - norm2(dti) - dot(s.theta, s.xi) - ScalarField::Ones(s.n_points());
}

struct ResidualReport {
    std::vector<double> time;
    /// m0 of the residual of the original equation per evaluated level.
    std::vector<double> residual;
    /// m0 of (frame components of gamma_x) - xi per evaluated level.
    std::vector<double> tangent_drift;
};

/// Residual of -D_t gamma_t + D_x (D_t^2 gamma_x - D_x^2 gamma_x - mu gamma_x) + Psi
/// on a trajectory of equally spaced levels that carry theta. gamma_x and
/// gamma_t are differences of the curve positions; mu is reconstructed from
/// xi, its centered time difference and theta. Levels 2..L-3 are evaluated.
inline ResidualReport residual_base_single(const std::vector<CurveState>& traj, const ManifoldModel& m, double dt) {
    if (traj.size() < 5) throw UsageError("residual_base_single needs at least 5 time levels");
    for (const auto& s : traj)
        if (s.theta.size() == 0) throw UsageError("residual_base_single needs theta on every level");
    const int L = static_cast<int>(traj.size());
    const int N = traj.front().n_points();
    std::vector<GeometrySamples> geo;
    geo.reserve(L);
    for (const auto& s : traj) geo.push_back(sample_geometry(m, s.gamma));

    // Frame components of gamma_x on every level and gamma_t on interior levels.
    FieldSeries gx(L), gt(L);
    for (int j = 0; j < L; ++j) gx[j] = geo[j].to_frame(chart_diff_x(m, traj[j].gamma));
    for (int j = 1; j + 1 < L; ++j) {
        Field d(N, traj[j].dim());
        for (int k = 0; k < N; ++k)
            d.row(k) = m.chart_difference(traj[j + 1].gamma.row(k).transpose(), traj[j - 1].gamma.row(k).transpose())
                           .transpose() /
                       (2.0 * dt);
        gt[j] = geo[j].to_frame(d);
    }

    ResidualReport rep;
    for (int j = 2; j + 2 < L; ++j) {
        const CurveState& s = traj[j];
        const GeometrySamples& g = geo[j];
        const Field& x = gx[j];
        const Field& v = gt[j];
        const Field dtx = (gx[j + 1] - gx[j - 1]) / (2.0 * dt) + g.connection(v, x);
        // D_t of D_t gamma_x on the same wide stencil as D_t gamma_t; the
        // compact second difference picks up the odd/even mode of the
        // two-step curve update.
        const Field dtx_next = (gx[j + 2] - x) / (2.0 * dt) + geo[j + 1].connection(gt[j + 1], gx[j + 1]);
        const Field dtx_prev = (x - gx[j - 2]) / (2.0 * dt) + geo[j - 1].connection(gt[j - 1], gx[j - 1]);
        const Field dt2x = (dtx_next - dtx_prev) / (2.0 * dt) + g.connection(v, dtx);
        const Field dtv = (gt[j + 1] - gt[j - 1]) / (2.0 * dt) + g.connection(v, v);
        const Field dxx = cov_dx(x, x, g);
        Field dx2x = diff_xx(x);
        if (!g.flat) {
            const Field hh = g.connection(x, x);
            dx2x += diff_x(hh) + g.connection(x, diff_x(x) + hh);
        }

        CurveState sc = s;
        sc.xi_t = (traj[j + 1].xi - traj[j - 1].xi) / (2.0 * dt);
        const ScalarField mu = reconstruct_mu(sc, g);

        Field inner = dt2x - dx2x;
        for (int k = 0; k < N; ++k) inner.row(k) -= mu[k] * x.row(k);
        Field res = -dtv + cov_dx(inner, x, g);
        if (!g.flat) res += g.curvature_apply(x, dxx, x) - g.curvature_apply(x, dtx, v);

        rep.time.push_back(s.time);
        rep.residual.push_back(m0(res));
        rep.tangent_drift.push_back(m0(x - s.xi));
    }
    return rep;
}

struct CoupledPicardOptions {
    int max_iter = 30;
    double tol = 1e-10;
    int max_window_steps = 16;
    int patience = 3;
    EllipticOptions elliptic;
    PicardOptions wave;
};

struct CoupledTrajectory {
    FieldSeries gamma;
    FieldSeries xi;
    FieldSeries eta;
    FieldSeries theta;
};

struct CoupledPicardResult {
    CoupledTrajectory trajectory;
    std::vector<double> distances;
    std::vector<double> ratios;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// Theta on every level of a trajectory, with D_t xi from time differences.
inline FieldSeries theta_series(const FieldSeries& gamma, const FieldSeries& xi, const FieldSeries& eta,
                                const std::vector<GeometrySamples>& geo, double dt, const EllipticOptions& opt,
                                FieldSeries* flux = nullptr) {
    const FieldSeries xt = series_dt(xi, dt);
    FieldSeries th(xi.size());
    if (flux) flux->assign(xi.size(), Field());
    for (std::size_t j = 0; j < xi.size(); ++j) {
        CurveState s;
        s.gamma = gamma[j];
        s.xi = xi[j];
        s.xi_t = xt[j];
        s.eta = eta[j];
        const SourceTerms src = assemble_sources(s, geo[j]);
        FluxSolution sol = solve_flux_form(src.psi, src.phi, s.xi, geo[j], opt);
        th[j] = std::move(sol.u);
        if (flux) (*flux)[j] = std::move(sol.flux);
    }
    return th;
}

/// gamma_t = h(gamma) eta with eta known on every level (Heun).
inline FieldSeries integrate_curve(const ManifoldModel& m, const Field& gamma0, const FieldSeries& eta, double dt) {
    FieldSeries out(eta.size());
    out[0] = gamma0;
    for (std::size_t j = 0; j + 1 < eta.size(); ++j) {
        const Field v0 = sample_along(m, out[j]).to_chart(eta[j]);
        const Field pred = out[j] + dt * v0;
        const Field v1 = sample_along(m, pred).to_chart(eta[j + 1]);
        out[j + 1] = out[j] + 0.5 * dt * (v0 + v1);
    }
    return out;
}

/// eta_t = -Gamma(eta, eta) + D_x theta + R(xi, D_x xi) xi - R(xi, D_t xi) eta + D_x xi
/// with gamma, xi and theta known on every level (Heun).
inline FieldSeries integrate_eta(const Field& eta0, const FieldSeries& xi, const FieldSeries& theta,
                                 const std::vector<GeometrySamples>& geo, double dt) {
    const FieldSeries xt = series_dt(xi, dt);
    auto rate = [&](std::size_t j, const Field& eta) {
        const GeometrySamples& g = geo[j];
        const Field dxi = cov_dx(xi[j], xi[j], g);
        Field r = cov_dx(theta[j], xi[j], g) + dxi - g.connection(eta, eta);
        if (!g.flat) {
            const Field dti = xt[j] + g.connection(eta, xi[j]);
            r += g.curvature_apply(xi[j], dxi, xi[j]) - g.curvature_apply(xi[j], dti, eta);
        }
        return r;
    };
    FieldSeries out(xi.size());
    out[0] = eta0;
    for (std::size_t j = 0; j + 1 < xi.size(); ++j) {
        const Field r0 = rate(j, out[j]);
        const Field pred = out[j] + dt * r0;
        out[j + 1] = out[j] + 0.5 * dt * (r0 + rate(j + 1, pred));
    }
    return out;
}

inline std::vector<GeometrySamples> sample_series(const ManifoldModel& m, const FieldSeries& gamma) {
    std::vector<GeometrySamples> g;
    g.reserve(gamma.size());
    for (const auto& c : gamma) g.push_back(sample_along(m, c));
    return g;
}

}  // namespace detail

/// Fixed-point iteration of the map (gamma, xi, eta) -> (gamma~, xi~, eta~~)
/// over `steps` levels of size dt = dx, measured in
/// M01(gamma) + M1(xi) + M01(eta).
inline CoupledPicardResult picard_coupled(const ManifoldModel& m, const CurveState& s0, int steps,
                                          const CoupledPicardOptions& opt = {}) {
    if (steps < 2) throw UsageError("picard window needs at least 2 steps");
    if (steps > opt.max_window_steps)
        throw UsageError("picard window of " + std::to_string(steps) + " steps exceeds the limit of " +
                         std::to_string(opt.max_window_steps));
    const double dt = 1.0 / s0.n_points();
    const int L = steps + 1;

    CoupledTrajectory cur;
    {
        const GeometrySamples g0 = sample_along(m, s0.gamma);
        const Field v0 = g0.to_chart(s0.eta);
        for (int j = 0; j < L; ++j) {
            cur.gamma.push_back(s0.gamma + (j * dt) * v0);
            cur.xi.push_back(s0.xi + (j * dt) * s0.xi_t);
            cur.eta.push_back(s0.eta);
        }
    }

    CoupledPicardResult res;
    int bad = 0;
    PicardOptions wopt = opt.wave;
    wopt.max_window_steps = opt.max_window_steps;
    for (int it = 0; it < opt.max_iter; ++it) {
        const std::vector<GeometrySamples> geo = detail::sample_series(m, cur.gamma);
        const FieldSeries theta = detail::theta_series(cur.gamma, cur.xi, cur.eta, geo, dt, opt.elliptic);

        CoupledTrajectory nxt;
        nxt.gamma = detail::integrate_curve(m, s0.gamma, cur.eta, dt);
        WaveWindow win{cur.eta, theta, geo};
        nxt.xi = picard_wave_solve(s0.xi, s0.xi_t, win, wopt, &cur.xi).xi;
        const FieldSeries eta1 = detail::integrate_eta(s0.eta, cur.xi, theta, geo, dt);

        const std::vector<GeometrySamples> geo1 = detail::sample_series(m, nxt.gamma);
        nxt.theta = detail::theta_series(nxt.gamma, nxt.xi, eta1, geo1, dt, opt.elliptic);
        nxt.eta = detail::integrate_eta(s0.eta, nxt.xi, nxt.theta, geo1, dt);

        const double dist = M01(series_diff(nxt.gamma, cur.gamma), dt) + M1(series_diff(nxt.xi, cur.xi), dt) +
                            M01(series_diff(nxt.eta, cur.eta), dt);
        if (!std::isfinite(dist)) throw NumericalError("coupled picard iterate is not finite");
        res.distances.push_back(dist);
        if (res.distances.size() >= 2) {
            const double prev = res.distances[res.distances.size() - 2];
            const double ratio = prev > 0.0 ? dist / prev : 0.0;
            res.ratios.push_back(ratio);
            bad = ratio >= 1.0 ? bad + 1 : 0;
        }
        cur = std::move(nxt);
        res.iterations = it + 1;
        if (dist < opt.tol) {
            res.converged = true;
            break;
        }
        if (bad >= opt.patience)
            throw WindowTooLargeError("coupled picard iteration is not contracting; use a smaller window than " +
                                      std::to_string(steps) + " steps");
    }
    res.trajectory = std::move(cur);
    return res;
}

}  // namespace wire
