#pragma once

// The wave equation for the unit tangent field: the d'Alembert integral
// operator with its characteristic derivatives and Picard iteration, and a
// three-level covariant leapfrog stepper.

#include <cmath>
#include <string>
#include <vector>

#include "wire/errors.hpp"
#include "wire/fields.hpp"

namespace wire {

/// Data of u_tt - u_xx = f + h_x with u = a, u_t = b at t = 0. The series f
/// and h are sampled at t_j = j dt with dt = dx; an empty series means zero.
struct WaveData {
    Field a;
    Field b;
    FieldSeries f;
    FieldSeries h;
};

/// u_x + u_t and u_x - u_t per time level.
struct CharacteristicFields {
    FieldSeries u_plus;
    FieldSeries u_minus;
};

namespace detail {

/// Periodic prefix sums of the rows of a field, for trapezoid sums over
/// arbitrary index ranges.
class PeriodicSums {
public:
    explicit PeriodicSums(const Field& v) : v_(&v), n_(static_cast<int>(v.rows())) {
        prefix_ = Field::Zero(n_ + 1, v.cols());
        for (int k = 0; k < n_; ++k) prefix_.row(k + 1) = prefix_.row(k) + v.row(k);
    }

    /// Trapezoid integral over [lo dx, hi dx] for integers lo <= hi.
    Eigen::RowVectorXd trapezoid(int lo, int hi) const {
        if (hi == lo) return Eigen::RowVectorXd::Zero(v_->cols());
        Eigen::RowVectorXd s = cumulative(hi + 1) - cumulative(lo);
        s -= 0.5 * (v_->row(wrap(lo)) + v_->row(wrap(hi)));
        return s / static_cast<double>(n_);
    }

    Eigen::RowVectorXd at(int k) const { return v_->row(wrap(k)); }

private:
    int wrap(int k) const { return ((k % n_) + n_) % n_; }
    int floordiv(int k) const { return k >= 0 ? k / n_ : -((-k + n_ - 1) / n_); }
    Eigen::RowVectorXd cumulative(int i) const {
        const int q = floordiv(i);
        return static_cast<double>(q) * prefix_.row(n_) + prefix_.row(i - q * n_);
    }

    const Field* v_;
    int n_;
    Field prefix_;
};

inline int level_of(double t, double dt, const char* what) {
    const double m = t / dt;
    const double r = std::round(m);
    if (t < 0.0 || std::abs(m - r) > 1e-9 * std::max(1.0, std::abs(m)))
        throw UsageError(std::string(what) + ": time " + std::to_string(t) + " is not on the time grid");
    return static_cast<int>(r);
}

inline void check_series(const WaveData& d, int level) {
    if (!d.f.empty() && static_cast<int>(d.f.size()) <= level)
        throw UsageError("forcing series f is shorter than the requested time");
    if (!d.h.empty() && static_cast<int>(d.h.size()) <= level)
        throw UsageError("forcing series h is shorter than the requested time");
}

}  // namespace detail

/// I(a, b, f, h) at time t; t must be a multiple of dt = dx.
inline Field wave_integral(const WaveData& d, double t) {
    detail::same_shape(d.a, d.b, "wave_integral");
    const int N = static_cast<int>(d.a.rows()), n = static_cast<int>(d.a.cols());
    const double dt = 1.0 / N;
    const int m = detail::level_of(t, dt, "wave_integral");
    detail::check_series(d, m);

    const detail::PeriodicSums a(d.a), b(d.b);
    std::vector<detail::PeriodicSums> fs, hs;
    for (int j = 0; j <= m && !d.f.empty(); ++j) fs.emplace_back(d.f[j]);
    for (int j = 0; j <= m && !d.h.empty(); ++j) hs.emplace_back(d.h[j]);

    Field u(N, n);
    for (int k = 0; k < N; ++k) {
        Eigen::RowVectorXd val = 0.5 * (a.at(k + m) + a.at(k - m)) + 0.5 * b.trapezoid(k - m, k + m);
        if (m > 0 && !fs.empty()) {
            Eigen::RowVectorXd outer = Eigen::RowVectorXd::Zero(n);
            for (int j = 0; j <= m; ++j) {
                const int r = m - j;
                const double w = (j == 0 || j == m) ? 0.5 : 1.0;
                outer += w * fs[j].trapezoid(k - r, k + r);
            }
            val += 0.5 * dt * outer;
        }
        if (m > 0 && !hs.empty()) {
            Eigen::RowVectorXd outer = Eigen::RowVectorXd::Zero(n);
            for (int j = 0; j <= m; ++j) {
                const int r = m - j;
                const double w = (j == 0 || j == m) ? 0.5 : 1.0;
                outer += w * (hs[j].at(k + r) - hs[j].at(k - r));
            }
            val += 0.5 * dt * outer;
        }
        u.row(k) = val;
    }
    return u;
}

/// u_x +- u_t of I(a, b, f, h) at levels 0..last_level. Uses values and time
/// differences of h only; h is never differenced in x.
inline CharacteristicFields characteristic_derivatives(const WaveData& d, int last_level) {
    detail::same_shape(d.a, d.b, "characteristic_derivatives");
    detail::check_series(d, last_level);
    const int N = static_cast<int>(d.a.rows()), n = static_cast<int>(d.a.cols());
    const double dt = 1.0 / N;
    const Field da = diff_x(d.a);

    FieldSeries ht;
    if (!d.h.empty()) {
        if (d.h.size() >= 3) {
            FieldSeries hcut(d.h.begin(), d.h.begin() + std::max(last_level + 1, 3));
            ht = series_dt(hcut, dt);
        } else {
            throw UsageError("h series needs at least 3 time levels");
        }
    }

    CharacteristicFields out;
    for (int m = 0; m <= last_level; ++m) {
        Field up(N, n), um(N, n);
        for (int k = 0; k < N; ++k) {
            for (int sgn : {+1, -1}) {
                const int kk = ((k + sgn * m) % N + N) % N;
                Eigen::RowVectorXd val = da.row(kk) + sgn * d.b.row(kk);
                if (m > 0 && !d.f.empty()) {
                    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(n);
                    for (int j = 0; j <= m; ++j) {
                        const double w = (j == 0 || j == m) ? 0.5 : 1.0;
                        s += w * d.f[j].row(((k + sgn * (m - j)) % N + N) % N);
                    }
                    val += sgn * dt * s;
                }
                if (!d.h.empty()) {
                    val += d.h[0].row(kk) - d.h[m].row(k);
                    if (m > 0) {
                        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(n);
                        for (int j = 0; j <= m; ++j) {
                            const double w = (j == 0 || j == m) ? 0.5 : 1.0;
                            s += w * ht[j].row(((k + sgn * (m - j)) % N + N) % N);
                        }
                        val += dt * s;
                    }
                }
                (sgn > 0 ? up : um).row(k) = val;
            }
        }
        out.u_plus.push_back(std::move(up));
        out.u_minus.push_back(std::move(um));
    }
    return out;
}

/// Known fields over a window of time levels t_j = j dt, j = 0..steps.
struct WaveWindow {
    FieldSeries eta;
    FieldSeries theta;
    std::vector<GeometrySamples> geo;
    int steps() const { return static_cast<int>(theta.size()) - 1; }
};

struct PicardOptions {
    int max_iter = 50;
    double tol = 1e-12;
    int max_window_steps = 16;
    int patience = 3;
};

struct WavePicardResult {
    FieldSeries xi;
    std::vector<double> distances;
    std::vector<double> ratios;
    int iterations = 0;
    bool converged = false;
};

/// Forcing F and divergence term H of the tangent equation in local form,
/// evaluated on a trial series u.
inline void wave_sources(const FieldSeries& u, const WaveWindow& w, double dt, FieldSeries& f, FieldSeries& h) {
    const int L = static_cast<int>(u.size());
    const FieldSeries ut = series_dt(u, dt);
    FieldSeries conn_t(L);
    for (int j = 0; j < L; ++j) conn_t[j] = w.geo[j].connection(w.eta[j], u[j]);
    const FieldSeries dconn = series_dt(conn_t, dt);
    f.assign(L, Field());
    h.assign(L, Field());
    for (int j = 0; j < L; ++j) {
        const GeometrySamples& g = w.geo[j];
        const Field dxu = cov_dx(u[j], u[j], g);
        const Field dtu = ut[j] + conn_t[j];
        const ScalarField s = dx_norm2(u[j], g) - norm2(dtu);
        Field fj = perp(w.theta[j], u[j]);
        for (int k = 0; k < fj.rows(); ++k) fj.row(k) += s[k] * u[j].row(k);
        if (!g.flat) {
            fj += -dconn[j] - g.connection(w.eta[j], dtu) + g.connection(u[j], dxu);
            h[j] = g.connection(u[j], u[j]);
        } else {
            h[j] = Field::Zero(u[j].rows(), u[j].cols());
        }
        f[j] = std::move(fj);
    }
}

/// Iterates u <- I(a, b, F(u), H(u)) over the window until the M1 distance
/// between iterates falls below tol.
inline WavePicardResult picard_wave_solve(const Field& a, const Field& b, const WaveWindow& w,
                                          const PicardOptions& opt = {}, const FieldSeries* guess = nullptr) {
    const int W = w.steps();
    if (W < 2) throw UsageError("picard window needs at least 2 steps");
    if (W > opt.max_window_steps)
        throw UsageError("picard window of " + std::to_string(W) + " steps exceeds the limit of " +
                         std::to_string(opt.max_window_steps));
    if (static_cast<int>(w.eta.size()) != W + 1 || static_cast<int>(w.geo.size()) != W + 1)
        throw ShapeError("picard window series have different lengths");
    const double dt = 1.0 / a.rows();

    WavePicardResult res;
    FieldSeries u(W + 1);
    if (guess && static_cast<int>(guess->size()) == W + 1)
        u = *guess;
    else
        for (int j = 0; j <= W; ++j) u[j] = a + (j * dt) * b;

    int bad = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        WaveData d{a, b, {}, {}};
        wave_sources(u, w, dt, d.f, d.h);
        FieldSeries next(W + 1);
        for (int j = 0; j <= W; ++j) next[j] = wave_integral(d, j * dt);
        const double dist = M1(series_diff(next, u), dt);
        res.distances.push_back(dist);
        if (res.distances.size() >= 2) {
            const double prev = res.distances[res.distances.size() - 2];
            const double ratio = prev > 0.0 ? dist / prev : 0.0;
            res.ratios.push_back(ratio);
            bad = ratio >= 1.0 ? bad + 1 : 0;
        }
        u = std::move(next);
        res.iterations = it + 1;
        if (!std::isfinite(dist)) throw NumericalError("picard iterate is not finite");
        if (dist < opt.tol) {
            res.converged = true;
            break;
        }
        if (bad >= opt.patience)
            throw WindowTooLargeError("wave picard iteration is not contracting; use a smaller window than " +
                                      std::to_string(W) + " steps");
    }
    res.xi = std::move(u);
    return res;
}

enum class WaveTerms { full, free };

struct LeapfrogOptions {
    WaveTerms terms = WaveTerms::full;
    bool renormalize = false;
    int max_inner = 50;
    double inner_tol = 1e-15;
};

/// Time-level data the leapfrog stencil needs besides xi itself.
struct LeapfrogLevels {
    const GeometrySamples* geo = nullptr;       // at the current level
    const GeometrySamples* geo_next = nullptr;  // at the next level
    Field eta;                                  // current
    Field eta_next;
    Field conn_prev;  // Gamma(eta, xi) at the previous level
};

namespace detail {

inline void check_cfl(double dt, int n_points) {
    const double dx = 1.0 / n_points;
    if (!(dt > 0.0) || dt > dx * (1.0 + 1e-12))
        throw CflError("time step " + std::to_string(dt) + " exceeds the grid spacing " + std::to_string(dx));
}

/// D_x^2 xi + |D_x xi|^2 xi + theta^perp: the part of the tangent equation
/// without time derivatives.
inline Field spatial_force(const Field& xi, const Field& theta, const GeometrySamples& geo) {
    Field lap = diff_xx(xi);
    if (!geo.flat) {
        const Field hh = geo.connection(xi, xi);
        lap += diff_x(hh) + geo.connection(xi, diff_x(xi) + hh);
    }
    const ScalarField d2 = dx_norm2(xi, geo);
    Field out = lap + perp(theta, xi);
    for (int k = 0; k < out.rows(); ++k) out.row(k) += d2[k] * xi.row(k);
    return out;
}

inline Field finish(Field x, const LeapfrogOptions& opt) {
    if (opt.renormalize)
        for (int k = 0; k < x.rows(); ++k) x.row(k) /= x.row(k).norm();
    if (!x.allFinite()) throw NumericalError("leapfrog produced non-finite values");
    return x;
}

/// Shared implicit kernel. When start_velocity is given, the previous level is
/// the ghost next - 2 dt xi_t and the previous connection term is extrapolated.
inline Field leapfrog_kernel(const Field* xi_prev, const Field* start_velocity, const Field& xi_curr,
                             const Field& theta, const LeapfrogLevels& lv, double dt, const LeapfrogOptions& opt) {
    const GeometrySamples& geo = *lv.geo;
    const Field force = spatial_force(xi_curr, theta, geo);
    const Field conn = geo.connection(lv.eta, xi_curr);
    const bool flat = geo.flat && (lv.geo_next == nullptr || lv.geo_next->flat);
    const int N = static_cast<int>(xi_curr.rows());

    Field next = start_velocity ? Field(xi_curr + dt * *start_velocity) : Field(2.0 * xi_curr - *xi_prev);
    Field prev = start_velocity ? Field(next - 2.0 * dt * *start_velocity) : *xi_prev;
    for (int it = 0; it < opt.max_inner; ++it) {
        Field acc = force;
        const Field vel = (next - prev) / (2.0 * dt) + conn;
        for (int k = 0; k < N; ++k) {
            const double v2 = 0.5 * (((next.row(k) - xi_curr.row(k)) / dt + conn.row(k)).squaredNorm() +
                                     ((xi_curr.row(k) - prev.row(k)) / dt + conn.row(k)).squaredNorm());
            acc.row(k) -= v2 * xi_curr.row(k);
        }
        if (!flat) {
            const Field conn_next = lv.geo_next->connection(lv.eta_next, next);
            const Field conn_prev = start_velocity ? Field(2.0 * conn - conn_next) : lv.conn_prev;
            acc -= (conn_next - conn_prev) / (2.0 * dt) + geo.connection(lv.eta, vel);
        }
        Field cand = start_velocity ? Field(xi_curr + dt * *start_velocity + 0.5 * dt * dt * acc)
                                    : Field(2.0 * xi_curr - *xi_prev + dt * dt * acc);
        const double change = (cand - next).cwiseAbs().maxCoeff();
        next = std::move(cand);
        if (start_velocity) prev = next - 2.0 * dt * *start_velocity;
        if (change <= opt.inner_tol) break;
    }
    return next;
}

}  // namespace detail

/// One step of the three-level scheme for
/// D_t^2 xi - D_x^2 xi = (|D_x xi|^2 - |D_t xi|^2) xi + theta^perp.
/// D_t xi is centered in time, which makes the update implicit; the
/// velocity terms are resolved by pointwise fixed-point iteration.
inline Field leapfrog_step(const Field& xi_prev, const Field& xi_curr, const Field& theta, const LeapfrogLevels& lv,
                           double dt, const LeapfrogOptions& opt = {}) {
    detail::same_shape(xi_prev, xi_curr, "leapfrog_step");
    detail::check_cfl(dt, static_cast<int>(xi_curr.rows()));
    if (opt.terms == WaveTerms::free)
        return detail::finish(2.0 * xi_curr - xi_prev + dt * dt * diff_xx(xi_curr), opt);
    detail::same_shape(theta, xi_curr, "leapfrog_step");
    return detail::finish(detail::leapfrog_kernel(&xi_prev, nullptr, xi_curr, theta, lv, dt, opt), opt);
}

/// First step from xi and xi_t at t = 0, second order in dt.
inline Field leapfrog_start(const Field& xi0, const Field& xi_t0, const Field& theta, const LeapfrogLevels& lv,
                            double dt, const LeapfrogOptions& opt = {}) {
    detail::same_shape(xi0, xi_t0, "leapfrog_start");
    detail::check_cfl(dt, static_cast<int>(xi0.rows()));
    if (opt.terms == WaveTerms::free)
        return detail::finish(xi0 + dt * xi_t0 + 0.5 * dt * dt * diff_xx(xi0), opt);
    detail::same_shape(theta, xi0, "leapfrog_start");
    return detail::finish(detail::leapfrog_kernel(nullptr, &xi_t0, xi0, theta, lv, dt, opt), opt);
}

}  // namespace wire
