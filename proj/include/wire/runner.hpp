#pragma once

// Runs a configuration: marching, windowed fixed-point solves, or a
// three-resolution convergence study, writing CSV diagnostics, JSON snapshots
// and run metadata.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wire/config.hpp"
#include "wire/diagnostics.hpp"
#include "wire/dynamics.hpp"
#include "wire/initial.hpp"

namespace wire {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitAbort = 3 };

/// Builds admissible initial data for the configured curve and velocity on N points.
inline InitialData build_initial(const RunConfig& c, const ManifoldModel& m, int n) {
    const CurveSpec& cs = c.curve;
    Field curve;
    if (cs.name == "circle" || cs.name == "perturbed-circle") {
        curve = flat_circle(n, m.dim(), cs.name == "circle" ? 0 : cs.mode, cs.eps);
        if (m.name() == "flat-torus") curve.rowwise() += Eigen::RowVector2d(0.5, 0.5);
    } else if (cs.name == "hyperbolic-loop") {
        curve = hyperbolic_loop(m, n, detail::to_vec(cs.center));
    } else if (cs.name == "sphere-loop") {
        curve = sphere_loop(m, n, detail::to_vec(cs.center));
    } else if (cs.name == "loop") {
        const Vec center = detail::to_vec(cs.center);
        if (!m.in_domain(center)) throw DomainError("loop center outside the chart domain of " + m.name());
        const double r = unit_length_radius(m, center, 1e-9 * cs.max_radius, cs.max_radius);
        curve = ArcLength(m, chart_circle(center, r)).sample(n);
    } else if (cs.name == "flat-torus-geodesic") {
        curve = torus_geodesic(n, detail::to_vec(cs.point));
    } else {
        throw UsageError("unknown curve " + cs.name);
    }

    const VelocitySpec& vs = c.velocity;
    Field vel = Field::Zero(n, m.dim());
    if (vs.name == "translation") vel = translation_velocity(curve, detail::to_vec(vs.v));
    if (vs.name == "rotation") vel = rotation_velocity(curve, vs.omega, detail::to_vec(vs.center));
    if (vs.name == "random") vel = random_velocity(n, m.dim(), vs.amplitude, c.seed);
    if (vs.name != "zero") vel = admissible_velocity(m, curve, vel);
    return prepare_initial(m, curve, vel);
}

inline StepOptions step_options(const RunConfig& c) {
    StepOptions o;
    o.elliptic.solver_tol = c.solver_tol;
    o.elliptic.b0 = c.b0;
    o.elliptic.check_bentness = c.bentness_every > 0;
    o.bentness_every = c.bentness_every;
    o.leapfrog.renormalize = c.renormalize;
    return o;
}

/// Theta for a level that has no successor yet.
inline void close_level(CurveState& s, const ManifoldModel& m, const EllipticOptions& opt) {
    const GeometrySamples g = sample_along(m, s.gamma);
    EllipticOptions o = opt;
    o.check_bentness = false;
    s.theta = solve_theta(s, assemble_sources(s, g), g, o).u;
}

/// Failure classification for the report.
inline std::string failure_kind(const std::exception& e) {
    if (dynamic_cast<const NearGeodesicError*>(&e)) return "near-geodesic";
    if (dynamic_cast<const ChartExitError*>(&e)) return "chart-exit";
    if (dynamic_cast<const CflError*>(&e)) return "cfl";
    if (dynamic_cast<const WindowTooLargeError*>(&e)) return "non-contraction";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
    return "error";
}

class ConstraintViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline nlohmann::json record_json(const DiagnosticsRecord& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"time", r.time},
            {"energy", r.energy},
            {"energy_dt", r.parts.dt_part},
            {"energy_eta", r.parts.eta_part},
            {"energy_dx", r.parts.dx_part},
            {"constraint_drift", r.constraint_drift},
            {"bentness", num(r.bentness)},
            {"mu_min", num(r.mu_min)},
            {"mu_max", num(r.mu_max)},
            {"gamma_xi_drift", r.gamma_xi_drift},
            {"transport_residual", num(r.transport_residual)}};
}

/// Writes the output bundle of one run. A default-constructed writer discards everything.
class OutputWriter {
public:
    OutputWriter() = default;
    explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(*dir_);
        csv_.open(*dir_ / "diagnostics.csv");
        if (!csv_) throw UsageError("cannot write to " + dir_->string());
        csv_ << "time,energy,energy_dt,energy_eta,energy_dx,constraint_drift,bentness,mu_min,mu_max,"
                "gamma_xi_drift,transport_residual\n";
    }

    bool enabled() const { return dir_.has_value(); }
    const std::filesystem::path& dir() const { return *dir_; }

    void row(const DiagnosticsRecord& r) {
        if (!enabled()) return;
        char buf[512];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%s,%s,%.17g,%s\n", r.time, r.energy,
                      r.parts.dt_part, r.parts.eta_part, r.parts.dx_part, r.constraint_drift, opt(r.bentness).c_str(),
                      opt(r.mu_min).c_str(), opt(r.mu_max).c_str(), r.gamma_xi_drift,
                      opt(r.transport_residual).c_str());
        csv_ << buf;
        csv_.flush();
    }

    void snapshot(const CurveState& s, int level) {
        if (!enabled()) return;
        auto flat = [](const Field& f) {
            std::vector<double> v;
            v.reserve(f.size());
            for (int k = 0; k < f.rows(); ++k)
                for (int i = 0; i < f.cols(); ++i) v.push_back(f(k, i));
            return v;
        };
        nlohmann::json j = {{"time", s.time},      {"level", level},         {"N", s.n_points()},
                            {"dim", s.dim()},      {"gamma", flat(s.gamma)}, {"xi", flat(s.xi)},
                            {"xi_t", flat(s.xi_t)}, {"eta", flat(s.eta)}};
        if (s.theta.size() > 0) j["theta"] = flat(s.theta);
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%06d.json", level);
        write_json(name, j);
    }

    void write_json(const std::string& name, const nlohmann::json& j) {
        if (!enabled()) return;
        std::ofstream f(*dir_ / name);
        f << j.dump(2) << "\n";
    }

    void write_text(const std::string& name, const std::string& text) {
        if (!enabled()) return;
        std::ofstream f(*dir_ / name);
        f << text;
    }

private:
    static std::string opt(double v) {
        if (!std::isfinite(v)) return "";
        char b[32];
        std::snprintf(b, sizeof b, "%.17g", v);
        return b;
    }

    std::optional<std::filesystem::path> dir_;
    std::ofstream csv_;
};

struct RunResult {
    int exit_code = kExitOk;
    std::string status = "ok";
    std::vector<DiagnosticsRecord> rows;
    std::optional<nlohmann::json> failure;
    CurveState final_state;
    double wall_seconds = 0.0;
};

namespace detail {

inline nlohmann::json failure_json(const std::string& kind, const std::string& message, double time,
                                   const std::vector<DiagnosticsRecord>& rows, double bentness_value) {
    nlohmann::json j = {{"kind", kind}, {"message", message}, {"time", time}};
    j["last_good_row"] = rows.empty() ? nlohmann::json(nullptr) : record_json(rows.back());
    if (std::isfinite(bentness_value)) j["bentness"] = bentness_value;
    return j;
}

inline void metadata(OutputWriter& out, const RunConfig& c, int n, const RunResult& r, long steps) {
    nlohmann::json j = {{"version", kVersion},
                        {"config", c.source},
                        {"N", n},
                        {"dt", c.step(n)},
                        {"steps", steps},
                        {"status", r.status},
                        {"wall_seconds", r.wall_seconds},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"compiler", __VERSION__}};
    out.write_json("metadata.json", j);
}

template <class Body>
void guarded(RunResult& res, OutputWriter& out, double& time, Body body) {
    try {
        body();
    } catch (const Error& e) {
        res.exit_code = kExitAbort;
        res.status = "aborted";
        const auto* ng = dynamic_cast<const NearGeodesicError*>(&e);
        const std::string kind = dynamic_cast<const ConstraintViolation*>(&e) ? "constraint" : failure_kind(e);
        res.failure = failure_json(kind, e.what(), time, res.rows,
                                   ng ? ng->bentness : std::numeric_limits<double>::quiet_NaN());
        out.write_json("failure.json", *res.failure);
    }
}

}  // namespace detail

/// Marches N points to the configured horizon.
inline RunResult run_march(const RunConfig& c, int n, OutputWriter& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const ManifoldPtr model = make_manifold(c.manifold);
    const double dt = c.step(n);
    const long steps = std::lround(c.horizon / dt);
    RunResult res;
    CurveState s = build_initial(c, *model, n).to_state();
    Stepper stepper(model, step_options(c));
    const bool aligned = std::abs(dt * n - 1.0) < 1e-12;
    double time = 0.0;

    detail::guarded(res, out, time, [&] {
        std::optional<CurveState> prev;
        auto record = [&](CurveState& lvl, long j) {
            const bool with_b = c.bentness_every > 0 && j % c.bentness_every == 0;
            DiagnosticsRecord r = diagnose(lvl, *model, with_b, stepper.options().elliptic);
            if (aligned && prev) r.transport_residual = *transport_check({*prev, lvl}, *model, dt);
            res.rows.push_back(r);
            out.row(r);
        };
        for (long j = 0; j <= steps; ++j) {
            time = s.time;
            CurveState next;
            if (j < steps)
                next = stepper.step(s, dt);
            else
                close_level(s, *model, stepper.options().elliptic);
            const double drift = constraint_drift(s.xi);
            if (j % c.diagnostics_every == 0 || j == steps) record(s, j);
            if ((c.snapshot_every > 0 && j % c.snapshot_every == 0) || j == 0 || j == steps) out.snapshot(s, static_cast<int>(j));
            if (drift > c.constraint_tol)
                throw ConstraintViolation("constraint drift " + std::to_string(drift) + " exceeds tolerance " +
                                          std::to_string(c.constraint_tol));
            if (j == steps) break;
            prev = s;
            s = std::move(next);
        }
        res.final_state = s;
    });
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::metadata(out, c, n, res, steps);
    return res;
}

/// Marches by consecutive fixed-point windows on the characteristic grid.
inline RunResult run_picard(const RunConfig& c, OutputWriter& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = c.n_points;
    const ManifoldPtr model = make_manifold(c.manifold);
    const double dt = 1.0 / n;
    const long steps = std::lround(c.horizon / dt);
    RunResult res;
    CurveState s = build_initial(c, *model, n).to_state();
    CoupledPicardOptions po;
    po.max_iter = c.picard_max_iter;
    po.tol = c.picard_tol;
    po.elliptic.solver_tol = c.solver_tol;
    po.elliptic.b0 = c.b0;
    po.elliptic.check_bentness = c.bentness_every > 0;
    double time = 0.0;
    std::ostringstream log;
    log << "window,start_time,iteration,distance,ratio\n";

    detail::guarded(res, out, time, [&] {
        long done = 0;
        int window = 0;
        std::optional<CurveState> prev;
        while (done < steps) {
            time = s.time;
            long w = std::min<long>(c.window_steps, steps - done);
            if (w < 2) w = 2;  // a last single step is covered by a two-step window
            const CoupledPicardResult pr = picard_coupled(*model, s, static_cast<int>(w), po);
            for (std::size_t i = 0; i < pr.distances.size(); ++i) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%d,%.17g,%zu,%.17g,%s\n", window, s.time, i + 1, pr.distances[i],
                              i == 0 ? "" : std::to_string(pr.ratios[i - 1]).c_str());
                log << buf;
            }
            const CoupledTrajectory& tr = pr.trajectory;
            const FieldSeries xt = series_dt(tr.xi, dt);
            const long last = std::min<long>(w, steps - done);
            const double t_start = s.time;
            for (long j = 0; j <= last; ++j) {
                CurveState lvl;
                lvl.time = t_start + j * dt;
                lvl.gamma = tr.gamma[j];
                lvl.xi = tr.xi[j];
                lvl.xi_t = xt[j];
                lvl.eta = tr.eta[j];
                lvl.theta = tr.theta[j];
                const long global = done + j;
                if (j == last && done + last < steps) {
                    s = lvl;  // first level of the next window, recorded there
                    break;
                }
                const bool with_b = c.bentness_every > 0 && global % c.bentness_every == 0;
                DiagnosticsRecord r = diagnose(lvl, *model, with_b, po.elliptic);
                if (prev) r.transport_residual = *transport_check({*prev, lvl}, *model, dt);
                if (global % c.diagnostics_every == 0 || global == steps) {
                    res.rows.push_back(r);
                    out.row(r);
                }
                if ((c.snapshot_every > 0 && global % c.snapshot_every == 0) || global == 0 || global == steps)
                    out.snapshot(lvl, static_cast<int>(global));
                if (r.constraint_drift > c.constraint_tol)
                    throw ConstraintViolation("constraint drift " + std::to_string(r.constraint_drift) +
                                              " exceeds tolerance " + std::to_string(c.constraint_tol));
                prev = lvl;
                s = lvl;
            }
            done += last;
            ++window;
        }
        res.final_state = s;
    });
    out.write_text("picard.csv", log.str());
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::metadata(out, c, n, res, steps);
    return res;
}

struct StudyMember {
    int n_points = 0;
    RunResult run;
    double energy_drift = 0.0;      // max |E - E0| / E0
    double constraint_drift = 0.0;  // max over rows
    double displacement = 0.0;      // max chart distance of gamma from its initial position
};

struct StudyResult {
    std::vector<StudyMember> members;
    /// Observed orders between consecutive resolutions; NaN when both errors sit at roundoff.
    std::vector<double> energy_order, constraint_order, displacement_order, self_order;
    std::vector<double> self_error;  // max |gamma_N(T) - gamma_2N(T)| on the coarse points
    int exit_code = kExitOk;
};

/// Floor below which an error is treated as roundoff and no order is estimated.
inline constexpr double kRoundoffFloor = 1e-10;

inline double observed_order(double coarse, double fine) {
    if (coarse < kRoundoffFloor && fine < kRoundoffFloor) return std::numeric_limits<double>::quiet_NaN();
    return std::log2(coarse / fine);
}

/// Marches N, 2N, 4N, ... in parallel and estimates observed orders.
inline StudyResult run_study(const RunConfig& c, const std::optional<std::filesystem::path>& dir) {
    StudyResult st;
    std::vector<std::future<StudyMember>> jobs;
    for (int i = 0; i < c.study_levels; ++i) {
        const int n = c.n_points << i;
        jobs.push_back(std::async(std::launch::async, [&c, n, dir] {
            RunConfig ci = c;
            ci.n_points = n;
            if (c.dt) ci.dt = *c.dt / (n / c.n_points);
            OutputWriter w = dir ? OutputWriter(*dir / ("N" + std::to_string(n))) : OutputWriter();
            StudyMember m;
            m.n_points = n;
            m.run = run_march(ci, n, w);
            const double e0 = m.run.rows.empty() ? 1.0 : m.run.rows.front().energy;
            for (const auto& r : m.run.rows) {
                m.energy_drift = std::max(m.energy_drift, std::abs(r.energy - e0) / std::abs(e0));
                m.constraint_drift = std::max(m.constraint_drift, r.constraint_drift);
            }
            return m;
        }));
    }
    for (auto& j : jobs) st.members.push_back(j.get());

    for (const auto& m : st.members)
        if (m.run.exit_code != kExitOk) st.exit_code = m.run.exit_code;
    if (st.exit_code != kExitOk) return st;

    const ManifoldPtr model = make_manifold(c.manifold);
    for (auto& m : st.members) {
        const Field g0 = build_initial(c, *model, m.n_points).a;
        const Field& g = m.run.final_state.gamma;
        for (int k = 0; k < g.rows(); ++k)
            m.displacement = std::max(m.displacement,
                                      model->chart_difference(g.row(k).transpose(), g0.row(k).transpose()).norm());
    }
    for (std::size_t i = 0; i + 1 < st.members.size(); ++i) {
        const StudyMember& a = st.members[i];
        const StudyMember& b = st.members[i + 1];
        st.energy_order.push_back(observed_order(a.energy_drift, b.energy_drift));
        st.constraint_order.push_back(observed_order(a.constraint_drift, b.constraint_drift));
        st.displacement_order.push_back(observed_order(a.displacement, b.displacement));
        double e = 0.0;
        for (int k = 0; k < a.n_points; ++k)
            e = std::max(e, model
                                ->chart_difference(a.run.final_state.gamma.row(k).transpose(),
                                                   b.run.final_state.gamma.row(2 * k).transpose())
                                .norm());
        st.self_error.push_back(e);
    }
    for (std::size_t i = 0; i + 1 < st.self_error.size(); ++i)
        st.self_order.push_back(observed_order(st.self_error[i], st.self_error[i + 1]));
    return st;
}

inline std::string format_order(double p) {
    if (std::isnan(p)) return "roundoff";
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", p);
    return b;
}

inline std::string study_report(const StudyResult& st) {
    std::ostringstream os;
    os << "N,energy_drift,constraint_drift,displacement,wall_seconds\n";
    for (const auto& m : st.members) {
        char b[256];
        std::snprintf(b, sizeof b, "%d,%.6e,%.6e,%.6e,%.3f\n", m.n_points, m.energy_drift, m.constraint_drift,
                      m.displacement, m.run.wall_seconds);
        os << b;
    }
    return os.str();
}

inline nlohmann::json study_json(const StudyResult& st) {
    auto orders = [](const std::vector<double>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (double p : v) a.push_back(std::isnan(p) ? nlohmann::json("roundoff") : nlohmann::json(p));
        return a;
    };
    nlohmann::json j;
    j["N"] = nlohmann::json::array();
    for (const auto& m : st.members) j["N"].push_back(m.n_points);
    j["energy_order"] = orders(st.energy_order);
    j["constraint_order"] = orders(st.constraint_order);
    j["displacement_order"] = orders(st.displacement_order);
    j["self_convergence_error"] = st.self_error;
    j["self_convergence_order"] = orders(st.self_order);
    return j;
}

/// Runs the configured mode; returns the process exit code.
inline int run(const RunConfig& c, const std::optional<std::string>& out_override, bool quiet) {
    const std::filesystem::path dir = out_override ? *out_override : c.out_dir;
    auto say = [&](const std::string& s) {
        if (!quiet) std::cout << s << "\n";
    };
    try {
        if (c.mode == "convergence-study") {
            std::filesystem::create_directories(dir);
            const StudyResult st = run_study(c, dir);
            const std::string table = study_report(st);
            {
                std::ofstream f(dir / "study.csv");
                f << table;
            }
            if (st.exit_code != kExitOk) {
                say("convergence study aborted; see the member failure.json files under " + dir.string());
                return st.exit_code;
            }
            {
                std::ofstream f(dir / "study.json");
                f << study_json(st).dump(2) << "\n";
            }
            say(table);
            for (std::size_t i = 0; i < st.energy_order.size(); ++i)
                say("order N" + std::to_string(st.members[i].n_points) + "->" +
                    std::to_string(st.members[i + 1].n_points) + ": energy drift " + format_order(st.energy_order[i]) +
                    ", constraint drift " + format_order(st.constraint_order[i]));
            for (std::size_t i = 0; i < st.self_order.size(); ++i)
                say("self-convergence order of gamma: " + format_order(st.self_order[i]));
            return kExitOk;
        }
        OutputWriter out(dir);
        const RunResult r = c.mode == "picard" ? run_picard(c, out) : run_march(c, c.n_points, out);
        if (r.failure) {
            std::cerr << "aborted (" << (*r.failure)["kind"].get<std::string>()
                      << "): " << (*r.failure)["message"].get<std::string>() << "\n";
            return r.exit_code;
        }
        if (!r.rows.empty()) {
            char b[256];
            std::snprintf(b, sizeof b, "done: t = %.6g, energy %.10g -> %.10g, constraint drift %.3e, %.2f s",
                          r.rows.back().time, r.rows.front().energy, r.rows.back().energy,
                          r.rows.back().constraint_drift, r.wall_seconds);
            say(b);
        }
        return kExitOk;
    } catch (const Error& e) {
        // Errors before the first step come from the initial data.
        std::cerr << "invalid setup: " << e.what() << "\n";
        return kExitValidation;
    }
}

}  // namespace wire
