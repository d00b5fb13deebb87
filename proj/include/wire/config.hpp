#pragma once

// Run configuration read from JSON. Every problem found is reported with the
// path of the offending key; parsing never stops at the first one.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wire/errors.hpp"
#include "wire/geometry.hpp"

namespace wire {

struct ManifoldSpec {
    std::string name = "euclidean";
    int dim = 2;
    std::string lambda;  // conformal only
};

struct CurveSpec {
    std::string name = "circle";
    int mode = 2;
    double eps = 0.0;
    std::vector<double> center;  // loops
    std::vector<double> point;   // torus geodesic
    double max_radius = 1.0;     // generic loop
};

struct VelocitySpec {
    std::string name = "zero";
    std::vector<double> v;
    double omega = 0.0;
    std::vector<double> center;
    double amplitude = 0.0;
};

struct RunConfig {
    ManifoldSpec manifold;
    int n_points = 64;
    std::optional<double> dt;  // empty means dt = 1/N
    double horizon = 1.0;
    std::string mode = "march";
    CurveSpec curve;
    VelocitySpec velocity;
    double solver_tol = 1e-10;
    double constraint_tol = 1e-2;
    double b0 = 1e-3;
    std::string out_dir = "wire_out";
    int snapshot_every = 0;  // 0: initial and final level only
    int diagnostics_every = 1;
    int bentness_every = 10;
    bool renormalize = false;
    std::uint64_t seed = 0;
    int window_steps = 8;
    int picard_max_iter = 30;
    double picard_tol = 1e-10;
    int study_levels = 3;
    nlohmann::json source;  // the configuration as given

    double step(int n_points_override = 0) const {
        const int n = n_points_override > 0 ? n_points_override : n_points;
        // An explicit step keeps its ratio to the grid spacing under refinement.
        return dt ? *dt * n_points / n : 1.0 / n;
    }
};

/// All validation errors of a configuration.
class ConfigError : public UsageError {
public:
    explicit ConfigError(std::vector<std::string> errors) : UsageError(join(errors)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& e) {
        std::string s = "invalid configuration:";
        for (const auto& x : e) s += "\n  " + x;
        return s;
    }
    std::vector<std::string> errors_;
};

namespace detail {

using nlohmann::json;

class ConfigReader {
public:
    std::vector<std::string> errors;

    void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!ok.count(it.key())) error(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }

    const json* object(const json& parent, const std::string& key, const std::string& path) {
        if (!parent.contains(key)) return nullptr;
        const json& v = parent.at(key);
        if (!v.is_object()) {
            error(path, "expected an object");
            return nullptr;
        }
        return &v;
    }

    void number(const json& obj, const std::string& key, const std::string& path, double& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number()) return error(path, "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) error(path, "must be finite");
    }

    void integer(const json& obj, const std::string& key, const std::string& path, int& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) return error(path, "expected an integer");
        out = v.get<int>();
    }

    void text(const json& obj, const std::string& key, const std::string& path, std::string& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_string()) return error(path, "expected a string");
        out = v.get<std::string>();
    }

    void boolean(const json& obj, const std::string& key, const std::string& path, bool& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_boolean()) return error(path, "expected true or false");
        out = v.get<bool>();
    }

    void vector(const json& obj, const std::string& key, const std::string& path, std::vector<double>& out) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_array()) return error(path, "expected an array of numbers");
        out.clear();
        for (const auto& x : v) {
            if (!x.is_number()) return error(path, "expected an array of numbers");
            out.push_back(x.get<double>());
        }
    }
};

inline Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
    return out;
}

}  // namespace detail

/// Builds the manifold model named by the configuration.
inline ManifoldPtr make_manifold(const ManifoldSpec& s) {
    if (s.name == "euclidean") return make_euclidean(s.dim);
    if (s.name == "hyperbolic") return make_hyperbolic();
    if (s.name == "sphere") return make_sphere();
    if (s.name == "flat-torus") return make_flat_torus();
    if (s.name == "conformal") return make_conformal(s.lambda);
    throw UsageError("unknown manifold " + s.name);
}

/// Parses and validates a configuration; throws ConfigError listing every problem.
inline RunConfig parse_config(const std::string& text) {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("(root): not valid JSON: ") + e.what()});
    }
    if (!root.is_object()) throw ConfigError({"(root): expected an object"});

    detail::ConfigReader r;
    RunConfig c;
    c.source = root;
    r.allow(root, "",
            {"manifold", "N", "dt", "T", "mode", "initial", "tolerances", "output", "cadence", "renormalize", "seed",
             "picard", "study"});

    if (const json* m = r.object(root, "manifold", "manifold")) {
        r.allow(*m, "manifold", {"name", "dim", "lambda"});
        r.text(*m, "name", "manifold.name", c.manifold.name);
        r.integer(*m, "dim", "manifold.dim", c.manifold.dim);
        r.text(*m, "lambda", "manifold.lambda", c.manifold.lambda);
    }
    const std::set<std::string> manifolds = {"euclidean", "hyperbolic", "sphere", "conformal", "flat-torus"};
    if (!manifolds.count(c.manifold.name)) r.error("manifold.name", "unknown manifold \"" + c.manifold.name + "\"");
    if (c.manifold.name == "euclidean" && (c.manifold.dim < 2 || c.manifold.dim > kMaxDim))
        r.error("manifold.dim", "must be 2.." + std::to_string(kMaxDim));
    if (c.manifold.name != "euclidean") c.manifold.dim = 2;
    if (c.manifold.name == "conformal") {
        if (c.manifold.lambda.empty()) {
            r.error("manifold.lambda", "required for a conformal manifold");
        } else {
            try {
                Expression probe(c.manifold.lambda);
            } catch (const Error& e) {
                r.error("manifold.lambda", e.what());
            }
        }
    }

    r.integer(root, "N", "N", c.n_points);
    if (c.n_points < 8) r.error("N", "N >= 8 required, got " + std::to_string(c.n_points));

    if (root.contains("dt")) {
        const json& v = root.at("dt");
        if (v.is_string()) {
            if (v.get<std::string>() != "characteristic") r.error("dt", "expected \"characteristic\" or a number");
        } else if (v.is_number()) {
            c.dt = v.get<double>();
            if (!(*c.dt > 0.0)) r.error("dt", "must be positive");
        } else {
            r.error("dt", "expected \"characteristic\" or a number");
        }
    }
    r.number(root, "T", "T", c.horizon);
    if (!(c.horizon > 0.0)) r.error("T", "horizon must be positive");

    r.text(root, "mode", "mode", c.mode);
    if (c.mode != "march" && c.mode != "picard" && c.mode != "convergence-study")
        r.error("mode", "expected march, picard or convergence-study");

    if (c.dt && c.n_points >= 8) {
        if (c.mode != "picard" && *c.dt > 1.0 / c.n_points * (1.0 + 1e-12))
            r.error("dt", "dt <= 1/N required when marching (1/N = " + std::to_string(1.0 / c.n_points) + ")");
        if (c.mode == "picard" && std::abs(*c.dt * c.n_points - 1.0) > 1e-12)
            r.error("dt", "picard mode runs on the characteristic grid; use dt = \"characteristic\"");
    }
    if (c.horizon > 0.0 && c.n_points >= 8 && c.mode != "convergence-study") {
        const double dt = c.step();
        if (dt > 0.0) {
            const double steps = c.horizon / dt;
            if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
                r.error("T", "horizon must be a whole number of time steps");
        }
    }

    if (const json* ini = r.object(root, "initial", "initial")) {
        r.allow(*ini, "initial", {"curve", "velocity"});
        if (const json* cv = r.object(*ini, "curve", "initial.curve")) {
            r.allow(*cv, "initial.curve", {"name", "m", "eps", "center", "point", "max_radius"});
            r.text(*cv, "name", "initial.curve.name", c.curve.name);
            r.integer(*cv, "m", "initial.curve.m", c.curve.mode);
            r.number(*cv, "eps", "initial.curve.eps", c.curve.eps);
            r.vector(*cv, "center", "initial.curve.center", c.curve.center);
            r.vector(*cv, "point", "initial.curve.point", c.curve.point);
            r.number(*cv, "max_radius", "initial.curve.max_radius", c.curve.max_radius);
        }
        if (const json* vv = r.object(*ini, "velocity", "initial.velocity")) {
            r.allow(*vv, "initial.velocity", {"name", "v", "omega", "center", "amplitude"});
            r.text(*vv, "name", "initial.velocity.name", c.velocity.name);
            r.vector(*vv, "v", "initial.velocity.v", c.velocity.v);
            r.number(*vv, "omega", "initial.velocity.omega", c.velocity.omega);
            r.vector(*vv, "center", "initial.velocity.center", c.velocity.center);
            r.number(*vv, "amplitude", "initial.velocity.amplitude", c.velocity.amplitude);
        }
    }
    const std::string& cn = c.curve.name;
    const std::string& mn = c.manifold.name;
    const bool flat = mn == "euclidean" || mn == "flat-torus";
    if (cn == "circle" || cn == "perturbed-circle") {
        if (!flat) r.error("initial.curve.name", cn + " needs a flat manifold; use a loop on " + mn);
        if (cn == "circle") c.curve.eps = 0.0;
        if (c.curve.mode < 0) r.error("initial.curve.m", "mode must be non-negative");
        if (!(std::abs(c.curve.eps) < 1.0)) r.error("initial.curve.eps", "amplitude must satisfy |eps| < 1");
    } else if (cn == "hyperbolic-loop") {
        if (mn != "hyperbolic") r.error("initial.curve.name", "hyperbolic-loop needs the hyperbolic manifold");
        if (c.curve.center.size() != 2)
            r.error("initial.curve.center", "expected 2 coordinates");
        else if (!(c.curve.center[1] > 0.0))
            r.error("initial.curve.center", "outside the chart domain of hyperbolic (y > 0 required)");
    } else if (cn == "sphere-loop") {
        if (mn != "sphere") r.error("initial.curve.name", "sphere-loop needs the sphere manifold");
        if (c.curve.center.empty()) c.curve.center = {0.0, 0.0};
        if (c.curve.center.size() != 2) r.error("initial.curve.center", "expected 2 coordinates");
    } else if (cn == "loop") {
        if (c.manifold.dim != 2) r.error("initial.curve.name", "loop needs a 2-dimensional manifold");
        if (c.curve.center.size() != 2) r.error("initial.curve.center", "expected 2 coordinates");
        if (!(c.curve.max_radius > 0.0)) r.error("initial.curve.max_radius", "must be positive");
    } else if (cn == "flat-torus-geodesic") {
        if (mn != "flat-torus") r.error("initial.curve.name", "flat-torus-geodesic needs the flat-torus manifold");
        if (c.curve.point.empty()) c.curve.point = {0.0, 0.5};
        if (c.curve.point.size() != 2) r.error("initial.curve.point", "expected 2 coordinates");
    } else {
        r.error("initial.curve.name", "unknown curve \"" + cn + "\"");
    }

    const std::string& vn = c.velocity.name;
    const auto dim = static_cast<std::size_t>(c.manifold.dim);
    if (vn == "translation") {
        if (c.velocity.v.size() != dim) r.error("initial.velocity.v", "expected " + std::to_string(dim) + " components");
    } else if (vn == "rotation") {
        if (c.velocity.center.empty()) c.velocity.center.assign(dim, 0.0);
        if (c.velocity.center.size() != dim)
            r.error("initial.velocity.center", "expected " + std::to_string(dim) + " components");
    } else if (vn == "random") {
        if (!(c.velocity.amplitude >= 0.0)) r.error("initial.velocity.amplitude", "must be non-negative");
    } else if (vn != "zero") {
        r.error("initial.velocity.name", "unknown velocity \"" + vn + "\"");
    }

    if (const json* t = r.object(root, "tolerances", "tolerances")) {
        r.allow(*t, "tolerances", {"solver", "constraint", "b0"});
        r.number(*t, "solver", "tolerances.solver", c.solver_tol);
        r.number(*t, "constraint", "tolerances.constraint", c.constraint_tol);
        r.number(*t, "b0", "tolerances.b0", c.b0);
    }
    if (!(c.solver_tol > 0.0)) r.error("tolerances.solver", "must be positive");
    if (!(c.constraint_tol > 0.0)) r.error("tolerances.constraint", "must be positive");
    if (!(c.b0 >= 0.0 && c.b0 < 1.0)) r.error("tolerances.b0", "must lie in [0, 1)");

    if (const json* o = r.object(root, "output", "output")) {
        r.allow(*o, "output", {"dir", "snapshot_every"});
        r.text(*o, "dir", "output.dir", c.out_dir);
        r.integer(*o, "snapshot_every", "output.snapshot_every", c.snapshot_every);
    }
    if (c.snapshot_every < 0) r.error("output.snapshot_every", "must be non-negative");

    if (const json* cd = r.object(root, "cadence", "cadence")) {
        r.allow(*cd, "cadence", {"diagnostics", "bentness"});
        r.integer(*cd, "diagnostics", "cadence.diagnostics", c.diagnostics_every);
        r.integer(*cd, "bentness", "cadence.bentness", c.bentness_every);
    }
    if (c.diagnostics_every < 1) r.error("cadence.diagnostics", "must be at least 1");
    if (c.bentness_every < 0) r.error("cadence.bentness", "must be non-negative");

    r.boolean(root, "renormalize", "renormalize", c.renormalize);
    if (root.contains("seed")) {
        const json& v = root.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            r.error("seed", "expected a non-negative integer");
        else
            c.seed = v.get<std::uint64_t>();
    }

    if (const json* p = r.object(root, "picard", "picard")) {
        r.allow(*p, "picard", {"window_steps", "max_iter", "tol"});
        r.integer(*p, "window_steps", "picard.window_steps", c.window_steps);
        r.integer(*p, "max_iter", "picard.max_iter", c.picard_max_iter);
        r.number(*p, "tol", "picard.tol", c.picard_tol);
    }
    if (c.window_steps < 2 || c.window_steps > 16) r.error("picard.window_steps", "must be 2..16");
    if (c.picard_max_iter < 1) r.error("picard.max_iter", "must be at least 1");
    if (!(c.picard_tol > 0.0)) r.error("picard.tol", "must be positive");

    if (const json* s = r.object(root, "study", "study")) {
        r.allow(*s, "study", {"levels"});
        r.integer(*s, "levels", "study.levels", c.study_levels);
    }
    if (c.study_levels < 3 || c.study_levels > 5) r.error("study.levels", "must be 3..5");

    if (!r.errors.empty()) throw ConfigError(r.errors);
    return c;
}

}  // namespace wire
