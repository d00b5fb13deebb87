#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "wire/config.hpp"
#include "wire/runner.hpp"

using namespace wire;

namespace {

std::vector<std::string> errors_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool mentions(const std::vector<std::string>& errs, const std::string& what) {
    for (const auto& e : errs)
        if (e.find(what) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Config, Defaults) {
    const RunConfig c = parse_config("{}");
    EXPECT_EQ(c.manifold.name, "euclidean");
    EXPECT_EQ(c.manifold.dim, 2);
    EXPECT_EQ(c.n_points, 64);
    EXPECT_DOUBLE_EQ(c.step(), 1.0 / 64);
    EXPECT_DOUBLE_EQ(c.horizon, 1.0);
    EXPECT_EQ(c.mode, "march");
    EXPECT_EQ(c.curve.name, "circle");
    EXPECT_EQ(c.velocity.name, "zero");
    EXPECT_DOUBLE_EQ(c.solver_tol, 1e-10);
    EXPECT_DOUBLE_EQ(c.b0, 1e-3);
}

TEST(Config, ExplicitStep) {
    const RunConfig c = parse_config(R"({"N": 32, "dt": 0.015625, "T": 0.5})");
    EXPECT_DOUBLE_EQ(c.step(), 1.0 / 64);
    EXPECT_DOUBLE_EQ(c.step(64), 1.0 / 128);
    EXPECT_DOUBLE_EQ(parse_config(R"({"dt": "characteristic"})").step(), 1.0 / 64);
}

TEST(Config, TooFewPoints) {
    const auto errs = errors_of(R"({"N": 4})");
    ASSERT_FALSE(errs.empty());
    EXPECT_TRUE(mentions(errs, "N >= 8 required"));
}

TEST(Config, HyperbolicCenterBelowAxis) {
    const auto errs = errors_of(
        R"({"manifold": {"name": "hyperbolic"}, "initial": {"curve": {"name": "hyperbolic-loop", "center": [0, -1]}}})");
    EXPECT_TRUE(mentions(errs, "initial.curve.center: outside the chart domain of hyperbolic (y > 0 required)"));
}

TEST(Config, UnknownKeysAreReportedWithPath) {
    const auto errs = errors_of(R"({"initial": {"curve": {"name": "circle", "radius": 2}}, "Nn": 3})");
    EXPECT_TRUE(mentions(errs, "initial.curve.radius"));
    EXPECT_TRUE(mentions(errs, "Nn"));
}

TEST(Config, AllErrorsAreCollected) {
    const auto errs = errors_of(R"({"N": 4, "T": -1, "mode": "sprint", "tolerances": {"b0": 2}})");
    EXPECT_GE(errs.size(), 4u);
    EXPECT_TRUE(mentions(errs, "mode"));
    EXPECT_TRUE(mentions(errs, "tolerances.b0"));
}

TEST(Config, StepAndHorizonRules) {
    EXPECT_TRUE(mentions(errors_of(R"({"N": 16, "dt": 0.1})"), "dt <= 1/N"));
    EXPECT_TRUE(mentions(errors_of(R"({"N": 16, "T": 0.03})"), "whole number"));
    EXPECT_TRUE(mentions(errors_of(R"({"N": 16, "mode": "picard", "dt": 0.03125})"), "characteristic"));
    EXPECT_TRUE(mentions(errors_of(R"({"picard": {"window_steps": 40}})"), "picard.window_steps"));
}

TEST(Config, CurveManifoldCombinations) {
    EXPECT_TRUE(mentions(errors_of(R"({"manifold": {"name": "sphere"}})"), "needs a flat manifold"));
    EXPECT_TRUE(mentions(errors_of(R"({"manifold": {"name": "conformal"}})"), "manifold.lambda"));
    EXPECT_TRUE(mentions(errors_of(R"({"manifold": {"name": "conformal", "lambda": "x +"}, "initial": {"curve": {"name": "loop", "center": [0, 0]}}})"),
                         "manifold.lambda"));
    EXPECT_TRUE(mentions(errors_of(R"({"initial": {"velocity": {"name": "translation", "v": [1]}}})"),
                         "initial.velocity.v"));
    EXPECT_TRUE(errors_of(R"({"manifold": {"name": "euclidean", "dim": 3},
                               "initial": {"velocity": {"name": "translation", "v": [1, 0, 0]}}})")
                    .empty());
}

TEST(Config, MalformedJson) {
    EXPECT_TRUE(mentions(errors_of("{\"N\": "), "not valid JSON"));
    EXPECT_TRUE(mentions(errors_of("[1, 2]"), "expected an object"));
}

TEST(Config, ShippedConfigsParseAndBuild) {
    for (const char* name : {"rest_circle", "perturbed_circle_study", "hyperbolic_loop", "sphere_loop",
                             "picard_windows", "torus_geodesic", "conformal_bump"}) {
        std::ifstream f(std::string(WIRE_CONFIG_DIR) + "/" + name + ".json");
        ASSERT_TRUE(f) << name;
        std::stringstream ss;
        ss << f.rdbuf();
        const RunConfig c = parse_config(ss.str());
        const ManifoldPtr m = make_manifold(c.manifold);
        const InitialData d = build_initial(c, *m, 16);
        EXPECT_EQ(d.a.rows(), 16) << name;
        EXPECT_LT((d.a_tilde.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-14) << name;
    }
}
