#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wire/elliptic.hpp"
#include "wire/initial.hpp"

using namespace wire;
using oracle::kPi;

namespace {

struct Circle {
    Field gamma, xi;
    GeometrySamples geo;
    explicit Circle(int N) {
        oracle::exact_circle(N, gamma, xi);
        geo = sample_geometry(*make_euclidean(2), gamma);
    }
};

}  // namespace

TEST(Elliptic, TangentDataGivesScaledTangent) {
    for (int N : {32, 64}) {
        const Circle c(N);
        const FluxSolution sol = solve_flux_form(Field::Zero(N, 2), c.xi, c.xi, c.geo);
        const double s = N * std::sin(2 * kPi / N);
        EXPECT_LT((sol.u - c.xi / (s * s)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((sol.u - c.xi / (4 * kPi * kPi)).cwiseAbs().maxCoeff(), 1e-4 * 64.0 * 64.0 / (N * N));
        EXPECT_LT(sol.residual, 1e-9);
    }
}

TEST(Elliptic, CurvatureFluxGivesMinusTangent) {
    const Circle c(48);
    const FluxSolution sol = solve_flux_form(cov_dx(c.xi, c.xi, c.geo), Field::Zero(48, 2), c.xi, c.geo);
    EXPECT_LT((sol.u + c.xi).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(sol.flux.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Elliptic, ZeroDataGivesZero) {
    const Circle c(32);
    const FluxSolution sol = solve_flux_form(Field::Zero(32, 2), Field::Zero(32, 2), c.xi, c.geo);
    EXPECT_EQ(sol.u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Elliptic, OperatorIsSymmetricAndPositive) {
    std::mt19937_64 rng(21);
    const ManifoldPtr h = make_hyperbolic();
    const Field gamma = hyperbolic_loop(*h, 40, (Vec(2) << 0.5, 1.5).finished());
    const GeometrySamples geo = sample_geometry(*h, gamma);
    const Field xi = oracle::random_unit_field(40, 2, rng);
    const SparseMatrix a = assemble_flux_operator(xi, geo);
    EXPECT_LT(Eigen::MatrixXd(a - SparseMatrix(a.transpose())).cwiseAbs().maxCoeff(), 1e-12);
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd v = flatten(oracle::random_field(40, 2, rng));
        EXPECT_GE(v.dot(a * v), -1e-12);
    }
    const Field u = oracle::random_field(40, 2, rng);
    EXPECT_LT((apply_flux_operator(u, xi, geo) - unflatten(a * flatten(u), 40, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Elliptic, SolutionIsLinearInData) {
    std::mt19937_64 rng(22);
    const Circle c(32);
    const FluxFormSolver solver(c.xi, c.geo);
    const Field f1 = oracle::random_field(32, 2, rng), h1 = oracle::random_field(32, 2, rng);
    const Field f2 = oracle::random_field(32, 2, rng), h2 = oracle::random_field(32, 2, rng);
    const Field u = solver.solve(2.0 * f1 - f2, 2.0 * h1 - h2).u;
    const Field v = 2.0 * solver.solve(f1, h1).u - solver.solve(f2, h2).u;
    EXPECT_LT((u - v).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Elliptic, MatchesDenseEliminationOnHyperbolicLoop) {
    std::mt19937_64 rng(23);
    const ManifoldPtr h = make_hyperbolic();
    const int N = 24;
    const Field gamma = hyperbolic_loop(*h, N, (Vec(2) << 0.0, 2.0).finished());
    const GeometrySamples geo = sample_geometry(*h, gamma);
    const Field xi = geo.to_frame(chart_diff_x(*h, gamma)).rowwise().normalized();
    const Field f = oracle::random_field(N, 2, rng), g = oracle::random_field(N, 2, rng);

    const auto d = oracle::dense_dx(*h, gamma, xi);
    const int M = 2 * N;
    std::vector<std::vector<double>> a(M, std::vector<double>(M, 0.0));
    std::vector<double> rhs(M, 0.0);
    for (int r = 0; r < M; ++r) {
        for (int c = 0; c < M; ++c)
            for (int k = 0; k < M; ++k) a[r][c] += d[k][r] * d[k][c];
        for (int c = 0; c < M; ++c) rhs[r] += d[r][c] * f(c / 2, c % 2);
        rhs[r] += g(r / 2, r % 2);
    }
    for (int k = 0; k < N; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) a[2 * k + i][2 * k + j] += (i == j ? 1.0 : 0.0) - xi(k, i) * xi(k, j);
    const Eigen::VectorXd ref = oracle::gauss_solve(a, rhs);

    EllipticOptions opt;
    opt.solver_tol = 1e-13;
    const FluxSolution sol = solve_flux_form(f, g, xi, geo, opt);
    EXPECT_LT((flatten(sol.u) - ref).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + ref.cwiseAbs().maxCoeff()));
}

TEST(Elliptic, GeodesicOnTorusIsRejected) {
    const int N = 32;
    const Field gamma = torus_geodesic(N, (Vec(2) << 0.0, 0.5).finished());
    const GeometrySamples geo = sample_geometry(*make_flat_torus(), gamma);
    Field xi = Field::Zero(N, 2);
    xi.col(0).setOnes();
    EXPECT_LT(bentness(xi, geo).b_value, 1e-12);
    try {
        FluxFormSolver solver(xi, geo);
        FAIL() << "expected a near-geodesic error";
    } catch (const NearGeodesicError& e) {
        EXPECT_LT(e.bentness, 1e-3);
    }
    EllipticOptions off;
    off.check_bentness = false;
    EXPECT_THROW(FluxFormSolver(xi, geo, off), NearGeodesicError);
}

TEST(Elliptic, BentnessOfCircleHasClosedForm) {
    for (int N : {32, 128}) {
        const Circle c(N);
        const double s = N * std::sin(2 * kPi / N);
        const BentnessReport rep = bentness(c.xi, c.geo);
        EXPECT_NEAR(rep.b_value, s / std::sqrt(1 + s * s), 1e-10);
        EXPECT_LT((rep.phi - c.xi / (1 + s * s)).cwiseAbs().maxCoeff(), 1e-10);
    }
    EXPECT_NEAR(bentness(Circle(128).xi, Circle(128).geo).b_value, 2 * kPi / std::sqrt(1 + 4 * kPi * kPi), 1e-4);
}

TEST(Elliptic, BentnessIsBoundedAndLipschitz) {
    std::mt19937_64 rng(24);
    const Circle c(40);
    for (int t = 0; t < 10; ++t) {
        const Field a = oracle::random_unit_field(40, 2, rng);
        const Field b = oracle::random_unit_field(40, 2, rng);
        const double ba = bentness(a, c.geo).b_value, bb = bentness(b, c.geo).b_value;
        EXPECT_LE(ba, 1.0 + 1e-12);
        EXPECT_GE(ba, 0.0);
        EXPECT_LE(std::abs(ba - bb), l2_norm(a - b) + 1e-12);
    }
    // Scaling xi scales B in flat space.
    const double b1 = bentness(c.xi, c.geo).b_value;
    EXPECT_NEAR(bentness(Field(0.5 * c.xi), c.geo).b_value, 0.5 * b1, 1e-12);
}
