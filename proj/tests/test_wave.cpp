#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wire/wave.hpp"

using namespace wire;
using oracle::kPi;

namespace {

Field profile(int N, double (*fn)(double)) {
    Field f(N, 1);
    for (int k = 0; k < N; ++k) f(k, 0) = fn(static_cast<double>(k) / N);
    return f;
}

double s1(double x) { return std::sin(2 * kPi * x); }
double c1(double x) { return std::cos(2 * kPi * x); }
double bump(double x) { return std::exp(std::cos(2 * kPi * x)); }

}  // namespace

TEST(Wave, ConstantForcingGivesHalfTimeSquared) {
    const int N = 32;
    WaveData d{Field::Zero(N, 2), Field::Zero(N, 2), FieldSeries(20, Field::Ones(N, 2)), {}};
    for (int m : {0, 1, 5, 19}) {
        const double t = static_cast<double>(m) / N;
        EXPECT_LT((wave_integral(d, t).array() - 0.5 * t * t).abs().maxCoeff(), 1e-14);
    }
}

TEST(Wave, SpatiallyConstantDivergenceTermVanishes) {
    const int N = 16;
    FieldSeries h;
    for (int j = 0; j < 10; ++j) h.push_back(Field::Constant(N, 2, 1.0 + j * j));
    WaveData d{Field::Zero(N, 2), Field::Zero(N, 2), {}, h};
    EXPECT_EQ(wave_integral(d, 9.0 / N).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Wave, FreeSolutionIsTranslationOfData) {
    const int N = 64;
    const Field a = profile(N, bump);
    WaveData d{a, Field::Zero(N, 1), {}, {}};
    const int m = 11;
    const Field u = wave_integral(d, static_cast<double>(m) / N);
    for (int k = 0; k < N; ++k)
        EXPECT_NEAR(u(k, 0), 0.5 * (a((k + m) % N, 0) + a((k - m + N) % N, 0)), 1e-15);
}

TEST(Wave, VelocityDataIntegratesToSecondOrder) {
    // u = sin(2 pi x) sin(2 pi t) / (2 pi) for b = sin(2 pi x).
    double prev = 0.0;
    for (int N : {32, 64, 128}) {
        WaveData d{Field::Zero(N, 1), profile(N, s1), {}, {}};
        const double t = 0.25;
        const Field u = wave_integral(d, t);
        double err = 0.0;
        for (int k = 0; k < N; ++k) err = std::max(err, std::abs(u(k, 0) - s1(static_cast<double>(k) / N) * std::sin(2 * kPi * t) / (2 * kPi)));
        if (prev > 0.0) {
            EXPECT_NEAR(oracle::order(prev, err), 2.0, 0.1);
        }
        prev = err;
    }
}

TEST(Wave, OffGridTimesAndShortSeriesAreRejected) {
    const int N = 16;
    WaveData d{Field::Zero(N, 1), Field::Zero(N, 1), FieldSeries(3, Field::Zero(N, 1)), {}};
    EXPECT_THROW(wave_integral(d, 0.5 / N), UsageError);
    EXPECT_THROW(wave_integral(d, -1.0 / N), UsageError);
    EXPECT_THROW(wave_integral(d, 5.0 / N), UsageError);
    EXPECT_NO_THROW(wave_integral(d, 2.0 / N));
}

TEST(Wave, CharacteristicDerivativesNeverDifferenceH) {
    // With h fixed in time, u_x +- u_t = h(x +- t) - h(x) exactly, even for rough h.
    std::mt19937_64 rng(31);
    const int N = 32;
    const Field h = oracle::random_field(N, 2, rng);
    WaveData d{Field::Zero(N, 2), Field::Zero(N, 2), {}, FieldSeries(8, h)};
    const CharacteristicFields cf = characteristic_derivatives(d, 7);
    for (int m = 0; m <= 7; ++m)
        for (int k = 0; k < N; ++k) {
            EXPECT_LT((cf.u_plus[m].row(k) - (h.row((k + m) % N) - h.row(k))).norm(), 1e-13);
            EXPECT_LT((cf.u_minus[m].row(k) - (h.row((k - m + N) % N) - h.row(k))).norm(), 1e-13);
        }
}

TEST(Wave, CharacteristicDerivativesOfLinearInTimeH) {
    // h = t c(x): the x-derivative of the time integral cancels against
    // the value terms, leaving u_x +- u_t = t c(x +- t) - t c(x) + integral of c.
    const int N = 64, M = 12;
    const Field c = profile(N, bump);
    FieldSeries hs;
    for (int j = 0; j <= M; ++j) hs.push_back((static_cast<double>(j) / N) * c);
    WaveData d{Field::Zero(N, 1), Field::Zero(N, 1), {}, hs};
    const CharacteristicFields cf = characteristic_derivatives(d, M);
    const double dt = 1.0 / N, t = M * dt;
    for (int k = 0; k < N; ++k) {
        double integral = 0.0;  // trapezoid of c along x + s, s in [0, t]
        for (int j = 0; j <= M; ++j) integral += ((j == 0 || j == M) ? 0.5 : 1.0) * c((k + j) % N, 0) * dt;
        const double expect = -t * c(k, 0) + integral;
        EXPECT_NEAR(cf.u_plus[M](k, 0), expect, 1e-12);
    }
}

TEST(Wave, CharacteristicDerivativesMatchDifferencedIntegral) {
    double prev = 0.0;
    for (int N : {64, 128, 256}) {
        const int M = N / 4;
        FieldSeries f, h;
        for (int j = 0; j <= M + 1; ++j) {
            const double t = static_cast<double>(j) / N;
            Field fj(N, 1), hj(N, 1);
            for (int k = 0; k < N; ++k) {
                const double x = static_cast<double>(k) / N;
                fj(k, 0) = std::cos(2 * kPi * (x - t)) + t;
                hj(k, 0) = std::sin(2 * kPi * x) * std::cos(3 * t);
            }
            f.push_back(fj);
            h.push_back(hj);
        }
        WaveData d{profile(N, s1), profile(N, c1), f, h};
        const CharacteristicFields cf = characteristic_derivatives(d, M);
        const double dt = 1.0 / N;
        const Field um = wave_integral(d, (M - 1) * dt), u0 = wave_integral(d, M * dt),
                    up = wave_integral(d, (M + 1) * dt);
        const Field ux = diff_x(u0), ut = (up - um) / (2 * dt);
        const double err = std::max((cf.u_plus[M] - (ux + ut)).cwiseAbs().maxCoeff(),
                                    (cf.u_minus[M] - (ux - ut)).cwiseAbs().maxCoeff());
        if (prev > 0.0) {
            EXPECT_GT(oracle::order(prev, err), 1.8);
        }
        prev = err;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Wave, LeapfrogRejectsLargeSteps) {
    const int N = 16;
    const Field z = Field::Zero(N, 2);
    LeapfrogOptions free;
    free.terms = WaveTerms::free;
    EXPECT_THROW(leapfrog_step(z, z, z, {}, 1.5 / N, free), CflError);
    EXPECT_THROW(leapfrog_start(z, z, z, {}, 0.0, free), CflError);
    EXPECT_NO_THROW(leapfrog_step(z, z, z, {}, 1.0 / N, free));
}

TEST(Wave, FreeLeapfrogAtUnitRatioIsExact) {
    const int N = 48, M = 30;
    const Field a = profile(N, bump);
    const Field zero = Field::Zero(N, 1);
    LeapfrogOptions free;
    free.terms = WaveTerms::free;
    const double dt = 1.0 / N;
    Field prev = a, curr = leapfrog_start(a, zero, zero, {}, dt, free);
    for (int j = 1; j < M; ++j) {
        Field next = leapfrog_step(prev, curr, zero, {}, dt, free);
        prev = std::move(curr);
        curr = std::move(next);
    }
    WaveData d{a, zero, {}, {}};
    EXPECT_LT((curr - wave_integral(d, M * dt)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Wave, PicardOnRestCircleStaysNearTangent) {
    const int N = 64, W = 8;
    Field gamma, xi;
    oracle::exact_circle(N, gamma, xi);
    const GeometrySamples geo = sample_geometry(*make_euclidean(2), gamma);
    WaveWindow w;
    for (int j = 0; j <= W; ++j) {
        w.eta.push_back(Field::Zero(N, 2));
        w.theta.push_back(-xi);
        w.geo.push_back(geo);
    }
    const WavePicardResult r = picard_wave_solve(xi, Field::Zero(N, 2), w);
    EXPECT_TRUE(r.converged);
    for (double q : r.ratios) EXPECT_LT(q, 0.5);
    for (const Field& u : r.xi) EXPECT_LT((u - xi).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Wave, PicardWindowLimits) {
    const int N = 16;
    WaveWindow w;
    for (int j = 0; j <= 20; ++j) {
        w.eta.push_back(Field::Zero(N, 2));
        w.theta.push_back(Field::Zero(N, 2));
        w.geo.push_back(GeometrySamples{});
    }
    EXPECT_THROW(picard_wave_solve(Field::Zero(N, 2), Field::Zero(N, 2), w), UsageError);
}
