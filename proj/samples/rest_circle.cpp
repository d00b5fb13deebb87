// March a flat circle at rest and print energy and displacement.
#include <cstdio>

#include "wire/diagnostics.hpp"
#include "wire/initial.hpp"

int main() {
    const int n = 128;
    const wire::ManifoldPtr plane = wire::make_euclidean(2);
    const wire::Field curve = wire::flat_circle(n);
    wire::CurveState s = wire::prepare_initial(*plane, curve, wire::Field::Zero(n, 2)).to_state();
    wire::Stepper stepper(plane);
    const double dt = 1.0 / n;
    for (int j = 0; j < n; ++j) {
        wire::CurveState next = stepper.step(s, dt);
        if (j % 32 == 0) {
            const wire::DiagnosticsRecord r = wire::diagnose(s, *plane, j == 0);
            std::printf("t = %.4f  energy = %.8f  mu in [%.5f, %.5f]\n", r.time, r.energy, r.mu_min, r.mu_max);
        }
        s = std::move(next);
    }
    std::printf("max displacement at t = 1: %.3e\n", wire::m0(s.gamma - curve));
}
