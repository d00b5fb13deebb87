// A rotating loop in the hyperbolic plane.
#include <cstdio>

#include "wire/diagnostics.hpp"
#include "wire/initial.hpp"

int main() {
    const int n = 96;
    const wire::ManifoldPtr h2 = wire::make_hyperbolic();
    wire::Vec center(2);
    center << 0.0, 1.0;
    const wire::Field curve = wire::hyperbolic_loop(*h2, n, center);
    const wire::Field vel = wire::rotation_velocity(curve, 0.5, center);
    wire::CurveState s = wire::prepare_initial(*h2, curve, vel).to_state();
    wire::Stepper stepper(h2);
    const double dt = 1.0 / n;
    for (int j = 0; j <= n / 2; ++j) {
        wire::CurveState next = stepper.step(s, dt);
        if (j % 12 == 0) {
            const wire::DiagnosticsRecord r = wire::diagnose(s, *h2, true);
            std::printf("t = %.4f  energy = %.6f  |xi|^2 drift = %.2e  bentness = %.5f\n", r.time, r.energy,
                        r.constraint_drift, r.bentness);
        }
        s = std::move(next);
    }
}
