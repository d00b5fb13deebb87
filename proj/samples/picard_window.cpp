// Fixed-point iteration over one short window, compared with marching.
#include <algorithm>
#include <cstdio>

#include "wire/dynamics.hpp"
#include "wire/initial.hpp"

int main() {
    const int n = 128, steps = 8;
    const wire::ManifoldPtr plane = wire::make_euclidean(2);
    const wire::Field curve = wire::flat_circle(n, 2, 2, 0.01);
    const wire::CurveState s0 = wire::prepare_initial(*plane, curve, wire::Field::Zero(n, 2)).to_state();

    const wire::CoupledPicardResult pr = wire::picard_coupled(*plane, s0, steps);
    for (std::size_t i = 0; i < pr.distances.size(); ++i)
        std::printf("iteration %zu  distance %.3e%s\n", i + 1, pr.distances[i], pr.converged && i + 1 == pr.distances.size() ? "  (converged)" : "");

    wire::Stepper stepper(plane);
    wire::CurveState s = s0;
    double gap = 0.0;
    for (int j = 1; j <= steps; ++j) {
        s = stepper.step(s, 1.0 / n);
        gap = std::max(gap, wire::m0(s.xi - pr.trajectory.xi[j]));
    }
    std::printf("max |xi_picard - xi_march| over the window: %.3e\n", gap);
}
