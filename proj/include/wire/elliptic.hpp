#pragma once

// Linear spatial problems along the curve: the theta equation in flux form
// and the helper problem defining the bentness of a curve.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "wire/errors.hpp"
#include "wire/fields.hpp"

namespace wire {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct EllipticOptions {
    double solver_tol = 1e-10;
    double b0 = 1e-3;
    bool check_bentness = true;
    /// Systems with N*n above this size use conjugate gradients.
    int dense_limit = 4096;
};

struct EllipticSystem {
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
};

struct BentnessReport {
    double b_value = 0.0;
    Field phi;
    double residual = 0.0;
};

/// Source fields of the theta equation: psi enters in flux form, phi directly.
struct SourceTerms {
    Field psi;
    Field phi;
};

struct FluxSolution {
    Field u;
    /// D_x u + f.
    Field flux;
    double residual = 0.0;
};

inline Eigen::VectorXd flatten(const Field& f) {
    Eigen::VectorXd v(f.size());
    for (int k = 0; k < f.rows(); ++k)
        for (int i = 0; i < f.cols(); ++i) v[k * f.cols() + i] = f(k, i);
    return v;
}

inline Field unflatten(const Eigen::VectorXd& v, int n_points, int dim) {
    Field f(n_points, dim);
    for (int k = 0; k < n_points; ++k)
        for (int i = 0; i < dim; ++i) f(k, i) = v[k * dim + i];
    return f;
}

/// Matrix of the discrete D_x acting on flattened fields.
inline SparseMatrix assemble_dx(const Field& xi, const GeometrySamples& geo) {
    const int N = static_cast<int>(xi.rows()), n = static_cast<int>(xi.cols());
    const double c = 0.5 * N;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * n * (2 + n));
    for (int k = 0; k < N; ++k) {
        const int kp = (k + 1) % N, km = (k + N - 1) % N;
        for (int a = 0; a < n; ++a) {
            trip.emplace_back(k * n + a, kp * n + a, c);
            trip.emplace_back(k * n + a, km * n + a, -c);
        }
        if (!geo.flat) {
            const FrameMatrix g = geo.gamma[k].matrix(xi.row(k).transpose());
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    if (g(a, b) != 0.0) trip.emplace_back(k * n + a, k * n + b, g(a, b));
        }
    }
    SparseMatrix d(N * n, N * n);
    d.setFromTriplets(trip.begin(), trip.end());
    return d;
}

/// Block-diagonal projection onto the orthogonal complement of xi.
inline SparseMatrix assemble_perp(const Field& xi) {
    const int N = static_cast<int>(xi.rows()), n = static_cast<int>(xi.cols());
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < N; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const double v = (a == b ? 1.0 : 0.0) - xi(k, a) * xi(k, b);
                if (v != 0.0) trip.emplace_back(k * n + a, k * n + b, v);
            }
    SparseMatrix p(N * n, N * n);
    p.setFromTriplets(trip.begin(), trip.end());
    return p;
}

/// Operator u -> -D_x D_x u + u^perp as a matrix.
inline SparseMatrix assemble_flux_operator(const Field& xi, const GeometrySamples& geo) {
    const SparseMatrix d = assemble_dx(xi, geo);
    SparseMatrix l = SparseMatrix(d.transpose()) * d;
    l += assemble_perp(xi);
    l.makeCompressed();
    return l;
}

/// The same operator applied without assembly.
inline Field apply_flux_operator(const Field& u, const Field& xi, const GeometrySamples& geo) {
    return -cov_dx(cov_dx(u, xi, geo), xi, geo) + perp(u, xi);
}

/// System for -D_x(D_x u + f) + u^perp = h.
inline EllipticSystem assemble_flux_system(const Field& f, const Field& h, const Field& xi, const GeometrySamples& geo) {
    detail::same_shape(f, xi, "flux system");
    detail::same_shape(h, xi, "flux system");
    EllipticSystem sys;
    sys.matrix = assemble_flux_operator(xi, geo);
    sys.rhs = flatten(h + cov_dx(f, xi, geo));
    return sys;
}

/// Symmetric positive (semi)definite system solver: dense Cholesky at desk
/// scale, conjugate gradients above the size limit.
class SpdSolver {
public:
    SpdSolver(const SparseMatrix& a, const EllipticOptions& opt) : opt_(opt), a_(a) {
        if (a.rows() <= opt.dense_limit) {
            dense_.emplace(Eigen::MatrixXd(a));
            if (dense_->info() != Eigen::Success)
                throw NumericalError("Cholesky factorization failed (operator not positive definite)");
            const double rc = dense_->rcond();
            if (!(rc > 1e-15))
                throw NumericalError("operator numerically singular, reciprocal condition estimate " + std::to_string(rc));
        } else {
            cg_.emplace();
            cg_->setTolerance(opt.solver_tol);
            cg_->setMaxIterations(std::max<int>(1000, 10 * static_cast<int>(a.rows())));
            cg_->compute(a_);
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        if (dense_) return dense_->solve(b);
        Eigen::VectorXd x = cg_->solve(b);
        if (cg_->info() != Eigen::Success)
            throw NumericalError("conjugate gradients did not converge, estimated error " + std::to_string(cg_->error()));
        return x;
    }

    bool is_dense() const { return dense_.has_value(); }

private:
    EllipticOptions opt_;
    SparseMatrix a_;
    std::optional<Eigen::LLT<Eigen::MatrixXd>> dense_;
    std::optional<Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper>> cg_;
};

/// B(gamma, xi): distance from xi to fields with small covariant derivative.
inline BentnessReport bentness(const Field& xi, const GeometrySamples& geo, const EllipticOptions& opt = {}) {
    detail::same_points(xi, geo, "bentness");
    const int N = static_cast<int>(xi.rows()), n = static_cast<int>(xi.cols());
    const SparseMatrix d = assemble_dx(xi, geo);
    SparseMatrix a = SparseMatrix(d.transpose()) * d;
    SparseMatrix id(N * n, N * n);
    id.setIdentity();
    a += id;
    const SpdSolver solver(a, opt);
    const Eigen::VectorXd rhs = flatten(xi);
    const Eigen::VectorXd sol = solver.solve(rhs);
    BentnessReport rep;
    rep.phi = unflatten(sol, N, n);
    rep.residual = (a * sol - rhs).cwiseAbs().maxCoeff();
    const Field dphi = cov_dx(rep.phi, xi, geo);
    const Field diff = rep.phi - xi;
    rep.b_value = std::sqrt(std::max(0.0, l2_inner(diff, diff) + l2_inner(dphi, dphi)));
    return rep;
}

inline void require_bentness(const Field& xi, const GeometrySamples& geo, const EllipticOptions& opt) {
    const double b = bentness(xi, geo, opt).b_value;
    if (b < opt.b0)
        throw NearGeodesicError("curve is near a geodesic: bentness " + std::to_string(b) + " below threshold " +
                                    std::to_string(opt.b0),
                                b);
}

/// Factored theta operator for one (gamma, xi); solves several right-hand sides.
class FluxFormSolver {
public:
    FluxFormSolver(const Field& xi, const GeometrySamples& geo, const EllipticOptions& opt = {})
        : xi_(xi), geo_(&geo), opt_(opt) {
        detail::same_points(xi, geo, "solve_flux_form");
        if (opt.check_bentness) require_bentness(xi, geo, opt);
        matrix_ = assemble_flux_operator(xi, geo);
        try {
            solver_.emplace(matrix_, opt);
        } catch (const NumericalError& e) {
            const double b = bentness(xi, geo, opt).b_value;
            if (b < opt.b0) throw NearGeodesicError(std::string(e.what()) + "; bentness " + std::to_string(b), b);
            throw;
        }
    }

    FluxSolution solve(const Field& f, const Field& h) const {
        detail::same_shape(f, xi_, "solve_flux_form");
        detail::same_shape(h, xi_, "solve_flux_form");
        const Eigen::VectorXd rhs = flatten(h + cov_dx(f, xi_, *geo_));
        const Eigen::VectorXd sol = solver_->solve(rhs);
        FluxSolution out;
        out.u = unflatten(sol, static_cast<int>(xi_.rows()), static_cast<int>(xi_.cols()));
        out.flux = cov_dx(out.u, xi_, *geo_) + f;
        out.residual = (matrix_ * sol - rhs).cwiseAbs().maxCoeff();
        if (!std::isfinite(out.residual)) throw NumericalError("non-finite solution of the theta equation");
        return out;
    }

    const SparseMatrix& matrix() const { return matrix_; }

private:
    Field xi_;
    const GeometrySamples* geo_;
    EllipticOptions opt_;
    SparseMatrix matrix_;
    std::optional<SpdSolver> solver_;
};

/// Solves -D_x(D_x u + f) + u^perp = h.
inline FluxSolution solve_flux_form(const Field& f, const Field& h, const Field& xi, const GeometrySamples& geo,
                                    const EllipticOptions& opt = {}) {
    return FluxFormSolver(xi, geo, opt).solve(f, h);
}

/// Theta from the state and its sources; the returned flux is D_x theta + psi.
inline FluxSolution solve_theta(const CurveState& state, const SourceTerms& src, const GeometrySamples& geo,
                                const EllipticOptions& opt = {}) {
    return solve_flux_form(src.psi, src.phi, state.xi, geo, opt);
}

}  // namespace wire
