#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nudgeda/field.hpp"
#include "nudgeda/interpolant.hpp"

namespace nudgeda {

struct WenoConfig {
    double epsilon = 1e-6;  // smoothness regularizer in the nonlinear weights
};

// Pointwise flux of one state vector: flux(state, out), both of size
// n_components.
using NodeFlux = std::function<void(std::span<const double>, std::span<double>)>;

// Fifth-order WENO finite-difference approximation of d/dx F(u) with global
// Lax-Friedrichs splitting f± = (F(u) ± a*u)/2. `alpha` holds either one
// shared splitting speed or one per component; it must dominate the
// characteristic speeds. Periodic wraparound or 3-node ghost extension per
// the boundary kind.
Field weno5_flux_derivative(const Field& u, const NodeFlux& flux, std::span<const double> alpha,
                            const BoundaryKind& boundary, const WenoConfig& cfg = {});
Field weno5_flux_derivative(const Field& u, const NodeFlux& flux, double alpha,
                            const BoundaryKind& boundary, const WenoConfig& cfg = {});

// Dimension-by-dimension sweep for 2D fields: d/dx Fx(u) + d/dy Fy(u).
Field weno5_flux_divergence(const Field& u, const NodeFlux& flux_x, const NodeFlux& flux_y,
                            double alpha, const BoundaryKind& boundary, const WenoConfig& cfg = {});

// Fourth-order central first derivative of every component (one-sided at the
// ends of endpoint-inclusive grids, wraparound on periodic grids). 1D only.
Field central_derivative(const Field& u);

// One Shu-Osher SSPRK3 step: stages at t, t+dt, t+dt/2.
using RhsFn = std::function<Field(double, const Field&)>;
Field ssprk3_step(const Field& state, const RhsFn& rhs, double t, double dt);

// Backward difference of the buffered quantity at its latest time: BDF2 on
// the two most recent intervals (valid for nonuniform steps) when >= 3
// snapshots, first-order with 2, zero field with 1.
Field bdf_time_derivative(const SnapshotBuffer& buf);

struct Quadrature {
    std::vector<double> nodes;    // in (-1,1), increasing
    std::vector<double> weights;  // positive, summing to 2
};

// Gauss-Legendre rule on [-1,1]; Newton iteration from Chebyshev guesses.
Quadrature gauss_legendre(int n);

// Legendre polynomial P_k(v) by the three-term recurrence.
double legendre_eval(int k, double v);

// Antiderivative of `gradient` on its endpoint-inclusive grid, shifted and
// tilted so the result equals left_value at the first node and right_value
// at the last: out(x) = left + int_a^x (g + c), with the correction constant
// c = (right - left - int_a^b g) / (b - a). Composite trapezoid.
Field antiderivative_corrected(const Field& gradient, double left_value, double right_value);

// Cubic (4-point) Lagrange interpolation in time over sorted sample times;
// clamps the stencil at the ends. Returns the blend weights and the 4 (or
// fewer) indices to combine.
struct TimeStencil {
    int idx[4];
    double w[4];
    int m;  // number of active points
};
TimeStencil time_interp_stencil(std::span<const double> times, double t);

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace nudgeda
