#pragma once

#include <functional>
#include <string>

#include "nudgeda/field.hpp"
#include "nudgeda/numerics.hpp"

namespace nudgeda {

// Pointwise source term: (state, x, y, t) -> vector. y is ignored in 1D.
using NodeSource =
    std::function<void(std::span<const double>, double, double, double, std::span<double>)>;

// One hydrodynamic model: transport flux F, known source S, the flux whose
// negated divergence is the unknown force G, and an upper bound on the
// characteristic speeds of the combined system (F plus force flux), which
// dominates the transport-only speeds as well.
struct SystemSpec {
    std::string name;
    int n_components = 1;
    int dim = 1;
    NodeFlux flux_x;
    NodeFlux flux_y;        // 2D only
    NodeFlux force_flux_x;  // empty when the model has no force decomposition
    NodeFlux force_flux_y;
    NodeSource source;  // empty when S == 0
    std::function<double(const Field&)> wavespeed_bound;

    bool has_force_flux() const { return static_cast<bool>(force_flux_x); }
    bool has_source() const { return static_cast<bool>(source); }

    // flux + force flux, for reference (truth) solves in conservative form.
    NodeFlux combined_flux_x() const;
    NodeFlux combined_flux_y() const;

    // Evaluate the source into a field (zero field when S == 0).
    Field source_field(const Field& state, double t) const;
};

// Scalar test model: transport flux u, force flux u^2/6, source
// 0.2*sqrt(1+u^2).
SystemSpec scalar_system();

// 1D isentropic Euler, components (rho, rho*u); pressure p = kappa*rho^gamma
// enters as the force flux.
SystemSpec euler1d_system(double kappa, double gamma);

// 2D isentropic Euler, components (rho, rho*u, rho*v).
SystemSpec euler2d_system(double kappa, double gamma);

// Coefficient matrices of the Legendre moment hierarchy: A tridiagonal with
// zero diagonal, sub k/(2k+1) and super (k+1)/(2k+1) in row k; S diagonal
// (-sigma_a, -(sigma_s+sigma_a), ...).
struct MomentMatrices {
    int N = 0;  // highest evolved moment order
    std::vector<double> A;       // (N+1)x(N+1), row-major
    std::vector<double> S_diag;  // N+1 entries
    double sigma_a = 0.0;
    double sigma_s = 0.0;

    double a(int row, int col) const { return A[static_cast<std::size_t>(row) * (N + 1) + col]; }
};

MomentMatrices rte_moment_matrices(int N, double sigma_a, double sigma_s);

// Lax-Friedrichs splitting speed for the linear moment system; the
// Gershgorin row sums of A_N never exceed 1.
double wavespeed_bound_moment(const MomentMatrices& m);

// Linear system spec m_t + A m_x = S m for the nudged moment solve.
SystemSpec moment_system(const MomentMatrices& m);

}  // namespace nudgeda
