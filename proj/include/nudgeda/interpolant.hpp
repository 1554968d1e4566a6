#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nudgeda/field.hpp"

namespace nudgeda {

// Boundary handling for ghost-node extrapolation. Dirichlet carries the
// prescribed boundary values; Neumann is the zero-slope mirror.
struct BoundaryKind {
    enum class Tag { Periodic, Dirichlet, Neumann };
    Tag tag = Tag::Periodic;
    double left_value = 0.0;
    double right_value = 0.0;

    static BoundaryKind periodic() { return {}; }
    static BoundaryKind dirichlet(double left, double right) {
        return {Tag::Dirichlet, left, right};
    }
    static BoundaryKind neumann() { return {Tag::Neumann, 0.0, 0.0}; }
};

// Extend one component of observed nodal data by m ghost values per side,
// encoding the boundary condition:
//   periodic:   ghosts wrap around the period,
//   Dirichlet:  odd reflection through the prescribed boundary value,
//   Neumann:    even mirror of the interior.
// The layout tells whether the data duplicates the right endpoint.
std::vector<double> extend_ghost(std::span<const double> obs_values, const BoundaryKind& boundary,
                                 int m, GridLayout layout);

// Gaussian kernel value K_sigma(r) = sigma^{-d} exp(-r^2 / (2 sigma^2)).
double gaussian_kernel(double r, double sigma, int dim);

// Piecewise-cubic (4-point Lagrange per axis) sampling of fields on `from`
// at the nodes of `to`; periodic wraparound where `from` is periodic,
// clamped one-sided stencils otherwise. Exact on cubics.
class RestrictionMap {
  public:
    RestrictionMap(const AnyGrid& from, const AnyGrid& to);
    // Component-major values at the nodes of `to`.
    std::vector<double> apply(const Field& f) const;
    Field apply_as_field(const Field& f) const;
    const AnyGrid& target_grid() const { return to_; }

  private:
    AnyGrid from_;
    AnyGrid to_;
    std::vector<std::int32_t> col_;
    std::vector<double> w_;
    int width_ = 0;
};

// Kernel-regression interpolation operator: a precomputed row-stochastic
// weight matrix mapping observation-node values (plus ghost nodes) to
// evaluation-node values. Weights beyond 6*sigma of an evaluation point are
// truncated to zero before normalization, so each row is a short band and
// application costs O(N).
//
// The same object also carries the reverse map: piecewise-cubic (4-point
// Lagrange) restriction of a computational-grid field to the observation
// nodes. Immutable after build; apply/restrict are pure.
class KernelInterpolant {
  public:
    // Default-constructed interpolants are empty placeholders; build() and
    // identity() produce usable ones.
    KernelInterpolant() = default;

    static KernelInterpolant build(const AnyGrid& obs_grid, const AnyGrid& eval_grid, double sigma,
                                   const BoundaryKind& boundary, int m_ghost);

    // Pass-through operator on one grid (obs grid == eval grid, no
    // smoothing); stands in for the sigma -> 0 projection limit.
    static KernelInterpolant identity(const AnyGrid& grid);

    // obs_values is component-major, n_components x N_ob.
    Field apply(std::span<const double> obs_values, int n_components) const;

    // Analytic derivative of the regression formula (quotient rule on the
    // normalized weights), order_x + order_y <= 2. Auxiliary; the solvers
    // difference apply() output instead.
    Field apply_derivative(std::span<const double> obs_values, int n_components, int order_x,
                           int order_y = 0) const;

    // Sample a computational-grid field at the observation nodes
    // (component-major output).
    std::vector<double> restrict_to_obs(const Field& f) const;

    // I_h acting on computational-grid fields: apply(restrict(f)).
    Field smooth(const Field& f) const;

    const AnyGrid& obs_grid() const { return obs_grid_; }
    const AnyGrid& eval_grid() const { return eval_grid_; }
    double sigma() const { return sigma_; }
    int ghost_count() const { return m_ghost_; }
    const BoundaryKind& boundary() const { return boundary_; }
    bool is_identity() const { return identity_; }
    int obs_node_count() const { return grid_node_count(obs_grid_); }

    // max over rows of |sum_j w_ej - 1|; diagnostic for tests.
    double row_sum_defect() const;

  private:
    void build_weights_1d();
    void build_weights_2d();
    std::vector<double> extend_all_components(std::span<const double> obs_values,
                                              int n_components) const;

    AnyGrid obs_grid_;
    AnyGrid eval_grid_;
    double sigma_ = 0.0;
    int m_ghost_ = 0;
    BoundaryKind boundary_;
    bool identity_ = false;

    // CSR band over extended observation nodes, one row per evaluation node.
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> col_;
    std::vector<double> weight_;
    std::vector<double> row_sum_;  // pre-normalization kernel sums (for derivatives)
    int n_ext_x_ = 0;              // extended obs node count per axis
    int n_ext_y_ = 1;

    // Sampling of evaluation-grid fields at the observation nodes.
    std::optional<RestrictionMap> restriction_;
};

}  // namespace nudgeda
