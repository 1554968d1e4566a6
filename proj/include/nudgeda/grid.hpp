#pragma once

#include <variant>

#include "nudgeda/error.hpp"

namespace nudgeda {

// Node placement on a uniform 1D grid.
//   PeriodicCells:      n nodes at a + j*dx, dx = (b-a)/n; the endpoint b is
//                       identified with a and not stored.
//   EndpointInclusive:  n nodes at a + j*dx, dx = (b-a)/(n-1); both endpoints
//                       stored (used where boundary traces matter).
enum class GridLayout { PeriodicCells, EndpointInclusive };

struct Grid1D {
    double a = 0.0;
    double b = 1.0;
    int n = 0;
    GridLayout layout = GridLayout::PeriodicCells;
    double dx = 0.0;

    double node(int j) const { return a + j * dx; }
    double length() const { return b - a; }
    bool periodic() const { return layout == GridLayout::PeriodicCells; }
};

Grid1D make_uniform_grid(double a, double b, int n, GridLayout layout);

// Tensor grid; node indexing is row-major with y outer, x inner:
// node(ix, iy) = iy*x_axis.n + ix.
struct Grid2D {
    Grid1D x_axis;
    Grid1D y_axis;

    int n_nodes() const { return x_axis.n * y_axis.n; }
    int index(int ix, int iy) const { return iy * x_axis.n + ix; }
};

Grid2D make_uniform_grid_2d(const Grid1D& x_axis, const Grid1D& y_axis);

using AnyGrid = std::variant<Grid1D, Grid2D>;

int grid_node_count(const AnyGrid& g);
// Quadrature weight of one node: dx in 1D, dx*dy in 2D.
double grid_cell_measure(const AnyGrid& g);
int grid_dim(const AnyGrid& g);
bool same_grid(const Grid1D& a, const Grid1D& b);
bool same_grid(const AnyGrid& a, const AnyGrid& b);

}  // namespace nudgeda
