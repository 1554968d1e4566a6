#include "nudgeda/grid.hpp"

namespace nudgeda {

Grid1D make_uniform_grid(double a, double b, int n, GridLayout layout) {
    require(b > a, "invalid-range: grid requires b > a");
    require(n >= 8, "too-coarse: grid requires n >= 8 nodes");
    Grid1D g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.layout = layout;
    g.dx = (layout == GridLayout::PeriodicCells) ? (b - a) / n : (b - a) / (n - 1);
    return g;
}

Grid2D make_uniform_grid_2d(const Grid1D& x_axis, const Grid1D& y_axis) {
    require(x_axis.n > 0 && y_axis.n > 0, "invalid-range: 2D grid requires valid axes");
    return Grid2D{x_axis, y_axis};
}

int grid_node_count(const AnyGrid& g) {
    if (const auto* g1 = std::get_if<Grid1D>(&g)) return g1->n;
    return std::get<Grid2D>(g).n_nodes();
}

double grid_cell_measure(const AnyGrid& g) {
    if (const auto* g1 = std::get_if<Grid1D>(&g)) return g1->dx;
    const auto& g2 = std::get<Grid2D>(g);
    return g2.x_axis.dx * g2.y_axis.dx;
}

int grid_dim(const AnyGrid& g) { return std::holds_alternative<Grid1D>(g) ? 1 : 2; }

bool same_grid(const Grid1D& a, const Grid1D& b) {
    return a.a == b.a && a.b == b.b && a.n == b.n && a.layout == b.layout;
}

bool same_grid(const AnyGrid& a, const AnyGrid& b) {
    if (a.index() != b.index()) return false;
    if (const auto* a1 = std::get_if<Grid1D>(&a)) return same_grid(*a1, std::get<Grid1D>(b));
    const auto& a2 = std::get<Grid2D>(a);
    const auto& b2 = std::get<Grid2D>(b);
    return same_grid(a2.x_axis, b2.x_axis) && same_grid(a2.y_axis, b2.y_axis);
}

}  // namespace nudgeda
