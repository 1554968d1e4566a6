#include "nudgeda/field.hpp"

#include <algorithm>
#include <cmath>

namespace nudgeda {

Field::Field(AnyGrid g, int ncomp) : grid(std::move(g)), n_components(ncomp) {
    require(ncomp >= 1, "invalid-range: field needs at least one component");
    values.assign(static_cast<std::size_t>(ncomp) * grid_node_count(grid), 0.0);
}

bool Field::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

Field make_field(const AnyGrid& g, int ncomp) { return Field(g, ncomp); }

Field field_from_function(const Grid1D& g, const std::vector<std::function<double(double)>>& fns) {
    Field f(g, static_cast<int>(fns.size()));
    for (int c = 0; c < f.n_components; ++c)
        for (int j = 0; j < g.n; ++j) f.at(c, j) = fns[c](g.node(j));
    return f;
}

Field field_from_function_2d(const Grid2D& g, const std::vector<std::function<double(double, double)>>& fns) {
    Field f(g, static_cast<int>(fns.size()));
    for (int c = 0; c < f.n_components; ++c)
        for (int iy = 0; iy < g.y_axis.n; ++iy)
            for (int ix = 0; ix < g.x_axis.n; ++ix)
                f.at(c, g.index(ix, iy)) = fns[c](g.x_axis.node(ix), g.y_axis.node(iy));
    return f;
}

void check_conformable(const Field& a, const Field& b) {
    require(same_grid(a.grid, b.grid), "grid-mismatch: fields live on different grids");
    require(a.n_components == b.n_components, "grid-mismatch: component counts differ");
}

void axpy(Field& y, double alpha, const Field& x) {
    check_conformable(y, x);
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += alpha * x.values[i];
}

void scale(Field& y, double alpha) {
    for (double& v : y.values) v *= alpha;
}

Field lincomb(double a, const Field& x, double b, const Field& y) {
    check_conformable(x, y);
    Field out = x;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a * x.values[i] + b * y.values[i];
    return out;
}

namespace {

double accumulate_norm(std::span<const double> v, NormKind kind, double w) {
    switch (kind) {
        case NormKind::L1: {
            double s = 0.0;
            for (double x : v) s += std::abs(x);
            return s * w;
        }
        case NormKind::L2: {
            double s = 0.0;
            for (double x : v) s += x * x;
            return s * w;  // caller takes sqrt
        }
        case NormKind::Linf: {
            double m = 0.0;
            for (double x : v) m = std::max(m, std::abs(x));
            return m;
        }
    }
    return 0.0;
}

double finalize(double acc, NormKind kind) { return kind == NormKind::L2 ? std::sqrt(acc) : acc; }

}  // namespace

double norm(const Field& f, NormKind kind, const Field* reference) {
    const double w = grid_cell_measure(f.grid);
    if (!reference) {
        double acc = 0.0;
        for (int c = 0; c < f.n_components; ++c) {
            const double a = accumulate_norm(f.comp(c), kind, w);
            acc = (kind == NormKind::Linf) ? std::max(acc, a) : acc + a;
        }
        return finalize(acc, kind);
    }
    check_conformable(f, *reference);
    Field diff = lincomb(1.0, f, -1.0, *reference);
    const double denom = norm(*reference, kind);
    require(denom != 0.0, "division-by-zero-reference: reference norm is zero");
    return norm(diff, kind) / denom;
}

double component_norm(const Field& f, int c, NormKind kind) {
    return finalize(accumulate_norm(f.comp(c), kind, grid_cell_measure(f.grid)), kind);
}

double component_error(const Field& f, const Field& ref, int c, NormKind kind) {
    check_conformable(f, ref);
    const int n = f.n_nodes();
    std::vector<double> diff(n);
    for (int i = 0; i < n; ++i) diff[i] = f.at(c, i) - ref.at(c, i);
    return finalize(accumulate_norm(diff, kind, grid_cell_measure(f.grid)), kind);
}

double component_relative_error(const Field& f, const Field& ref, int c, NormKind kind) {
    const double denom = component_norm(ref, c, kind);
    require(denom != 0.0, "division-by-zero-reference: reference norm is zero");
    return component_error(f, ref, c, kind) / denom;
}

SnapshotBuffer::SnapshotBuffer(int capacity) : capacity_(capacity) {
    require(capacity >= 1, "invalid-range: snapshot buffer capacity must be positive");
}

void SnapshotBuffer::push(double t, Field f) {
    require(entries_.empty() || t > entries_.back().first,
            "non-monotone-time: snapshot time must exceed the latest stored time");
    entries_.emplace_back(t, std::move(f));
    while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

double SnapshotBuffer::latest_time() const {
    require(!entries_.empty(), "empty-buffer: no snapshots stored");
    return entries_.back().first;
}

}  // namespace nudgeda
