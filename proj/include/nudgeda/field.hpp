#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "nudgeda/grid.hpp"

namespace nudgeda {

// Multi-component nodal data over a grid. Storage is component-major:
// values[c*n_nodes + i] is component c at node i (row-major in 2D).
struct Field {
    AnyGrid grid;
    int n_components = 0;
    std::vector<double> values;

    Field() = default;
    Field(AnyGrid g, int ncomp);

    int n_nodes() const { return grid_node_count(grid); }
    std::span<double> comp(int c) { return {values.data() + static_cast<std::size_t>(c) * n_nodes(), static_cast<std::size_t>(n_nodes())}; }
    std::span<const double> comp(int c) const { return {values.data() + static_cast<std::size_t>(c) * n_nodes(), static_cast<std::size_t>(n_nodes())}; }
    double& at(int c, int i) { return values[static_cast<std::size_t>(c) * n_nodes() + i]; }
    double at(int c, int i) const { return values[static_cast<std::size_t>(c) * n_nodes() + i]; }

    bool all_finite() const;
    double max_abs() const;
};

Field make_field(const AnyGrid& g, int ncomp);
// Fill from f(x) in 1D; component c of the output is fns[c](x).
Field field_from_function(const Grid1D& g, const std::vector<std::function<double(double)>>& fns);
Field field_from_function_2d(const Grid2D& g, const std::vector<std::function<double(double, double)>>& fns);

// In-place linear algebra on matching fields.
void check_conformable(const Field& a, const Field& b);
void axpy(Field& y, double alpha, const Field& x);           // y += alpha*x
void scale(Field& y, double alpha);                          // y *= alpha
Field lincomb(double a, const Field& x, double b, const Field& y);

enum class NormKind { L1, L2, Linf };

// Discrete norm with nodal quadrature weight dx (dx*dy in 2D); Linf carries
// no weight. With `reference` given, returns the relative error
// ||f - reference|| / ||reference|| on the shared grid.
double norm(const Field& f, NormKind kind, const Field* reference = nullptr);
double component_norm(const Field& f, int c, NormKind kind);
// ||f_c - ref_c|| (absolute), and the relative variant.
double component_error(const Field& f, const Field& ref, int c, NormKind kind);
double component_relative_error(const Field& f, const Field& ref, int c, NormKind kind);

// Ring of time-stamped fields with strictly increasing times; the oldest
// entry is evicted when capacity is exceeded. Feeds backward time
// differencing of interpolated observations.
class SnapshotBuffer {
  public:
    explicit SnapshotBuffer(int capacity);

    void push(double t, Field f);
    int size() const { return static_cast<int>(entries_.size()); }
    int capacity() const { return capacity_; }
    double time(int i) const { return entries_[i].first; }          // oldest first
    const Field& field(int i) const { return entries_[i].second; }
    double latest_time() const;
    void clear() { entries_.clear(); }

  private:
    int capacity_;
    std::deque<std::pair<double, Field>> entries_;
};

}  // namespace nudgeda
