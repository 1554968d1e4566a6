#include "nudgeda/interpolant.hpp"

#include <algorithm>
#include <cmath>

namespace nudgeda {

namespace {

constexpr double kCutoffSigmas = 6.0;  // K treated as compactly supported beyond 6*sigma

// Wrap integer index into [0, n).
int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

}  // namespace

std::vector<double> extend_ghost(std::span<const double> obs_values, const BoundaryKind& boundary,
                                 int m, GridLayout layout) {
    const int n = static_cast<int>(obs_values.size());
    require(m >= 0, "invalid-range: ghost count must be nonnegative");
    require(n > m, "insufficient-observations: need more than m observation nodes");
    std::vector<double> ext(n + 2 * m);
    std::copy(obs_values.begin(), obs_values.end(), ext.begin() + m);
    for (int j = 1; j <= m; ++j) {
        double left = 0.0, right = 0.0;
        switch (boundary.tag) {
            case BoundaryKind::Tag::Periodic:
                if (layout == GridLayout::PeriodicCells) {
                    left = obs_values[wrap(n - j, n)];
                    right = obs_values[wrap(j - 1, n)];
                } else {
                    // duplicated endpoint: U[0] == U[n-1]
                    left = obs_values[wrap(n - 1 - j, n)];
                    right = obs_values[wrap(j, n)];
                }
                break;
            case BoundaryKind::Tag::Dirichlet:
                left = 2.0 * boundary.left_value - obs_values[j];
                right = 2.0 * boundary.right_value - obs_values[n - 1 - j];
                break;
            case BoundaryKind::Tag::Neumann:
                left = obs_values[j];
                right = obs_values[n - 1 - j];
                break;
        }
        ext[m - j] = left;
        ext[m + n - 1 + j] = right;
    }
    return ext;
}

double gaussian_kernel(double r, double sigma, int dim) {
    const double z = r / sigma;
    return std::pow(sigma, -dim) * std::exp(-0.5 * z * z);
}

KernelInterpolant KernelInterpolant::build(const AnyGrid& obs_grid, const AnyGrid& eval_grid,
                                           double sigma, const BoundaryKind& boundary,
                                           int m_ghost) {
    require(sigma > 0.0, "invalid-range: kernel bandwidth must be positive");
    require(m_ghost >= 0, "invalid-range: ghost count must be nonnegative");
    require(grid_dim(obs_grid) == grid_dim(eval_grid), "grid-mismatch: dimensions differ");
    KernelInterpolant ip;
    ip.obs_grid_ = obs_grid;
    ip.eval_grid_ = eval_grid;
    ip.sigma_ = sigma;
    ip.m_ghost_ = m_ghost;
    ip.boundary_ = boundary;
    if (grid_dim(obs_grid) == 1)
        ip.build_weights_1d();
    else
        ip.build_weights_2d();
    ip.restriction_.emplace(eval_grid, obs_grid);
    return ip;
}

KernelInterpolant KernelInterpolant::identity(const AnyGrid& grid) {
    KernelInterpolant ip;
    ip.obs_grid_ = grid;
    ip.eval_grid_ = grid;
    ip.identity_ = true;
    return ip;
}

// For periodic boundaries the window wraps over the real observation nodes
// (full kernel support, exact translation invariance). For Dirichlet and
// Neumann data the window runs over the ghost-extended index range and is
// clamped there, matching the m-ghost boundary correction.
void KernelInterpolant::build_weights_1d() {
    const auto& og = std::get<Grid1D>(obs_grid_);
    const auto& eg = std::get<Grid1D>(eval_grid_);
    const bool periodic = boundary_.tag == BoundaryKind::Tag::Periodic;
    if (periodic)
        require(og.layout == GridLayout::PeriodicCells,
                "grid-mismatch: periodic boundary expects a periodic-cells observation grid");
    const double h = og.dx;
    n_ext_x_ = periodic ? og.n : og.n + 2 * m_ghost_;
    n_ext_y_ = 1;
    const double radius = kCutoffSigmas * sigma_;
    // small index slack so nodes sitting exactly on the truncation radius are
    // included or excluded consistently regardless of coordinate rounding
    const double slack = 1e-9;
    row_ptr_.assign(eg.n + 1, 0);
    for (int e = 0; e < eg.n; ++e) {
        const double x = eg.node(e);
        const double s = (x - og.a) / h;  // fractional obs index
        int k_lo = static_cast<int>(std::ceil(s - radius / h - slack));
        int k_hi = static_cast<int>(std::floor(s + radius / h + slack));
        if (!periodic) {
            k_lo = std::max(k_lo + m_ghost_, 0) - m_ghost_;
            k_hi = std::min(k_hi + m_ghost_, n_ext_x_ - 1) - m_ghost_;
        }
        double sum = 0.0;
        const std::size_t begin = weight_.size();
        for (int k = k_lo; k <= k_hi; ++k) {
            const double xk = og.a + k * h;
            const double r = std::abs(x - xk);
            if (r > radius * (1.0 + slack)) continue;
            const double kv = gaussian_kernel(r, sigma_, 1);
            col_.push_back(static_cast<std::int32_t>(periodic ? wrap(k, og.n) : k + m_ghost_));
            weight_.push_back(kv);
            sum += kv;
        }
        require(sum > 0.0,
                "degenerate-row: kernel bandwidth far smaller than the observation spacing");
        for (std::size_t q = begin; q < weight_.size(); ++q) weight_[q] /= sum;
        row_sum_.push_back(sum);
        row_ptr_[e + 1] = static_cast<std::int64_t>(weight_.size());
    }
}

void KernelInterpolant::build_weights_2d() {
    const auto& og = std::get<Grid2D>(obs_grid_);
    const auto& eg = std::get<Grid2D>(eval_grid_);
    require(boundary_.tag == BoundaryKind::Tag::Periodic,
            "unsupported-order: 2D interpolants are periodic only");
    require(og.x_axis.layout == GridLayout::PeriodicCells &&
                og.y_axis.layout == GridLayout::PeriodicCells,
            "grid-mismatch: 2D observation grid must be periodic-cells");
    const double hx = og.x_axis.dx, hy = og.y_axis.dx;
    n_ext_x_ = og.x_axis.n;
    n_ext_y_ = og.y_axis.n;
    const double radius = kCutoffSigmas * sigma_;
    const double slack = 1e-9;
    const double r2 = radius * radius * (1.0 + slack);
    const double inv2s2 = 0.5 / (sigma_ * sigma_);
    const int ne = eg.n_nodes();
    row_ptr_.assign(ne + 1, 0);
    for (int ey = 0; ey < eg.y_axis.n; ++ey) {
        const double y = eg.y_axis.node(ey);
        const double sy = (y - og.y_axis.a) / hy;
        const int ky_lo = static_cast<int>(std::ceil(sy - radius / hy - slack));
        const int ky_hi = static_cast<int>(std::floor(sy + radius / hy + slack));
        for (int ex = 0; ex < eg.x_axis.n; ++ex) {
            const double x = eg.x_axis.node(ex);
            const double sx = (x - og.x_axis.a) / hx;
            const int kx_lo = static_cast<int>(std::ceil(sx - radius / hx - slack));
            const int kx_hi = static_cast<int>(std::floor(sx + radius / hx + slack));
            double sum = 0.0;
            const std::size_t begin = weight_.size();
            for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                const double dy = y - (og.y_axis.a + ky * hy);
                const int row_base = wrap(ky, og.y_axis.n) * og.x_axis.n;
                for (int kx = kx_lo; kx <= kx_hi; ++kx) {
                    const double dx = x - (og.x_axis.a + kx * hx);
                    const double d2 = dx * dx + dy * dy;
                    if (d2 > r2) continue;
                    const double kv = std::exp(-d2 * inv2s2);
                    col_.push_back(static_cast<std::int32_t>(row_base + wrap(kx, og.x_axis.n)));
                    weight_.push_back(kv);
                    sum += kv;
                }
            }
            require(sum > 0.0,
                    "degenerate-row: kernel bandwidth far smaller than the observation spacing");
            for (std::size_t q = begin; q < weight_.size(); ++q) weight_[q] /= sum;
            // sigma^{-d} prefactor cancels in the normalized weights; fold it
            // into the stored sum so derivative formulas see true K values.
            row_sum_.push_back(sum / (sigma_ * sigma_));
            row_ptr_[eg.index(ex, ey) + 1] = static_cast<std::int64_t>(weight_.size());
        }
    }
}

namespace {

// 4-point Lagrange stencil for sampling a uniform grid at fractional index s.
void cubic_stencil(double s, int n, bool periodic, int& base, double w[4]) {
    int i0 = static_cast<int>(std::floor(s));
    if (!periodic) i0 = std::clamp(i0, 1, n - 3);  // keep i0-1 .. i0+2 inside
    base = i0 - 1;
    const double xi = s - i0;
    w[0] = -xi * (xi - 1.0) * (xi - 2.0) / 6.0;
    w[1] = (xi * xi - 1.0) * (xi - 2.0) / 2.0;
    w[2] = -xi * (xi + 1.0) * (xi - 2.0) / 2.0;
    w[3] = xi * (xi * xi - 1.0) / 6.0;
}

// Map a target coordinate into the source axis, checking the domain.
double locate_on_axis(double x, const Grid1D& axis) {
    if (axis.periodic()) {
        x = axis.a + std::fmod(x - axis.a, axis.length());
        if (x < axis.a) x += axis.length();
        return x;
    }
    const double tol = 1e-12 * axis.length();
    require(x >= axis.a - tol && x <= axis.b + tol,
            "out-of-domain: target node outside the source grid");
    return std::clamp(x, axis.a, axis.b);
}

}  // namespace

RestrictionMap::RestrictionMap(const AnyGrid& from, const AnyGrid& to) : from_(from), to_(to) {
    require(grid_dim(from) == grid_dim(to), "grid-mismatch: dimensions differ");
    if (grid_dim(from) == 1) {
        const auto& cg = std::get<Grid1D>(from);
        const auto& og = std::get<Grid1D>(to);
        require(cg.n >= 4, "grid-too-small: cubic restriction needs 4 source nodes");
        width_ = 4;
        const bool periodic = cg.periodic();
        for (int j = 0; j < og.n; ++j) {
            const double x = locate_on_axis(og.node(j), cg);
            int base;
            double w[4];
            cubic_stencil((x - cg.a) / cg.dx, cg.n, periodic, base, w);
            for (int r = 0; r < 4; ++r) {
                col_.push_back(static_cast<std::int32_t>(periodic ? wrap(base + r, cg.n) : base + r));
                w_.push_back(w[r]);
            }
        }
    } else {
        const auto& cg = std::get<Grid2D>(from);
        const auto& og = std::get<Grid2D>(to);
        require(cg.x_axis.n >= 4 && cg.y_axis.n >= 4,
                "grid-too-small: cubic restriction needs 4 source nodes per axis");
        width_ = 16;
        const bool px = cg.x_axis.periodic(), py = cg.y_axis.periodic();
        for (int jy = 0; jy < og.y_axis.n; ++jy) {
            const double y = locate_on_axis(og.y_axis.node(jy), cg.y_axis);
            int by;
            double wy[4];
            cubic_stencil((y - cg.y_axis.a) / cg.y_axis.dx, cg.y_axis.n, py, by, wy);
            for (int jx = 0; jx < og.x_axis.n; ++jx) {
                const double x = locate_on_axis(og.x_axis.node(jx), cg.x_axis);
                int bx;
                double wx[4];
                cubic_stencil((x - cg.x_axis.a) / cg.x_axis.dx, cg.x_axis.n, px, bx, wx);
                for (int ry = 0; ry < 4; ++ry) {
                    const int iy = py ? wrap(by + ry, cg.y_axis.n) : by + ry;
                    for (int rx = 0; rx < 4; ++rx) {
                        const int ix = px ? wrap(bx + rx, cg.x_axis.n) : bx + rx;
                        col_.push_back(static_cast<std::int32_t>(cg.index(ix, iy)));
                        w_.push_back(wx[rx] * wy[ry]);
                    }
                }
            }
        }
    }
}

std::vector<double> RestrictionMap::apply(const Field& f) const {
    require(same_grid(f.grid, from_), "grid-mismatch: field is not on the restriction source grid");
    const int n_to = grid_node_count(to_);
    std::vector<double> out(static_cast<std::size_t>(f.n_components) * n_to);
    for (int c = 0; c < f.n_components; ++c) {
        auto src = f.comp(c);
        for (int j = 0; j < n_to; ++j) {
            double acc = 0.0;
            const std::size_t base = static_cast<std::size_t>(j) * width_;
            for (int r = 0; r < width_; ++r) acc += w_[base + r] * src[col_[base + r]];
            out[static_cast<std::size_t>(c) * n_to + j] = acc;
        }
    }
    return out;
}

Field RestrictionMap::apply_as_field(const Field& f) const {
    Field out(to_, f.n_components);
    out.values = apply(f);
    return out;
}

std::vector<double> KernelInterpolant::extend_all_components(std::span<const double> obs_values,
                                                             int n_components) const {
    const int n_ob = obs_node_count();
    require(static_cast<int>(obs_values.size()) == n_ob * n_components,
            "length-mismatch: observation array size does not match grid and components");
    if (boundary_.tag == BoundaryKind::Tag::Periodic) {
        // periodic windows index the real nodes directly
        return std::vector<double>(obs_values.begin(), obs_values.end());
    }
    const auto& og = std::get<Grid1D>(obs_grid_);
    std::vector<double> ext(static_cast<std::size_t>(n_components) * n_ext_x_);
    for (int c = 0; c < n_components; ++c) {
        auto one = extend_ghost(obs_values.subspan(static_cast<std::size_t>(c) * n_ob, n_ob),
                                boundary_, m_ghost_, og.layout);
        std::copy(one.begin(), one.end(), ext.begin() + static_cast<std::size_t>(c) * n_ext_x_);
    }
    return ext;
}

Field KernelInterpolant::apply(std::span<const double> obs_values, int n_components) const {
    if (identity_) {
        require(static_cast<int>(obs_values.size()) == obs_node_count() * n_components,
                "length-mismatch: observation array size does not match grid and components");
        Field out(eval_grid_, n_components);
        std::copy(obs_values.begin(), obs_values.end(), out.values.begin());
        return out;
    }
    const auto ext = extend_all_components(obs_values, n_components);
    const std::size_t ext_nodes = static_cast<std::size_t>(n_ext_x_) * n_ext_y_;
    Field out(eval_grid_, n_components);
    const int ne = out.n_nodes();
    for (int c = 0; c < n_components; ++c) {
        const double* src = ext.data() + static_cast<std::size_t>(c) * ext_nodes;
        auto dst = out.comp(c);
        for (int e = 0; e < ne; ++e) {
            double acc = 0.0;
            for (std::int64_t q = row_ptr_[e]; q < row_ptr_[e + 1]; ++q)
                acc += weight_[q] * src[col_[q]];
            dst[e] = acc;
        }
    }
    return out;
}

Field KernelInterpolant::apply_derivative(std::span<const double> obs_values, int n_components,
                                          int order_x, int order_y) const {
    require(!identity_, "unsupported-order: identity interpolant has no analytic derivative");
    const int total = order_x + order_y;
    require(order_x >= 0 && order_y >= 0 && total >= 1 && total <= 2,
            "unsupported-order: derivative order must have total 1 or 2");
    const int dim = grid_dim(obs_grid_);
    require(order_y == 0 || dim == 2, "unsupported-order: y-derivative of a 1D interpolant");

    // directions of the one or two derivatives taken (0 = x, 1 = y)
    const int dir_a = order_x > 0 ? 0 : 1;
    const int dir_b = (total == 2) ? ((order_x == 2) ? 0 : ((order_y == 2) ? 1 : 1)) : -1;

    const bool periodic = boundary_.tag == BoundaryKind::Tag::Periodic;
    const auto ext = extend_all_components(obs_values, n_components);
    const std::size_t ext_nodes = static_cast<std::size_t>(n_ext_x_) * n_ext_y_;
    Field out(eval_grid_, n_components);
    const int ne = out.n_nodes();
    const double sig2 = sigma_ * sigma_;

    double ax = 0, ay = 0, hx = 0, hy = 0, lx = 0, ly = 0;
    if (dim == 1) {
        const auto& og = std::get<Grid1D>(obs_grid_);
        ax = og.a;
        hx = og.dx;
        lx = og.length();
    } else {
        const auto& og = std::get<Grid2D>(obs_grid_);
        ax = og.x_axis.a;
        ay = og.y_axis.a;
        hx = og.x_axis.dx;
        hy = og.y_axis.dx;
        lx = og.x_axis.length();
        ly = og.y_axis.length();
    }
    // minimal-image separation for periodic windows (col holds the wrapped node)
    auto min_image = [](double d, double period) {
        if (period <= 0.0) return d;
        return d - period * std::round(d / period);
    };

    std::vector<double> n_val(n_components), n_a(n_components), n_b(n_components),
        n_ab(n_components);
    for (int e = 0; e < ne; ++e) {
        double xe = 0, ye = 0;
        if (dim == 1) {
            xe = std::get<Grid1D>(eval_grid_).node(e);
        } else {
            const auto& eg = std::get<Grid2D>(eval_grid_);
            xe = eg.x_axis.node(e % eg.x_axis.n);
            ye = eg.y_axis.node(e / eg.x_axis.n);
        }
        const double d_val = row_sum_[e];
        double d_a = 0, d_b = 0, d_ab = 0;
        std::fill(n_val.begin(), n_val.end(), 0.0);
        std::fill(n_a.begin(), n_a.end(), 0.0);
        std::fill(n_b.begin(), n_b.end(), 0.0);
        std::fill(n_ab.begin(), n_ab.end(), 0.0);
        for (std::int64_t q = row_ptr_[e]; q < row_ptr_[e + 1]; ++q) {
            const int k = col_[q];
            double dx, dy = 0.0;
            if (dim == 1) {
                dx = xe - (ax + (periodic ? k : k - m_ghost_) * hx);
                if (periodic) dx = min_image(dx, lx);
            } else {
                dx = min_image(xe - (ax + (k % n_ext_x_) * hx), lx);
                dy = min_image(ye - (ay + (k / n_ext_x_) * hy), ly);
            }
            const double kv = weight_[q] * row_sum_[e];  // raw kernel value
            const double ga = (dir_a == 0 ? -dx : -dy) / sig2;
            d_a += kv * ga;
            double gb = 0, gab = 0;
            if (total == 2) {
                gb = (dir_b == 0 ? -dx : -dy) / sig2;
                gab = ga * gb - ((dir_a == dir_b) ? 1.0 / sig2 : 0.0);
                d_b += kv * gb;
                d_ab += kv * gab;
            }
            for (int c = 0; c < n_components; ++c) {
                const double u = ext[static_cast<std::size_t>(c) * ext_nodes + k];
                n_val[c] += kv * u;
                n_a[c] += kv * ga * u;
                if (total == 2) {
                    n_b[c] += kv * gb * u;
                    n_ab[c] += kv * gab * u;
                }
            }
        }
        for (int c = 0; c < n_components; ++c) {
            if (total == 1) {
                out.at(c, e) = (n_a[c] - (n_val[c] / d_val) * d_a) / d_val;
            } else {
                out.at(c, e) = n_ab[c] / d_val -
                               (n_a[c] * d_b + n_b[c] * d_a + n_val[c] * d_ab) / (d_val * d_val) +
                               2.0 * n_val[c] * d_a * d_b / (d_val * d_val * d_val);
            }
        }
    }
    return out;
}

std::vector<double> KernelInterpolant::restrict_to_obs(const Field& f) const {
    if (identity_) {
        require(same_grid(f.grid, eval_grid_),
                "grid-mismatch: field is not on the interpolant's evaluation grid");
        return f.values;
    }
    return restriction_->apply(f);
}

Field KernelInterpolant::smooth(const Field& f) const {
    if (identity_) return f;
    return apply(restrict_to_obs(f), f.n_components);
}

double KernelInterpolant::row_sum_defect() const {
    double worst = 0.0;
    const int ne = static_cast<int>(row_ptr_.size()) - 1;
    for (int e = 0; e < ne; ++e) {
        double s = 0.0;
        for (std::int64_t q = row_ptr_[e]; q < row_ptr_[e + 1]; ++q) s += weight_[q];
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

}  // namespace nudgeda
