#include "nudgeda/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace nudgeda {

namespace {

// Fifth-order WENO reconstruction of the right-face value from five cell
// values (a,b,c,d,e) = f_{i-2..i+2}; linear weights 1/10, 3/5, 3/10.
inline double weno5_face(double a, double b, double c, double d, double e, double eps) {
    const double q0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    const double q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    const double q2 = (2.0 * c + 5.0 * d - e) / 6.0;
    const double b0 = (13.0 / 12.0) * (a - 2.0 * b + c) * (a - 2.0 * b + c) +
                      0.25 * (a - 4.0 * b + 3.0 * c) * (a - 4.0 * b + 3.0 * c);
    const double b1 =
        (13.0 / 12.0) * (b - 2.0 * c + d) * (b - 2.0 * c + d) + 0.25 * (b - d) * (b - d);
    const double b2 = (13.0 / 12.0) * (c - 2.0 * d + e) * (c - 2.0 * d + e) +
                      0.25 * (3.0 * c - 4.0 * d + e) * (3.0 * c - 4.0 * d + e);
    const double w0 = 0.1 / ((eps + b0) * (eps + b0));
    const double w1 = 0.6 / ((eps + b1) * (eps + b1));
    const double w2 = 0.3 / ((eps + b2) * (eps + b2));
    return (w0 * q0 + w1 * q1 + w2 * q2) / (w0 + w1 + w2);
}

// One 1D WENO5 sweep. u_line holds ncomp arrays of n nodal values; the
// result (d/dx of the numerical flux) is written into d_line.
void weno5_sweep(const std::vector<std::vector<double>>& u_line, const NodeFlux& flux,
                 std::span<const double> alpha, const BoundaryKind& bc, GridLayout layout,
                 double dx, double eps, std::vector<std::vector<double>>& d_line) {
    const int ncomp = static_cast<int>(u_line.size());
    const int n = static_cast<int>(u_line[0].size());
    require(n >= 7, "grid-too-small: WENO5 needs at least 7 nodes per line");
    constexpr int g = 3;  // ghost nodes per side
    const int next = n + 2 * g;

    // Ghost-extend the state, then evaluate flux and split on extension.
    std::vector<std::vector<double>> uext(ncomp), fp(ncomp), fm(ncomp);
    for (int c = 0; c < ncomp; ++c) {
        uext[c] = extend_ghost(u_line[c], bc, g, layout);
        fp[c].resize(next);
        fm[c].resize(next);
    }
    std::vector<double> state(ncomp), fx(ncomp);
    for (int p = 0; p < next; ++p) {
        for (int c = 0; c < ncomp; ++c) state[c] = uext[c][p];
        flux(state, fx);
        for (int c = 0; c < ncomp; ++c) {
            const double a = alpha.size() == 1 ? alpha[0] : alpha[c];
            fp[c][p] = 0.5 * (fx[c] + a * state[c]);
            fm[c][p] = 0.5 * (fx[c] - a * state[c]);
        }
    }

    // Interface values at i+1/2 for i = -1..n-1 (ext position p = i+g), then
    // the conservative difference.
    for (int c = 0; c < ncomp; ++c) {
        std::vector<double> fhat(n + 1);
        const auto& P = fp[c];
        const auto& M = fm[c];
        for (int i = -1; i < n; ++i) {
            const int p = i + g;
            const double plus = weno5_face(P[p - 2], P[p - 1], P[p], P[p + 1], P[p + 2], eps);
            const double minus = weno5_face(M[p + 3], M[p + 2], M[p + 1], M[p], M[p - 1], eps);
            fhat[i + 1] = plus + minus;
        }
        for (int j = 0; j < n; ++j) d_line[c][j] = (fhat[j + 1] - fhat[j]) / dx;
    }
}

}  // namespace

Field weno5_flux_derivative(const Field& u, const NodeFlux& flux, std::span<const double> alpha,
                            const BoundaryKind& boundary, const WenoConfig& cfg) {
    require(grid_dim(u.grid) == 1, "grid-mismatch: 1D derivative of a 2D field");
    const auto& g = std::get<Grid1D>(u.grid);
    const int nc = u.n_components;
    std::vector<std::vector<double>> lines(nc), dlines(nc);
    for (int c = 0; c < nc; ++c) {
        lines[c].assign(u.comp(c).begin(), u.comp(c).end());
        dlines[c].resize(g.n);
    }
    weno5_sweep(lines, flux, alpha, boundary, g.layout, g.dx, cfg.epsilon, dlines);
    Field out(u.grid, nc);
    for (int c = 0; c < nc; ++c) std::copy(dlines[c].begin(), dlines[c].end(), out.comp(c).begin());
    return out;
}

Field weno5_flux_derivative(const Field& u, const NodeFlux& flux, double alpha,
                            const BoundaryKind& boundary, const WenoConfig& cfg) {
    return weno5_flux_derivative(u, flux, std::span<const double>(&alpha, 1), boundary, cfg);
}

Field weno5_flux_divergence(const Field& u, const NodeFlux& flux_x, const NodeFlux& flux_y,
                            double alpha, const BoundaryKind& boundary, const WenoConfig& cfg) {
    require(grid_dim(u.grid) == 2, "grid-mismatch: divergence sweep expects a 2D field");
    const auto& g = std::get<Grid2D>(u.grid);
    const int nc = u.n_components;
    const int nx = g.x_axis.n, ny = g.y_axis.n;
    Field out(u.grid, nc);
    std::span<const double> a(&alpha, 1);

    std::vector<std::vector<double>> lines(nc), dlines(nc);
    for (int c = 0; c < nc; ++c) {
        lines[c].resize(nx);
        dlines[c].resize(nx);
    }
    for (int iy = 0; iy < ny; ++iy) {
        for (int c = 0; c < nc; ++c)
            for (int ix = 0; ix < nx; ++ix) lines[c][ix] = u.at(c, g.index(ix, iy));
        weno5_sweep(lines, flux_x, a, boundary, g.x_axis.layout, g.x_axis.dx, cfg.epsilon, dlines);
        for (int c = 0; c < nc; ++c)
            for (int ix = 0; ix < nx; ++ix) out.at(c, g.index(ix, iy)) += dlines[c][ix];
    }
    for (int c = 0; c < nc; ++c) {
        lines[c].resize(ny);
        dlines[c].resize(ny);
    }
    for (int ix = 0; ix < nx; ++ix) {
        for (int c = 0; c < nc; ++c)
            for (int iy = 0; iy < ny; ++iy) lines[c][iy] = u.at(c, g.index(ix, iy));
        weno5_sweep(lines, flux_y, a, boundary, g.y_axis.layout, g.y_axis.dx, cfg.epsilon, dlines);
        for (int c = 0; c < nc; ++c)
            for (int iy = 0; iy < ny; ++iy) out.at(c, g.index(ix, iy)) += dlines[c][iy];
    }
    return out;
}

Field central_derivative(const Field& u) {
    require(grid_dim(u.grid) == 1, "grid-mismatch: central derivative is 1D");
    const auto& g = std::get<Grid1D>(u.grid);
    require(g.n >= 5, "grid-too-small: 4th-order central differences need 5 nodes");
    Field out(u.grid, u.n_components);
    const double inv12h = 1.0 / (12.0 * g.dx);
    for (int c = 0; c < u.n_components; ++c) {
        auto v = u.comp(c);
        auto d = out.comp(c);
        if (g.periodic()) {
            const int n = g.n;
            for (int j = 0; j < n; ++j) {
                const int jm2 = (j - 2 + n) % n, jm1 = (j - 1 + n) % n;
                const int jp1 = (j + 1) % n, jp2 = (j + 2) % n;
                d[j] = (-v[jp2] + 8.0 * v[jp1] - 8.0 * v[jm1] + v[jm2]) * inv12h;
            }
        } else {
            const int n = g.n;
            d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) * inv12h;
            d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) * inv12h;
            for (int j = 2; j < n - 2; ++j)
                d[j] = (-v[j + 2] + 8.0 * v[j + 1] - 8.0 * v[j - 1] + v[j - 2]) * inv12h;
            d[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] -
                        v[n - 5]) *
                       inv12h;
            d[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] +
                        3.0 * v[n - 5]) *
                       inv12h;
        }
    }
    return out;
}

Field ssprk3_step(const Field& state, const RhsFn& rhs, double t, double dt) {
    require(dt > 0.0, "invalid-range: time step must be positive");
    Field u1 = state;
    axpy(u1, dt, rhs(t, state));
    Field u2 = lincomb(0.75, state, 0.25, u1);
    axpy(u2, 0.25 * dt, rhs(t + dt, u1));
    Field u3 = lincomb(1.0 / 3.0, state, 2.0 / 3.0, u2);
    axpy(u3, 2.0 / 3.0 * dt, rhs(t + 0.5 * dt, u2));
    require(u3.all_finite(), "nonfinite-state: SSPRK3 stage produced NaN/Inf (CFL violation?)");
    return u3;
}

Field bdf_time_derivative(const SnapshotBuffer& buf) {
    require(buf.size() >= 1, "empty-buffer: time derivative needs at least one snapshot");
    const int s = buf.size();
    if (s == 1) {
        Field out = buf.field(0);
        scale(out, 0.0);
        return out;
    }
    if (s == 2) {
        const double h = buf.time(1) - buf.time(0);
        return lincomb(1.0 / h, buf.field(1), -1.0 / h, buf.field(0));
    }
    // Nonuniform-step BDF2 on the last three snapshots: derivative of the
    // interpolating parabola at the latest time.
    const int i = s - 1;
    const double h1 = buf.time(i) - buf.time(i - 1);
    const double h2 = buf.time(i - 1) - buf.time(i - 2);
    const double ca = (2.0 * h1 + h2) / (h1 * (h1 + h2));
    const double cb = -(h1 + h2) / (h1 * h2);
    const double cc = h1 / (h2 * (h1 + h2));
    Field out = lincomb(ca, buf.field(i), cb, buf.field(i - 1));
    axpy(out, cc, buf.field(i - 2));
    return out;
}

Quadrature gauss_legendre(int n) {
    require(n >= 2 && n <= 64, "unsupported-n: Gauss-Legendre order must be in [2, 64]");
    Quadrature q;
    q.nodes.assign(n, 0.0);
    q.weights.assign(n, 0.0);
    // Newton iteration from Chebyshev guesses for the lower half; mirror the
    // rest so the rule is antisymmetric to machine precision.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = -std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pn = 0.0, dpn = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < n; ++k) {
                const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            pn = p1;
            dpn = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = pn / dpn;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        // refresh derivative at the converged node
        {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < n; ++k) {
                const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dpn = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dpn * dpn);
        q.nodes[i] = x;
        q.weights[i] = w;
        q.nodes[n - 1 - i] = -x;
        q.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) q.nodes[n / 2] = 0.0;
    return q;
}

double legendre_eval(int k, double v) {
    require(k >= 0, "invalid-range: Legendre degree must be nonnegative");
    if (k == 0) return 1.0;
    double p0 = 1.0, p1 = v;
    for (int j = 1; j < k; ++j) {
        const double p2 = ((2.0 * j + 1.0) * v * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

Field antiderivative_corrected(const Field& gradient, double left_value, double right_value) {
    require(grid_dim(gradient.grid) == 1, "grid-mismatch: antidifferentiation is 1D");
    const auto& g = std::get<Grid1D>(gradient.grid);
    require(g.layout == GridLayout::EndpointInclusive,
            "grid-mismatch: antidifferentiation needs an endpoint-inclusive grid");
    Field out(gradient.grid, gradient.n_components);
    const int n = g.n;
    const double L = (n - 1) * g.dx;
    for (int c = 0; c < gradient.n_components; ++c) {
        auto gr = gradient.comp(c);
        auto o = out.comp(c);
        std::vector<double> cum(n, 0.0);
        for (int j = 1; j < n; ++j) cum[j] = cum[j - 1] + 0.5 * g.dx * (gr[j - 1] + gr[j]);
        const double corr = (right_value - left_value - cum[n - 1]) / L;
        for (int j = 0; j < n; ++j) o[j] = left_value + cum[j] + corr * (j * g.dx);
    }
    return out;
}

TimeStencil time_interp_stencil(std::span<const double> times, double t) {
    const int m = static_cast<int>(times.size());
    require(m >= 1, "empty-buffer: no sample times");
    TimeStencil st{};
    if (m == 1) {
        st.m = 1;
        st.idx[0] = 0;
        st.w[0] = 1.0;
        return st;
    }
    const int width = std::min(m, 4);
    // locate the interval containing t, then center the stencil on it
    int hi = static_cast<int>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
    int base = std::clamp(hi - 2, 0, m - width);
    st.m = width;
    for (int r = 0; r < width; ++r) {
        st.idx[r] = base + r;
        double w = 1.0;
        for (int s = 0; s < width; ++s) {
            if (s == r) continue;
            w *= (t - times[base + s]) / (times[base + r] - times[base + s]);
        }
        st.w[r] = w;
    }
    return st;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "invalid-range: slope fit needs >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace nudgeda
