#include "nudgeda/models.hpp"

#include <cmath>

namespace nudgeda {

NodeFlux SystemSpec::combined_flux_x() const {
    if (!force_flux_x) return flux_x;
    return [f = flux_x, p = force_flux_x](std::span<const double> s, std::span<double> out) {
        f(s, out);
        std::vector<double> extra(out.size());
        p(s, extra);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += extra[c];
    };
}

NodeFlux SystemSpec::combined_flux_y() const {
    if (!force_flux_y) return flux_y;
    return [f = flux_y, p = force_flux_y](std::span<const double> s, std::span<double> out) {
        f(s, out);
        std::vector<double> extra(out.size());
        p(s, extra);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += extra[c];
    };
}

Field SystemSpec::source_field(const Field& state, double t) const {
    Field out(state.grid, state.n_components);
    if (!source) return out;
    const int n = state.n_nodes();
    std::vector<double> s(state.n_components), v(state.n_components);
    if (grid_dim(state.grid) == 1) {
        const auto& g = std::get<Grid1D>(state.grid);
        for (int j = 0; j < n; ++j) {
            for (int c = 0; c < state.n_components; ++c) s[c] = state.at(c, j);
            source(s, g.node(j), 0.0, t, v);
            for (int c = 0; c < state.n_components; ++c) out.at(c, j) = v[c];
        }
    } else {
        const auto& g = std::get<Grid2D>(state.grid);
        for (int iy = 0; iy < g.y_axis.n; ++iy)
            for (int ix = 0; ix < g.x_axis.n; ++ix) {
                const int j = g.index(ix, iy);
                for (int c = 0; c < state.n_components; ++c) s[c] = state.at(c, j);
                source(s, g.x_axis.node(ix), g.y_axis.node(iy), t, v);
                for (int c = 0; c < state.n_components; ++c) out.at(c, j) = v[c];
            }
    }
    return out;
}

SystemSpec scalar_system() {
    SystemSpec spec;
    spec.name = "scalar";
    spec.n_components = 1;
    spec.dim = 1;
    spec.flux_x = [](std::span<const double> s, std::span<double> out) { out[0] = s[0]; };
    spec.force_flux_x = [](std::span<const double> s, std::span<double> out) {
        out[0] = s[0] * s[0] / 6.0;
    };
    spec.source = [](std::span<const double> s, double, double, double, std::span<double> out) {
        out[0] = 0.2 * std::sqrt(1.0 + s[0] * s[0]);
    };
    spec.wavespeed_bound = [](const Field& f) {
        double m = 0.0;
        for (double u : f.comp(0)) m = std::max(m, std::abs(1.0 + u / 3.0));
        return m;
    };
    return spec;
}

SystemSpec euler1d_system(double kappa, double gamma) {
    require(kappa > 0.0, "invalid-range: kappa must be positive");
    require(gamma > 1.0, "invalid-range: gamma must exceed 1");
    SystemSpec spec;
    spec.name = "euler1d";
    spec.n_components = 2;
    spec.dim = 1;
    spec.flux_x = [](std::span<const double> s, std::span<double> out) {
        out[0] = s[1];
        out[1] = s[1] * s[1] / s[0];
    };
    spec.force_flux_x = [kappa, gamma](std::span<const double> s, std::span<double> out) {
        out[0] = 0.0;
        out[1] = kappa * std::pow(s[0], gamma);
    };
    spec.wavespeed_bound = [kappa, gamma](const Field& f) {
        double m = 0.0;
        auto rho = f.comp(0);
        auto mom = f.comp(1);
        for (int j = 0; j < f.n_nodes(); ++j) {
            require(rho[j] > 0.0, "nonphysical-state: nonpositive density in wavespeed bound");
            const double u = mom[j] / rho[j];
            m = std::max(m, std::abs(u) + std::sqrt(kappa * gamma * std::pow(rho[j], gamma - 1.0)));
        }
        return m;
    };
    return spec;
}

SystemSpec euler2d_system(double kappa, double gamma) {
    require(kappa > 0.0, "invalid-range: kappa must be positive");
    require(gamma > 1.0, "invalid-range: gamma must exceed 1");
    SystemSpec spec;
    spec.name = "euler2d";
    spec.n_components = 3;
    spec.dim = 2;
    spec.flux_x = [](std::span<const double> s, std::span<double> out) {
        const double u = s[1] / s[0];
        out[0] = s[1];
        out[1] = s[1] * u;
        out[2] = s[2] * u;
    };
    spec.flux_y = [](std::span<const double> s, std::span<double> out) {
        const double v = s[2] / s[0];
        out[0] = s[2];
        out[1] = s[1] * v;
        out[2] = s[2] * v;
    };
    spec.force_flux_x = [kappa, gamma](std::span<const double> s, std::span<double> out) {
        out[0] = 0.0;
        out[1] = kappa * std::pow(s[0], gamma);
        out[2] = 0.0;
    };
    spec.force_flux_y = [kappa, gamma](std::span<const double> s, std::span<double> out) {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = kappa * std::pow(s[0], gamma);
    };
    spec.wavespeed_bound = [kappa, gamma](const Field& f) {
        double m = 0.0;
        auto rho = f.comp(0);
        auto mx = f.comp(1);
        auto my = f.comp(2);
        for (int j = 0; j < f.n_nodes(); ++j) {
            require(rho[j] > 0.0, "nonphysical-state: nonpositive density in wavespeed bound");
            const double c = std::sqrt(kappa * gamma * std::pow(rho[j], gamma - 1.0));
            const double u = std::abs(mx[j] / rho[j]);
            const double v = std::abs(my[j] / rho[j]);
            m = std::max(m, std::max(u, v) + c);
        }
        return m;
    };
    return spec;
}

MomentMatrices rte_moment_matrices(int N, double sigma_a, double sigma_s) {
    require(N >= 1, "invalid-range: moment order must be at least 1");
    require(sigma_a >= 0.0 && sigma_s >= 0.0, "invalid-range: opacities must be nonnegative");
    MomentMatrices m;
    m.N = N;
    m.sigma_a = sigma_a;
    m.sigma_s = sigma_s;
    m.A.assign(static_cast<std::size_t>(N + 1) * (N + 1), 0.0);
    for (int k = 0; k <= N; ++k) {
        if (k > 0) m.A[static_cast<std::size_t>(k) * (N + 1) + (k - 1)] = k / (2.0 * k + 1.0);
        if (k < N) m.A[static_cast<std::size_t>(k) * (N + 1) + (k + 1)] = (k + 1.0) / (2.0 * k + 1.0);
    }
    m.S_diag.assign(N + 1, -(sigma_s + sigma_a));
    m.S_diag[0] = -sigma_a;
    return m;
}

double wavespeed_bound_moment(const MomentMatrices&) { return 1.0; }

SystemSpec moment_system(const MomentMatrices& m) {
    SystemSpec spec;
    spec.name = "moments-N" + std::to_string(m.N);
    spec.n_components = m.N + 1;
    spec.dim = 1;
    spec.flux_x = [m](std::span<const double> s, std::span<double> out) {
        const int n = m.N + 1;
        for (int r = 0; r < n; ++r) {
            double acc = 0.0;
            if (r > 0) acc += m.a(r, r - 1) * s[r - 1];
            if (r < n - 1) acc += m.a(r, r + 1) * s[r + 1];
            out[r] = acc;
        }
    };
    spec.source = [m](std::span<const double> s, double, double, double, std::span<double> out) {
        for (int r = 0; r <= m.N; ++r) out[r] = m.S_diag[r] * s[r];
    };
    const double alpha = wavespeed_bound_moment(m);
    spec.wavespeed_bound = [alpha](const Field&) { return alpha; };
    return spec;
}

}  // namespace nudgeda
