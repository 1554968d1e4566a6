#include "nudgeda/reference.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "nudgeda/io.hpp"
#include "nudgeda/rng.hpp"

namespace nudgeda {

Field SnapshotSeries::interp_at(double t) const {
    require(!times.empty(), "empty-buffer: no snapshots stored");
    const TimeStencil st = time_interp_stencil(times, t);
    Field out = fields[st.idx[0]];
    scale(out, st.w[0]);
    for (int r = 1; r < st.m; ++r) axpy(out, st.w[r], fields[st.idx[r]]);
    return out;
}

namespace {

// Sorted event times in (0, T]; stepping lands on each exactly.
std::vector<double> collect_events(const std::vector<double>& extra, double T) {
    std::vector<double> ev;
    for (double t : extra)
        if (t > 1e-14 && t <= T + 1e-14) ev.push_back(std::min(t, T));
    ev.push_back(T);
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             ev.end());
    return ev;
}

double min_spacing(const AnyGrid& g) {
    if (const auto* g1 = std::get_if<Grid1D>(&g)) return g1->dx;
    const auto& g2 = std::get<Grid2D>(g);
    return std::min(g2.x_axis.dx, g2.y_axis.dx);
}

// -(d/dx P_x + d/dy P_y) evaluated pointwise from the force flux.
Field true_force(const SystemSpec& spec, const Field& state) {
    auto flux_field = [&](const NodeFlux& fl) {
        Field p(state.grid, state.n_components);
        std::vector<double> s(state.n_components), v(state.n_components);
        for (int j = 0; j < state.n_nodes(); ++j) {
            for (int c = 0; c < state.n_components; ++c) s[c] = state.at(c, j);
            fl(s, v);
            for (int c = 0; c < state.n_components; ++c) p.at(c, j) = v[c];
        }
        return p;
    };
    if (grid_dim(state.grid) == 1) {
        Field g = central_derivative(flux_field(spec.force_flux_x));
        scale(g, -1.0);
        return g;
    }
    const auto& g2 = std::get<Grid2D>(state.grid);
    const int nx = g2.x_axis.n, ny = g2.y_axis.n;
    Field px = flux_field(spec.force_flux_x);
    Field py = flux_field(spec.force_flux_y);
    Field out(state.grid, state.n_components);
    // dimension-by-dimension 4th-order central differences (periodic)
    for (int c = 0; c < state.n_components; ++c) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const auto id = [&](int i, int j) {
                    return g2.index((i % nx + nx) % nx, (j % ny + ny) % ny);
                };
                const double dx_term = (-px.at(c, id(ix + 2, iy)) + 8.0 * px.at(c, id(ix + 1, iy)) -
                                        8.0 * px.at(c, id(ix - 1, iy)) + px.at(c, id(ix - 2, iy))) /
                                       (12.0 * g2.x_axis.dx);
                const double dy_term = (-py.at(c, id(ix, iy + 2)) + 8.0 * py.at(c, id(ix, iy + 1)) -
                                        8.0 * py.at(c, id(ix, iy - 1)) + py.at(c, id(ix, iy - 2))) /
                                       (12.0 * g2.y_axis.dx);
                out.at(c, g2.index(ix, iy)) = -(dx_term + dy_term);
            }
    }
    return out;
}

}  // namespace

Trajectory solve_reference(const SystemSpec& spec, const Field& initial, double T, double cfl) {
    ReferenceOptions opt;
    opt.cfl = cfl;
    return solve_reference(spec, initial, T, opt);
}

Trajectory solve_reference(const SystemSpec& spec, const Field& initial, double T,
                           const ReferenceOptions& opt) {
    require(T > 0.0, "invalid-range: final time must be positive");
    require(opt.cfl > 0.0 && opt.cfl <= 1.0, "invalid-range: cfl must lie in (0, 1]");
    require(initial.all_finite(), "nonfinite-state: initial data must be finite");

    Trajectory traj;
    traj.grid = opt.store_grid ? *opt.store_grid : initial.grid;

    std::optional<RestrictionMap> store_map;
    if (opt.store_grid && !same_grid(*opt.store_grid, initial.grid))
        store_map.emplace(initial.grid, *opt.store_grid);
    std::optional<RestrictionMap> obs_map;
    if (opt.obs_grid) {
        obs_map.emplace(initial.grid, *opt.obs_grid);
        traj.obs_track =
            ObsTrack{*opt.obs_grid, initial.n_components, {}, {}};
    }

    const NodeFlux fx = spec.combined_flux_x();
    const NodeFlux fy = spec.dim == 2 ? spec.combined_flux_y() : NodeFlux{};
    const bool with_force = spec.has_force_flux() && opt.store_force;

    auto rhs = [&](double t, const Field& u) {
        Field d = (spec.dim == 1)
                      ? weno5_flux_derivative(u, fx, spec.wavespeed_bound(u), opt.boundary, opt.weno)
                      : weno5_flux_divergence(u, fx, fy, spec.wavespeed_bound(u), opt.boundary,
                                              opt.weno);
        scale(d, -1.0);
        if (spec.has_source()) axpy(d, 1.0, spec.source_field(u, t));
        return d;
    };

    auto store = [&](double t, const Field& u) {
        Field snap = store_map ? store_map->apply_as_field(u) : u;
        if (with_force) {
            Field g = true_force(spec, u);
            traj.forces.push(t, store_map ? store_map->apply_as_field(g) : std::move(g));
        }
        traj.states.push(t, std::move(snap));
    };
    auto record_obs = [&](double t, const Field& u) {
        if (!obs_map) return;
        traj.obs_track->times.push_back(t);
        traj.obs_track->values.push_back(obs_map->apply(u));
    };

    Field u = initial;
    double t = 0.0;
    store(0.0, u);
    record_obs(0.0, u);

    const std::vector<double> events = collect_events(opt.store_times, T);
    std::size_t next_event = 0;
    const double dx = min_spacing(initial.grid);
    std::uint64_t step = 0;

    while (t < T - 1e-13) {
        double dt = opt.fixed_dt ? *opt.fixed_dt : opt.cfl * dx / spec.wavespeed_bound(u);
        while (next_event < events.size() && events[next_event] <= t + 1e-13) ++next_event;
        bool on_event = false;
        // approach events in at most two even steps; no sliver landing steps
        if (next_event < events.size()) {
            const double remaining = events[next_event] - t;
            if (remaining <= dt * (1.0 + 1e-9)) {
                dt = remaining;
                on_event = true;
            } else if (remaining <= 2.0 * dt) {
                dt = 0.5 * remaining;
            }
        }
        u = ssprk3_step(u, rhs, t, dt);
        require(u.all_finite(), "nonfinite-state: reference solve blew up");
        t = on_event ? events[next_event] : t + dt;
        ++step;
        record_obs(t, u);
        const bool due_stride = opt.store_stride > 0 && step % opt.store_stride == 0;
        if (due_stride || on_event) store(t, u);
    }
    if (traj.states.times.back() < T - 1e-13) store(T, u);
    traj.t_final = T;
    traj.n_steps = step;
    return traj;
}

Trajectory solve_rte_kinetic(const std::function<double(double, double)>& f0, double sigma_a,
                             double sigma_s, const Grid1D& grid, int n_velocity, double T,
                             double dt_ratio, int n_moment_orders) {
    require(n_velocity >= 4, "invalid-range: need at least 4 velocity nodes");
    require(sigma_a >= 0.0 && sigma_s >= 0.0, "invalid-range: opacities must be nonnegative");
    require(dt_ratio > 0.0, "invalid-range: dt ratio must be positive");

    const Quadrature q = gauss_legendre(n_velocity);
    // Legendre values P_k(v_i) for moment extraction.
    std::vector<std::vector<double>> pk(n_moment_orders, std::vector<double>(n_velocity));
    for (int k = 0; k < n_moment_orders; ++k)
        for (int i = 0; i < n_velocity; ++i) pk[k][i] = legendre_eval(k, q.nodes[i]);

    Field f(AnyGrid{grid}, n_velocity);
    for (int i = 0; i < n_velocity; ++i)
        for (int j = 0; j < grid.n; ++j) f.at(i, j) = f0(grid.node(j), q.nodes[i]);

    std::vector<double> alphas(n_velocity);
    for (int i = 0; i < n_velocity; ++i) alphas[i] = std::abs(q.nodes[i]);
    const NodeFlux transport = [nodes = q.nodes](std::span<const double> s, std::span<double> out) {
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = nodes[i] * s[i];
    };
    const BoundaryKind bc = BoundaryKind::periodic();

    auto rhs = [&](double, const Field& u) {
        Field d = weno5_flux_derivative(u, transport, alphas, bc);
        scale(d, -1.0);
        for (int j = 0; j < grid.n; ++j) {
            double m0 = 0.0;
            for (int i = 0; i < n_velocity; ++i) m0 += q.weights[i] * u.at(i, j);
            m0 *= 0.5;
            for (int i = 0; i < n_velocity; ++i)
                d.at(i, j) += sigma_s * (m0 - u.at(i, j)) - sigma_a * u.at(i, j);
        }
        return d;
    };

    Trajectory traj;
    traj.grid = AnyGrid{grid};
    auto store_moments = [&](double t, const Field& u) {
        Field m(AnyGrid{grid}, n_moment_orders);
        for (int k = 0; k < n_moment_orders; ++k)
            for (int j = 0; j < grid.n; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n_velocity; ++i) acc += q.weights[i] * pk[k][i] * u.at(i, j);
                m.at(k, j) = 0.5 * acc;
            }
        traj.moments.push(t, std::move(m));
    };

    traj.states.push(0.0, f);
    store_moments(0.0, f);
    double t = 0.0;
    std::uint64_t step = 0;
    while (t < T - 1e-13) {
        double dt = dt_ratio * grid.dx;
        const double remaining = T - t;
        if (remaining <= dt * (1.0 + 1e-9))
            dt = remaining;
        else if (remaining <= 2.0 * dt)
            dt = 0.5 * remaining;
        f = ssprk3_step(f, rhs, t, dt);
        require(f.all_finite(), "nonfinite-state: kinetic solve blew up");
        t += dt;
        ++step;
        store_moments(t, f);
    }
    if (step > 0) traj.states.push(t, f);
    traj.t_final = T;
    traj.n_steps = step;
    return traj;
}

std::vector<double> ObservationSeries::at(double t) const {
    const TimeStencil st = time_interp_stencil(times, t);
    std::vector<double> out(values[st.idx[0]].size(), 0.0);
    for (int r = 0; r < st.m; ++r) {
        const auto& row = values[st.idx[r]];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += st.w[r] * row[i];
    }
    return out;
}

ObservationSeries observe(const Trajectory& traj, const AnyGrid& obs_grid,
                          const std::vector<int>& components, double noise_eps,
                          std::uint64_t seed, ObserveWhat what) {
    ObservationSeries series;
    series.obs_grid = obs_grid;
    series.components = components;
    series.noise_eps = noise_eps;
    series.seed = seed;
    const int n_ob = grid_node_count(obs_grid);
    const int n_sel = static_cast<int>(components.size());

    const SnapshotSeries& src = (what == ObserveWhat::Moments) ? traj.moments : traj.states;
    const bool use_track = what == ObserveWhat::States && traj.obs_track &&
                           same_grid(traj.obs_track->grid, obs_grid);

    if (use_track) {
        series.times = traj.obs_track->times;
        const int nc = traj.obs_track->n_components;
        for (const auto& row : traj.obs_track->values) {
            std::vector<double> sel(static_cast<std::size_t>(n_sel) * n_ob);
            for (int c = 0; c < n_sel; ++c) {
                require(components[c] >= 0 && components[c] < nc,
                        "invalid-range: observed component out of range");
                std::copy_n(row.begin() + static_cast<std::size_t>(components[c]) * n_ob, n_ob,
                            sel.begin() + static_cast<std::size_t>(c) * n_ob);
            }
            series.values.push_back(std::move(sel));
        }
    } else {
        require(!src.empty(), "empty-buffer: trajectory holds no snapshots of the requested kind");
        RestrictionMap rmap(src.fields.front().grid, obs_grid);
        series.times = src.times;
        for (const auto& f : src.fields) {
            require(f.n_components > *std::max_element(components.begin(), components.end()),
                    "invalid-range: observed component out of range");
            const auto all = rmap.apply(f);
            std::vector<double> sel(static_cast<std::size_t>(n_sel) * n_ob);
            for (int c = 0; c < n_sel; ++c)
                std::copy_n(all.begin() + static_cast<std::size_t>(components[c]) * n_ob, n_ob,
                            sel.begin() + static_cast<std::size_t>(c) * n_ob);
            series.values.push_back(std::move(sel));
        }
    }

    if (noise_eps != 0.0) {
        const CounterRng rng(seed);
        for (std::size_t ti = 0; ti < series.values.size(); ++ti) {
            auto& row = series.values[ti];
            for (std::size_t i = 0; i < row.size(); ++i)
                row[i] += noise_eps * rng.normal(ti * row.size() + i);
        }
    }
    return series;
}

std::vector<std::string> export_trajectory(const Trajectory& traj, const std::string& dir,
                                           const std::string& prefix,
                                           const std::map<std::string, double>& parameters,
                                           std::uint64_t seed) {
    require(!traj.states.empty(), "empty-buffer: trajectory holds no snapshots");
    require(grid_dim(traj.grid) == 1, "grid-mismatch: columnar export is for 1D trajectories");
    const auto& g = std::get<Grid1D>(traj.grid);
    const int nc = traj.states.fields.front().n_components;
    const std::size_t nt = traj.states.times.size();

    std::vector<std::string> written;
    std::vector<double> x(g.n);
    for (int j = 0; j < g.n; ++j) x[j] = g.node(j);
    for (int c = 0; c < nc; ++c) {
        std::vector<std::string> names = {"x"};
        std::vector<std::vector<double>> cols = {x};
        for (std::size_t i = 0; i < nt; ++i) {
            names.push_back("t" + fmt17(traj.states.times[i]));
            auto comp = traj.states.fields[i].comp(c);
            cols.emplace_back(comp.begin(), comp.end());
        }
        const std::string rel = prefix + "_c" + std::to_string(c) + ".csv";
        write_columns(dir + "/" + rel, names, cols);
        written.push_back(rel);
    }

    nlohmann::json manifest;
    manifest["grid"] = {{"a", g.a},
                        {"b", g.b},
                        {"n", g.n},
                        {"layout", g.periodic() ? "periodic-cells" : "endpoint-inclusive"}};
    manifest["times"] = traj.states.times;
    manifest["parameters"] = parameters;
    manifest["seed"] = seed;
    manifest["n_components"] = nc;
    manifest["files"] = written;
    const std::string man_rel = prefix + "_manifest.json";
    write_text_atomic(dir + "/" + man_rel, manifest.dump(2) + "\n");
    written.push_back(man_rel);
    return written;
}

}  // namespace nudgeda
