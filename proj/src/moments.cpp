#include "nudgeda/moments.hpp"

#include <cmath>

namespace nudgeda {

namespace {

// Endpoint-inclusive companion of a periodic-cells grid: same spacing, one
// extra node so x = b is stored.
Grid1D closed_companion(const Grid1D& periodic) {
    require(periodic.periodic(), "grid-mismatch: expected a periodic-cells grid");
    return make_uniform_grid(periodic.a, periodic.b, periodic.n + 1,
                             GridLayout::EndpointInclusive);
}

// Duplicate the periodic wrap node at the right end.
Field to_closed(const Field& f, const Grid1D& closed) {
    const auto& g = std::get<Grid1D>(f.grid);
    Field out(AnyGrid{closed}, f.n_components);
    for (int c = 0; c < f.n_components; ++c) {
        auto src = f.comp(c);
        auto dst = out.comp(c);
        for (int j = 0; j < g.n; ++j) dst[j] = src[j];
        dst[g.n] = src[0];
    }
    return out;
}

// Drop the duplicated endpoint.
Field to_periodic(const Field& f, const Grid1D& periodic) {
    Field out(AnyGrid{periodic}, f.n_components);
    for (int c = 0; c < f.n_components; ++c) {
        auto src = f.comp(c);
        auto dst = out.comp(c);
        for (int j = 0; j < periodic.n; ++j) dst[j] = src[j];
    }
    return out;
}

Field single_component(const Field& f, int c) {
    Field out(f.grid, 1);
    auto src = f.comp(c);
    std::copy(src.begin(), src.end(), out.comp(0).begin());
    return out;
}

}  // namespace

Field extract_gradient(const Field& g_tilde, int n) {
    require(g_tilde.n_components == n + 1,
            "shape-mismatch: force field must carry n+1 components");
    Field out = single_component(g_tilde, n);
    scale(out, -(2.0 * n + 1.0) / (n + 1.0));
    return out;
}

Field integrate_moment(const Field& gradient, double left, double right) {
    return antiderivative_corrected(gradient, left, right);
}

LowMomentRun recover_low_moments(const RecoveryConfig& cfg, const ObservationSeries& obs,
                                 double T) {
    require(cfg.n_observed >= 0 && cfg.n_observed <= cfg.N_target,
            "invalid-range: need 0 <= n_observed <= N_target");
    const int n = cfg.n_observed;
    const MomentMatrices mats = rte_moment_matrices(n, cfg.sigma_a, cfg.sigma_s);
    const SystemSpec spec = moment_system(mats);

    NudgeConfig ncfg;
    ncfg.mu = cfg.mu;
    ncfg.cfl = cfg.cfl;
    ncfg.interp = KernelInterpolant::build(AnyGrid{cfg.obs_grid}, AnyGrid{cfg.comp_grid},
                                           cfg.sigma_factor * cfg.obs_grid.dx,
                                           BoundaryKind::periodic(), cfg.m_ghost);
    ncfg.history_stride = cfg.history_stride;
    // Uniform steps dividing T exactly: the cascade differences this
    // trajectory in time, and a dt change would inject amplified jumps.
    const double dt_nominal =
        std::min(cfg.cfl * cfg.comp_grid.dx / 1.0, ncfg.relax_safety * 2.0 / cfg.mu);
    ncfg.fixed_dt = T / std::ceil(T / dt_nominal - 1e-12);

    Field V0(AnyGrid{cfg.comp_grid}, n + 1);
    for (int j = 0; j < cfg.comp_grid.n; ++j) V0.at(0, j) = 0.5;  // m_0 guess; higher orders 0
    Field G0(AnyGrid{cfg.comp_grid}, n + 1);

    LowMomentRun out;
    out.states.push(0.0, V0);
    out.forces.push(0.0, G0);
    out.run = run_nudge(ncfg, spec, obs, nullptr, V0, G0, T, [&](const NudgeState& st) {
        out.states.push(st.t, st.V);
        out.forces.push(st.t, st.G_tilde);
    });
    return out;
}

MomentSet cascade_recover(const RecoveryConfig& cfg, const LowMomentRun& low,
                          const TraceProvider& traces, const KernelInterpolant& interp,
                          const SliceCallback& on_slice) {
    const int n = cfg.n_observed;
    const int N = cfg.N_target;
    const Grid1D closed = closed_companion(cfg.comp_grid);
    const double sig_total = cfg.sigma_a + cfg.sigma_s;

    MomentSet set;
    set.highest_order = N + 1;
    set.traces.resize(N + 2);

    // Capacity-3 rings of the integrated moments (closed grid) for the BDF
    // time derivative of each cascaded order.
    std::vector<SnapshotBuffer> rings;
    for (int k = n + 1; k <= N; ++k) rings.emplace_back(3);

    const std::size_t n_times = low.states.times.size();
    require(n_times >= 1, "empty-buffer: low-moment run stored no steps");

    std::vector<Field> slices(N + 2);        // m_0..m_{N+1} on the closed grid
    std::vector<Field> gradients(N + 2);     // reconstructed gradients for k >= n+1
    for (std::size_t ti = 0; ti < n_times; ++ti) {
        const double t = low.states.times[ti];
        const Field& V = low.states.fields[ti];
        const Field& G = low.forces.fields[ti];

        for (int k = 0; k <= n; ++k) slices[k] = to_closed(single_component(V, k), closed);

        // reconstructed gradient of order n+1 from the truncation force
        Field grad = to_closed(extract_gradient(G, n), closed);
        auto [left0, right0] = traces(n + 1, t);
        slices[n + 1] = integrate_moment(grad, left0, right0);
        gradients[n + 1] = grad;

        // cascade upward: order k feeds the gradient of order k+1
        for (int k = n + 1; k <= N; ++k) {
            SnapshotBuffer& ring = rings[k - (n + 1)];
            ring.push(t, slices[k]);
            const Field dm_dt = bdf_time_derivative(ring);
            const Field dx_prev = central_derivative(
                to_periodic(slices[k - 1], cfg.comp_grid));  // periodic data, wrap derivative

            Field combo = to_periodic(dm_dt, cfg.comp_grid);
            axpy(combo, k / (2.0 * k + 1.0), dx_prev);
            axpy(combo, sig_total, to_periodic(slices[k], cfg.comp_grid));
            Field smoothed = interp.smooth(combo);
            scale(smoothed, -(2.0 * k + 1.0) / (k + 1.0));

            Field grad_k = to_closed(smoothed, closed);
            auto [lk, rk] = traces(k + 1, t);
            slices[k + 1] = integrate_moment(grad_k, lk, rk);
            gradients[k + 1] = grad_k;
        }

        set.trace_times.push_back(t);
        for (int k = 0; k <= N + 1; ++k)
            set.traces[k].push_back(k >= n + 1 ? traces(k, t)
                                               : std::make_pair(slices[k].at(0, 0),
                                                                 slices[k].at(0, closed.n - 1)));
        if (on_slice) on_slice(ti, t, slices);
    }

    set.fields = std::move(slices);
    for (int k = n + 1; k <= N + 1; ++k) set.gradients.push_back(std::move(gradients[k]));
    return set;
}

RteRecoveryResult run_rte_recovery(const RecoveryConfig& cfg, const Trajectory& kinetic,
                                   double T) {
    const int n = cfg.n_observed;
    const int N = cfg.N_target;
    require(!kinetic.moments.empty(),
            "missing-trace: kinetic trajectory carries no moment fields");
    require(kinetic.moments.fields.front().n_components >= N + 2,
            "missing-trace: kinetic trajectory lacks moments through order N+1");

    // interior observations of m_0..m_n
    std::vector<int> comps(n + 1);
    for (int k = 0; k <= n; ++k) comps[k] = k;
    const ObservationSeries obs = observe(kinetic, AnyGrid{cfg.obs_grid}, comps, cfg.noise_eps,
                                          cfg.seed, ObserveWhat::Moments);

    // boundary traces from the kinetic endpoint node (periodic setup: the
    // wrap node is the endpoint on both sides)
    const auto& kin_grid = std::get<Grid1D>(kinetic.grid);
    const bool wrap = kin_grid.periodic();
    std::vector<std::vector<double>> left_tr(N + 2), right_tr(N + 2);
    for (const auto& m : kinetic.moments.fields)
        for (int k = 0; k <= N + 1; ++k) {
            left_tr[k].push_back(m.at(k, 0));
            right_tr[k].push_back(wrap ? m.at(k, 0) : m.at(k, kin_grid.n - 1));
        }
    const auto& mtimes = kinetic.moments.times;
    TraceProvider traces = [&](int k, double t) {
        const TimeStencil st = time_interp_stencil(mtimes, t);
        double l = 0.0, r = 0.0;
        for (int q = 0; q < st.m; ++q) {
            l += st.w[q] * left_tr[k][st.idx[q]];
            r += st.w[q] * right_tr[k][st.idx[q]];
        }
        return std::make_pair(l, r);
    };

    LowMomentRun low = recover_low_moments(cfg, obs, T);

    const KernelInterpolant interp = KernelInterpolant::build(
        AnyGrid{cfg.obs_grid}, AnyGrid{cfg.comp_grid}, cfg.sigma_factor * cfg.obs_grid.dx,
        BoundaryKind::periodic(), cfg.m_ghost);

    // truth moments restricted to the closed comparison grid, dense in time
    const Grid1D closed = closed_companion(cfg.comp_grid);
    RestrictionMap truth_map(kinetic.grid, AnyGrid{closed});
    SnapshotSeries truth_closed;
    for (std::size_t i = 0; i < kinetic.moments.times.size(); ++i)
        truth_closed.push(kinetic.moments.times[i],
                          truth_map.apply_as_field(kinetic.moments.fields[i]));

    RteRecoveryResult out;
    const std::size_t stride = std::max(1, cfg.history_stride);
    std::size_t total = low.states.times.size();
    MomentSet set = cascade_recover(
        cfg, low, traces, interp, [&](std::size_t ti, double t, const std::vector<Field>& slices) {
            if (ti % stride != 0 && ti + 1 != total) return;
            const Field truth = truth_closed.interp_at(t);
            std::vector<double> rel(N + 2), abs(N + 2);
            for (int k = 0; k <= N + 1; ++k) {
                const Field tk = single_component(truth, k);
                abs[k] = component_error(slices[k], tk, 0, NormKind::L1);
                const double denom = component_norm(tk, 0, NormKind::L1);
                rel[k] = denom > 0.0 ? abs[k] / denom : std::nan("");
            }
            out.history_times.push_back(t);
            out.history_rel_l1.push_back(std::move(rel));
            out.history_abs_l1.push_back(std::move(abs));
        });

    out.moments = std::move(set);
    out.nudge = std::move(low.run);
    return out;
}

}  // namespace nudgeda
