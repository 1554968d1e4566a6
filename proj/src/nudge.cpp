#include "nudgeda/nudge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nudgeda {

namespace {

constexpr double kBlowupThreshold = 1e100;

double min_spacing(const AnyGrid& g) {
    if (const auto* g1 = std::get_if<Grid1D>(&g)) return g1->dx;
    const auto& g2 = std::get<Grid2D>(g);
    return std::min(g2.x_axis.dx, g2.y_axis.dx);
}

std::string bound_diagnosis(double mu, double dt, double cfl_dt) {
    char buf[160];
    if (mu * dt > 2.0) {
        std::snprintf(buf, sizeof buf,
                      "relaxation stability bound violated (mu*dt = %.3g > 2)", mu * dt);
    } else if (dt > cfl_dt) {
        std::snprintf(buf, sizeof buf, "hyperbolic CFL bound violated (dt = %.3g > %.3g)", dt,
                      cfl_dt);
    } else {
        std::snprintf(buf, sizeof buf, "dt = %.3g within nominal bounds", dt);
    }
    return buf;
}

Field flux_derivative(const SystemSpec& spec, const Field& u, double alpha,
                      const NudgeConfig& cfg) {
    if (spec.dim == 1) return weno5_flux_derivative(u, spec.flux_x, alpha, cfg.boundary, cfg.weno);
    return weno5_flux_divergence(u, spec.flux_x, spec.flux_y, alpha, cfg.boundary, cfg.weno);
}

}  // namespace

NudgeState init_nudge(const NudgeConfig& cfg, const Field& V0, const Field& G0) {
    check_conformable(V0, G0);
    require(V0.all_finite() && G0.all_finite(), "shape-mismatch: initial fields must be finite");
    require(same_grid(V0.grid, cfg.interp.eval_grid()),
            "shape-mismatch: initial state is not on the interpolant's evaluation grid");
    require(cfg.mu > 0.0, "invalid-range: nudging coefficient must be positive");
    require(cfg.cfl > 0.0 && cfg.cfl <= 1.0, "invalid-range: cfl must lie in (0, 1]");
    NudgeState st;
    st.t = 0.0;
    st.V = V0;
    st.G_tilde = G0;
    st.U_tilde = V0;
    st.obs_buffer = SnapshotBuffer(3);
    return st;
}

void nudge_step(NudgeState& state, const SystemSpec& spec, const NudgeConfig& cfg,
                const ObsProvider& obs_at, double dt) {
    require(dt > 0.0, "invalid-range: time step must be positive");
    const double alpha = spec.wavespeed_bound(state.V);
    const double cfl_dt = cfg.cfl * min_spacing(state.V.grid) / alpha;
    require(dt <= cfl_dt * (1.0 + 1e-9),
            "cfl-violation: dt exceeds cfl*dx/alpha; " + bound_diagnosis(cfg.mu, dt, cfl_dt));

    // I_h(U) at a query time, cached per step (stages reuse the endpoint).
    std::vector<std::pair<double, Field>> cache;
    cache.reserve(4);  // stage times + step end; reallocation would dangle references
    auto ih_obs = [&](double tq) -> const Field& {
        for (auto& e : cache)
            if (e.first == tq) return e.second;
        auto vals = obs_at(tq);
        require(std::all_of(vals.begin(), vals.end(), [](double v) { return std::isfinite(v); }),
                "nonfinite-state: observation values are not finite");
        cache.emplace_back(tq, cfg.interp.apply(vals, state.V.n_components));
        return cache.back().second;
    };

    const double t0 = state.t;
    auto rhs = [&](double ts, const Field& v) {
        const double tq = (cfg.stage_obs == StageObsPolicy::StageTimes) ? ts : t0;
        Field r = flux_derivative(spec, v, alpha, cfg);
        scale(r, -1.0);
        axpy(r, 1.0, state.G_tilde);
        if (spec.has_source()) axpy(r, 1.0, spec.source_field(v, ts));
        Field relax = ih_obs(tq);
        axpy(relax, -1.0, cfg.interp.smooth(v));
        axpy(r, cfg.mu, relax);
        return r;
    };

    Field v_new;
    try {
        v_new = ssprk3_step(state.V, rhs, t0, dt);
    } catch (const Error&) {
        throw Error("nonfinite-state: nudged update produced NaN/Inf at t = " +
                    std::to_string(t0) + "; " + bound_diagnosis(cfg.mu, dt, cfl_dt));
    }
    if (!v_new.all_finite() || v_new.max_abs() > kBlowupThreshold)
        throw Error("nonfinite-state: nudged state blew up at t = " + std::to_string(t0) + "; " +
                    bound_diagnosis(cfg.mu, dt, cfl_dt));

    const double t1 = t0 + dt;
    const Field& ihu_new = ih_obs(t1);

    // U_tilde = I_h(U) + (I - I_h)(V)
    Field u_tilde = ihu_new;
    axpy(u_tilde, 1.0, v_new);
    axpy(u_tilde, -1.0, cfg.interp.smooth(v_new));

    // G_tilde = d/dt I_h(U) + I_h(dF(U_tilde)/dx - S(U_tilde))
    state.obs_buffer.push(t1, ihu_new);
    Field g_new = bdf_time_derivative(state.obs_buffer);
    Field inner = flux_derivative(spec, u_tilde, spec.wavespeed_bound(u_tilde), cfg);
    if (spec.has_source()) axpy(inner, -1.0, spec.source_field(u_tilde, t1));
    axpy(g_new, 1.0, cfg.interp.smooth(inner));
    if (!g_new.all_finite() || g_new.max_abs() > kBlowupThreshold)
        throw Error("nonfinite-state: reconstructed force blew up at t = " + std::to_string(t1) +
                    "; " + bound_diagnosis(cfg.mu, dt, cfl_dt));

    state.V = std::move(v_new);
    state.U_tilde = std::move(u_tilde);
    state.G_tilde = std::move(g_new);
    state.t = t1;
}

double ErrorHistory::log_error_slope(int comp, double t0, double t1) const {
    std::vector<double> ts, ys;
    for (const auto& r : rows) {
        if (r.t < t0 || r.t > t1 || r.state_err_l1.empty()) continue;
        const double e = r.state_err_l1[comp];
        if (e <= 0.0) continue;
        ts.push_back(r.t);
        ys.push_back(std::log(e));
    }
    if (ts.size() < 2) return std::nan("");
    return fit_slope(ts, ys);
}

const ErrorRow& ErrorHistory::row_nearest(double t) const {
    require(!rows.empty(), "empty-buffer: error history has no rows");
    const ErrorRow* best = &rows.front();
    for (const auto& r : rows)
        if (std::abs(r.t - t) < std::abs(best->t - t)) best = &r;
    return *best;
}

namespace {

ErrorRow make_row(const NudgeState& st, const TruthProbe* truth) {
    ErrorRow row;
    row.t = st.t;
    row.state_norm_l1.resize(st.V.n_components);
    for (int c = 0; c < st.V.n_components; ++c)
        row.state_norm_l1[c] = component_norm(st.V, c, NormKind::L1);
    if (!truth || !truth->state_at) return row;
    const Field u = truth->state_at(st.t);
    for (int c = 0; c < st.V.n_components; ++c) {
        row.state_err_l1.push_back(component_error(st.V, u, c, NormKind::L1));
        row.state_err_l2.push_back(component_error(st.V, u, c, NormKind::L2));
    }
    if (truth->force_at) {
        const Field g = truth->force_at(st.t);
        for (int c = 0; c < st.V.n_components; ++c) {
            const double abs_err = component_error(st.G_tilde, g, c, NormKind::L1);
            const double denom = component_norm(g, c, NormKind::L1);
            row.force_err_abs_l1.push_back(abs_err);
            row.force_err_rel_l1.push_back(denom > 0.0 ? abs_err / denom
                                                       : std::nan(""));
        }
    }
    return row;
}

}  // namespace

NudgeRunResult run_nudge(const NudgeConfig& cfg, const SystemSpec& spec, const ObsProvider& obs_at,
                         const TruthProbe* truth, const Field& V0, const Field& G0, double T,
                         const std::function<void(const NudgeState&)>& on_step) {
    require(T > 0.0, "invalid-range: final time must be positive");
    NudgeRunResult out;
    out.state = init_nudge(cfg, V0, G0);
    NudgeState& st = out.state;
    st.obs_buffer.push(0.0, cfg.interp.apply(obs_at(0.0), V0.n_components));

    out.history.n_components = V0.n_components;
    out.history.has_truth = truth && truth->state_at;

    std::vector<double> events;
    const bool timed_samples = truth && !truth->sample_times.empty();
    if (timed_samples) {
        for (double t : truth->sample_times)
            if (t > 1e-14 && t <= T + 1e-14) events.push_back(std::min(t, T));
    }
    events.push_back(T);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 events.end());

    auto sample_due_at_start = [&]() {
        if (!timed_samples)
            return true;
        return std::any_of(truth->sample_times.begin(), truth->sample_times.end(),
                           [](double t) { return std::abs(t) < 1e-12; });
    };
    if (sample_due_at_start()) out.history.rows.push_back(make_row(st, truth));

    const double dx = min_spacing(V0.grid);
    std::size_t next_event = 0;
    while (st.t < T - 1e-13) {
        const double alpha = spec.wavespeed_bound(st.V);
        double dt = cfg.fixed_dt ? *cfg.fixed_dt
                                 : std::min(cfg.cfl * dx / alpha, cfg.relax_safety * 2.0 / cfg.mu);
        while (next_event < events.size() && events[next_event] <= st.t + 1e-13) ++next_event;
        bool on_event = false;
        // approach events in at most two even steps: the landing step never
        // degenerates into a sliver that poisons backward time differences
        if (next_event < events.size()) {
            const double remaining = events[next_event] - st.t;
            if (remaining <= dt * (1.0 + 1e-9)) {
                dt = remaining;
                on_event = true;
            } else if (remaining <= 2.0 * dt) {
                dt = 0.5 * remaining;
            }
        }
        nudge_step(st, spec, cfg, obs_at, dt);
        if (on_event) st.t = events[next_event];
        ++out.n_steps;
        if (on_step) on_step(st);
        const bool row_due = timed_samples
                                 ? on_event
                                 : (out.n_steps % cfg.history_stride == 0 || st.t >= T - 1e-13);
        if (row_due) out.history.rows.push_back(make_row(st, truth));
    }
    return out;
}

NudgeRunResult run_nudge(const NudgeConfig& cfg, const SystemSpec& spec,
                         const ObservationSeries& obs, const TruthProbe* truth, const Field& V0,
                         const Field& G0, double T,
                         const std::function<void(const NudgeState&)>& on_step) {
    require(!obs.times.empty() && obs.times.back() >= T - 1e-12,
            "invalid-range: observation series does not span [0, T]");
    return run_nudge(
        cfg, spec, [&obs](double t) { return obs.at(t); }, truth, V0, G0, T, on_step);
}

}  // namespace nudgeda
