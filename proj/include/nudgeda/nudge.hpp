#pragma once

#include "nudgeda/reference.hpp"

namespace nudgeda {

// Whether the relaxation term reads observations at the Runge-Kutta stage
// times or frozen at the step start.
enum class StageObsPolicy { StageTimes, StepStart };

struct NudgeConfig {
    double mu = 1.0;   // nudging coefficient
    double cfl = 0.7;  // hyperbolic CFL number
    KernelInterpolant interp;
    StageObsPolicy stage_obs = StageObsPolicy::StageTimes;
    WenoConfig weno{};
    BoundaryKind boundary = BoundaryKind::periodic();
    // dt <= relax_safety * 2/mu keeps the explicit relaxation term stable.
    double relax_safety = 0.5;
    int history_stride = 1;  // error-history cadence when it is step-based
    // Uniform step size overriding the adaptive choice (must satisfy both
    // stability bounds). Consumers that difference the stored trajectory in
    // time want it: a dt change injects a step-size-dependent jump into the
    // slice error that repeated time differencing amplifies.
    std::optional<double> fixed_dt;
};

// Observation values (component-major over the observation grid) at an
// arbitrary query time; typically ObservationSeries::at.
using ObsProvider = std::function<std::vector<double>(double)>;

struct NudgeState {
    double t = 0.0;
    Field V;        // nudged state on the computational grid
    Field G_tilde;  // reconstructed force
    Field U_tilde;  // I_h(U) + (I - I_h)(V)
    SnapshotBuffer obs_buffer{3};  // I_h(U) snapshots for time differencing
};

NudgeState init_nudge(const NudgeConfig& cfg, const Field& V0, const Field& G0);

// Advance (V, G_tilde) by one step of size dt: SSPRK3 on
//   dV/dt = -dF(V)/dx + G_tilde + S(V) + mu (I_h(U) - I_h(V)),
// then rebuild U_tilde and G_tilde from the new observation.
// Throws "cfl-violation" when dt exceeds the hyperbolic CFL bound, and
// "nonfinite-state" (naming the violated stability bound) on blow-up.
void nudge_step(NudgeState& state, const SystemSpec& spec, const NudgeConfig& cfg,
                const ObsProvider& obs_at, double dt);

struct ErrorRow {
    double t = 0.0;
    std::vector<double> state_err_l1;      // per component, absolute
    std::vector<double> state_err_l2;
    std::vector<double> force_err_abs_l1;  // per component
    std::vector<double> force_err_rel_l1;  // NaN where the true force vanishes
    std::vector<double> state_norm_l1;     // diagnostics (always present)
};

struct ErrorHistory {
    int n_components = 0;
    bool has_truth = false;
    std::vector<ErrorRow> rows;

    // Least-squares slope of log(state_err_l1[comp]) over t in [t0, t1].
    double log_error_slope(int comp, double t0, double t1) const;
    const ErrorRow& row_nearest(double t) const;
};

// Truth access for error reporting. When sample_times is nonempty the run
// lands on those times exactly and records errors only there; otherwise
// errors are recorded every history_stride steps.
struct TruthProbe {
    std::function<Field(double)> state_at;
    std::function<Field(double)> force_at;  // may be empty
    std::vector<double> sample_times;
};

struct NudgeRunResult {
    NudgeState state;
    ErrorHistory history;
    std::uint64_t n_steps = 0;
};

// Step from t = 0 to T with dt = min(cfl dx / alpha(V), relax_safety 2/mu),
// landing exactly on T and on any truth sample times. on_step runs after
// every accepted step.
NudgeRunResult run_nudge(const NudgeConfig& cfg, const SystemSpec& spec, const ObsProvider& obs_at,
                         const TruthProbe* truth, const Field& V0, const Field& G0, double T,
                         const std::function<void(const NudgeState&)>& on_step = {});

// Convenience overload reading observations from a recorded series.
NudgeRunResult run_nudge(const NudgeConfig& cfg, const SystemSpec& spec,
                         const ObservationSeries& obs, const TruthProbe* truth, const Field& V0,
                         const Field& G0, double T,
                         const std::function<void(const NudgeState&)>& on_step = {});

}  // namespace nudgeda
