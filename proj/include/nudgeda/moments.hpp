#pragma once

#include "nudgeda/nudge.hpp"

namespace nudgeda {

// Configuration of the moment-recovery pipeline: nudge the moments observed
// in the interior (orders 0..n_observed), then cascade upward through order
// N_target+1 using the hierarchy structure and boundary traces.
struct RecoveryConfig {
    int n_observed = 1;
    int N_target = 4;  // recover through m_{N_target+1}
    double mu = 6.0;
    double cfl = 0.7;
    double sigma_a = 1.0;
    double sigma_s = 1.0;
    Grid1D obs_grid;   // periodic-cells observation grid
    Grid1D comp_grid;  // periodic-cells computational grid
    double sigma_factor = 1.0;  // kernel bandwidth = sigma_factor * obs spacing
    int m_ghost = 3;
    int history_stride = 10;
    double noise_eps = 0.0;
    std::uint64_t seed = 0;
};

// Recovered moments at one time, plus the boundary-trace record. Fields live
// on the endpoint-inclusive companion of the computational grid so the
// traces land exactly on nodes.
struct MomentSet {
    int highest_order = 0;  // N_target + 1
    std::vector<Field> fields;     // m_0 .. m_{N+1}, single-component each
    std::vector<Field> gradients;  // reconstructed d/dx m_k for k = n+1..N+1
    std::vector<double> trace_times;
    // traces[k][i] = (left, right) at trace_times[i]
    std::vector<std::vector<std::pair<double, double>>> traces;
};

// Boundary measurement of order k at time t: (m_k(0,t), m_k(1,t)).
using TraceProvider = std::function<std::pair<double, double>(int, double)>;

// Coefficient inversion of the truncation force: the hierarchy closes row n
// with g = -(n+1)/(2n+1) d/dx m_{n+1} e_{n+1}, so the gradient is
// -(2n+1)/(n+1) times the last component of g_tilde.
Field extract_gradient(const Field& g_tilde, int n);

// Boundary-corrected integration of a gradient on an endpoint-inclusive
// grid; endpoints match the traces exactly.
Field integrate_moment(const Field& gradient, double left, double right);

// Step 1: nudge the observed moment block; returns the dense per-step state
// and reconstructed-force trajectories.
struct LowMomentRun {
    SnapshotSeries states;   // components m_0..m_n on the computational grid
    SnapshotSeries forces;   // g_tilde trajectories
    NudgeRunResult run;
};
LowMomentRun recover_low_moments(const RecoveryConfig& cfg, const ObservationSeries& obs,
                                 double T);

// Steps 2-3 over stored step times: integrate the extracted gradient, then
// cascade each higher order from the hierarchy with I_h smoothing, BDF time
// differencing on capacity-3 rings, and trace-corrected integration.
// on_slice(time_index, t, slices) sees m_0..m_{N+1} on the closed grid after
// every step.
using SliceCallback = std::function<void(std::size_t, double, const std::vector<Field>&)>;
MomentSet cascade_recover(const RecoveryConfig& cfg, const LowMomentRun& low,
                          const TraceProvider& traces, const KernelInterpolant& interp,
                          const SliceCallback& on_slice = {});

struct RteRecoveryResult {
    MomentSet moments;
    // Error history per moment order 0..N_target+1, sampled every
    // history_stride steps against the kinetic truth.
    std::vector<double> history_times;
    std::vector<std::vector<double>> history_rel_l1;  // [time][order]
    std::vector<std::vector<double>> history_abs_l1;
    NudgeRunResult nudge;
};

// End-to-end recovery against a kinetic reference trajectory that carries
// dense moment fields; boundary traces are read from its endpoint node.
RteRecoveryResult run_rte_recovery(const RecoveryConfig& cfg, const Trajectory& kinetic, double T);

}  // namespace nudgeda
