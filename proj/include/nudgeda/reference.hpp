#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "nudgeda/models.hpp"

namespace nudgeda {

// Time-stamped fields with cubic-in-time evaluation between samples.
struct SnapshotSeries {
    std::vector<double> times;
    std::vector<Field> fields;

    bool empty() const { return times.empty(); }
    void push(double t, Field f) {
        times.push_back(t);
        fields.push_back(std::move(f));
    }
    Field interp_at(double t) const;
};

// Dense per-step record of a state restricted to observation nodes
// (component-major values per time).
struct ObsTrack {
    AnyGrid grid;
    int n_components = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> values;
};

// Carrier of a reference solve: stored states/forces (possibly on a coarser
// storage grid and a sparser cadence than the solver ran at), moment fields
// for kinetic runs, and an optional dense observation track.
struct Trajectory {
    AnyGrid grid;  // grid the stored snapshots live on
    SnapshotSeries states;
    SnapshotSeries forces;   // true G where the model has a force flux
    SnapshotSeries moments;  // kinetic runs: components are m_0..m_K
    std::optional<ObsTrack> obs_track;
    double t_final = 0.0;
    std::uint64_t n_steps = 0;
};

struct ReferenceOptions {
    double cfl = 0.7;
    std::optional<double> fixed_dt;
    BoundaryKind boundary = BoundaryKind::periodic();
    WenoConfig weno{};
    // Snapshot cadence: every store_stride-th step, plus every time in
    // store_times (landed on exactly), plus t = 0 and t = T. store_stride
    // <= 0 stores only store_times and the endpoints.
    int store_stride = 1;
    std::vector<double> store_times;
    std::optional<AnyGrid> store_grid;  // restrict stored snapshots to this grid
    std::optional<AnyGrid> obs_grid;    // record a dense observation track
    bool store_force = true;
};

// Solve the exact dynamics dU/dt + div(F + P) = S with WENO5-SSPRK3; the
// true force per stored snapshot is -(central derivative of the force flux).
Trajectory solve_reference(const SystemSpec& spec, const Field& initial, double T,
                           const ReferenceOptions& opt);
Trajectory solve_reference(const SystemSpec& spec, const Field& initial, double T,
                           double cfl = 0.7);

// Discrete-ordinates transport solve of the 1D kinetic equation
//   f_t + v f_x = sigma_s (m_0 - f) - sigma_a f
// on Gauss-Legendre velocity nodes, with moments m_0..m_{n_moment_orders-1}
// stored every step. dt = dt_ratio * dx.
Trajectory solve_rte_kinetic(const std::function<double(double, double)>& f0, double sigma_a,
                             double sigma_s, const Grid1D& grid, int n_velocity, double T,
                             double dt_ratio, int n_moment_orders = 6);

// Which stored series of a trajectory to sample.
enum class ObserveWhat { States, Moments };

struct ObservationSeries {
    AnyGrid obs_grid;
    std::vector<int> components;  // source component per output slot
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // per time, component-major
    double noise_eps = 0.0;
    std::uint64_t seed = 0;

    int n_selected() const { return static_cast<int>(components.size()); }
    // Cubic-in-time interpolation of the recorded values.
    std::vector<double> at(double t) const;
};

// Sample a trajectory at observation nodes: piecewise-cubic restriction plus
// eps * N(0,1) noise, one independent draw per (node, component, time),
// deterministic in `seed`. Uses the trajectory's dense obs track when it
// matches the requested grid.
ObservationSeries observe(const Trajectory& traj, const AnyGrid& obs_grid,
                          const std::vector<int>& components, double noise_eps,
                          std::uint64_t seed, ObserveWhat what = ObserveWhat::States);

// Columnar text export of the stored states (1D trajectories): one file per
// component named <prefix>_c<k>.csv holding x and one column per stored
// time, plus <prefix>_manifest.json with the grid, times, parameters, and
// seed. Returns the paths written.
std::vector<std::string> export_trajectory(const Trajectory& traj, const std::string& dir,
                                           const std::string& prefix,
                                           const std::map<std::string, double>& parameters = {},
                                           std::uint64_t seed = 0);

}  // namespace nudgeda
