// Acceptance suite: end-to-end checks of the published experiment targets,
// one printed pass/fail line per criterion. Exit status is the number of
// failed criteria.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nudgeda/harness.hpp"
#include "nudgeda/io.hpp"
#include "nudgeda/moments.hpp"
#include "nudgeda/rng.hpp"

using namespace nudgeda;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunReport run_preset(const std::string& preset, const std::string& out) {
    ExperimentConfig cfg = preset_config(preset);
    cfg.output_dir = out;
    return run_experiment(cfg);
}

// -------------------------------------------------------------- criteria

void scalar_criteria() {
    RunReport rep;
    try {
        rep = run_preset("scalar-sec3.1", "acceptance-out/scalar");
    } catch (const std::exception& e) {
        report(1, "scalar force recovery", false, e.what());
        report(4, "exponential decay", false, "scalar run failed");
        return;
    }
    const double force = rep.metrics.at("terminal_rel_force_l1_c0");
    const double early = rep.metrics.at("state_l1_at_t0.1_c0");
    const double late = rep.metrics.at("terminal_state_l1_c0");
    const double ratio = early / late;
    const bool pass1 = in_range(force, 0.02, 0.06) && ratio >= 50.0 && rep.wall_seconds <= 60.0;
    report(1, "scalar force recovery", pass1,
           "rel force err " + fmt(force) + " in [0.02,0.06]; state decay x" + fmt(ratio) +
               " >= 50; runtime " + fmt(rep.wall_seconds) + "s <= 60s");

    const double slope = rep.metrics.at("log_slope_c0");
    const bool pass4 = std::isfinite(slope) && slope <= -1.0;
    report(4, "exponential decay", pass4,
           "log-error slope " + fmt(slope) + " over [0.2,0.8], need <= -1.0");
}

void euler1d_criterion() {
    RunReport rep;
    try {
        rep = run_preset("euler1d-sec3.2", "acceptance-out/euler1d");
    } catch (const std::exception& e) {
        report(2, "euler1d pressure gradient", false, e.what());
        return;
    }
    const double force = rep.metrics.at("terminal_rel_force_l1_c1");
    const bool mono = rep.metrics.at("monotone_after_t0.2_c0") == 1.0 &&
                      rep.metrics.at("monotone_after_t0.2_c1") == 1.0;
    const bool pass = in_range(force, 0.02, 0.07) && mono && rep.wall_seconds <= 90.0;
    report(2, "euler1d pressure gradient", pass,
           "rel force err " + fmt(force) + " in [0.02,0.07]; monotone after t=0.2: " +
               (mono ? "yes" : "no") + "; runtime " + fmt(rep.wall_seconds) + "s <= 90s");
}

void euler2d_criterion() {
    RunReport rep;
    try {
        rep = run_preset("euler2d-sec3.3", "acceptance-out/euler2d");
    } catch (const std::exception& e) {
        report(3, "euler2d pressure gradients", false, e.what());
        return;
    }
    const double fx = rep.metrics.at("terminal_rel_force_l1_c1");
    const double fy = rep.metrics.at("terminal_rel_force_l1_c2");
    const bool pass = in_range(fx, 0.01, 0.035) && in_range(fy, 0.01, 0.035) &&
                      rep.wall_seconds <= 900.0;
    report(3, "euler2d pressure gradients", pass,
           "rel dx p err " + fmt(fx) + ", rel dy p err " + fmt(fy) +
               " in [0.01,0.035]; runtime " + fmt(rep.wall_seconds) + "s <= 900s");
}

void sparsity_criterion() {
    RunReport rep;
    try {
        rep = run_preset("sparsity-sec3.4", "acceptance-out/sparsity");
    } catch (const std::exception& e) {
        report(5, "sparse-observation trend", false, e.what());
        return;
    }
    const double e30 = rep.metrics.at("terminal_state_l1_nob30");
    const double e90 = rep.metrics.at("terminal_state_l1_nob90");
    const double e150 = rep.metrics.at("terminal_state_l1_nob150");
    const bool bounded = rep.metrics.at("bounded_nob30") == 1.0 &&
                         rep.metrics.at("bounded_nob90") == 1.0 &&
                         rep.metrics.at("bounded_nob150") == 1.0;
    const bool pass = bounded && e30 > e90 && e90 > e150;
    report(5, "sparse-observation trend", pass,
           "terminal state err " + fmt(e30) + " > " + fmt(e90) + " > " + fmt(e150) +
               (bounded ? "; all bounded" : "; blow-up"));
}

void noise_criterion() {
    RunReport rep;
    try {
        rep = run_preset("noise-sec3.4", "acceptance-out/noise");
    } catch (const std::exception& e) {
        report(6, "noise bandwidth smoothing", false, e.what());
        return;
    }
    const double e1 = rep.metrics.at("noise_energy_sf1");
    const double e2 = rep.metrics.at("noise_energy_sf2");
    const double e3 = rep.metrics.at("noise_energy_sf3");
    const bool pass = e1 > e2 && e2 > e3;
    report(6, "noise bandwidth smoothing", pass,
           "top-third spectral energy " + fmt(e1) + " > " + fmt(e2) + " > " + fmt(e3));
}

void rte_thin_criterion() {
    RunReport rep;
    try {
        rep = run_preset("rte-thin-sec4.3", "acceptance-out/rte-thin");
    } catch (const std::exception& e) {
        report(7, "rte moment recovery (thin)", false, e.what());
        return;
    }
    bool rel_ok = true;
    double worst = 0.0;
    for (int k = 2; k <= 5; ++k) {
        const double r = rep.metrics.at("terminal_rel_l1_m" + std::to_string(k));
        worst = std::max(worst, r);
        rel_ok = rel_ok && r <= 0.1;
    }
    bool decay_ok = true;
    for (int k = 0; k <= 5; ++k)
        decay_ok = decay_ok && rep.metrics.at("terminal_over_mid_m" + std::to_string(k)) < 1.0;
    const bool pass = rel_ok && decay_ok && rep.wall_seconds <= 300.0;
    report(7, "rte moment recovery (thin)", pass,
           "worst rel err m2..m5 " + fmt(worst) + " <= 0.1; histories decay: " +
               (decay_ok ? "yes" : "no") + "; runtime " + fmt(rep.wall_seconds) + "s <= 300s");
}

void rte_thick_criterion() {
    RunReport rep;
    try {
        rep = run_preset("rte-thick-sec4.3", "acceptance-out/rte-thick");
    } catch (const std::exception& e) {
        report(8, "rte moment recovery (thick)", false, e.what());
        return;
    }
    bool rel_ok = true;
    double worst_rel = 0.0;
    for (int k = 0; k <= 3; ++k) {
        const double r = rep.metrics.at("terminal_rel_l1_m" + std::to_string(k));
        worst_rel = std::max(worst_rel, r);
        rel_ok = rel_ok && r <= 0.1;
    }
    const double a4 = rep.metrics.at("terminal_abs_linf_m4");
    const double a5 = rep.metrics.at("terminal_abs_linf_m5");
    const bool abs_ok = a4 <= 1e-6 && a5 <= 1e-6;
    report(8, "rte moment recovery (thick)", rel_ok && abs_ok,
           "worst rel err m0..m3 " + fmt(worst_rel) + " <= 0.1; abs Linf m4 " + fmt(a4) +
               ", m5 " + fmt(a5) + " <= 1e-6");
}

void building_block_criterion() {
    try {
        const RunReport weno = run_convergence("weno", 3, "acceptance-out/conv-weno");
        const RunReport ssprk = run_convergence("ssprk", 3, "acceptance-out/conv-ssprk");
        const RunReport kern = run_convergence("kernel", 3, "acceptance-out/conv-kernel");
        const double wo = weno.metrics.at("order");
        const double so = ssprk.metrics.at("order");
        const double ko = kern.metrics.at("order");
        const bool time_ok =
            weno.wall_seconds <= 30.0 && ssprk.wall_seconds <= 30.0 && kern.wall_seconds <= 30.0;
        const bool pass = wo >= 4.5 && so >= 2.9 && in_range(ko, 0.8, 1.2) && time_ok;
        report(9, "building-block orders", pass,
               "weno " + fmt(wo) + " >= 4.5; ssprk " + fmt(so) + " >= 2.9; kernel " + fmt(ko) +
                   " in [0.8,1.2]");
    } catch (const std::exception& e) {
        report(9, "building-block orders", false, e.what());
    }
}

void structural_criterion() {
    std::string detail;
    bool pass = true;
    try {
        // row-stochastic weights
        const Grid1D obs = make_uniform_grid(0.0, 2.0 * M_PI, 150, GridLayout::PeriodicCells);
        const Grid1D comp = make_uniform_grid(0.0, 2.0 * M_PI, 800, GridLayout::PeriodicCells);
        const auto ip = KernelInterpolant::build(AnyGrid{obs}, AnyGrid{comp}, obs.dx,
                                                 BoundaryKind::periodic(), 3);
        const double defect = ip.row_sum_defect();
        pass = pass && defect <= 1e-12;
        detail += "row-sum defect " + fmt(defect);

        // constant preservation
        const CounterRng rng(2024);
        double worst_const = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            const double c = 5.0 * rng.normal(trial);
            const Field out = ip.apply(std::vector<double>(150, c), 1);
            for (int j = 0; j < comp.n; ++j)
                worst_const = std::max(worst_const, std::abs(out.at(0, j) - c));
        }
        pass = pass && worst_const <= 1e-12;
        detail += "; const-preserve " + fmt(worst_const);

        // endpoint-exact moment integration
        const Grid1D closed = make_uniform_grid(0.0, 1.0, 301, GridLayout::EndpointInclusive);
        Field grad(AnyGrid{closed}, 1);
        for (int j = 0; j < closed.n; ++j) grad.at(0, j) = rng.normal(900 + j);
        const Field m = integrate_moment(grad, -0.35, 0.82);
        const double edge = std::max(std::abs(m.at(0, 0) + 0.35), std::abs(m.at(0, 300) - 0.82));
        pass = pass && edge <= 1e-14;
        detail += "; endpoint defect " + fmt(edge);

        // periodic mass conservation on a short euler run
        const SystemSpec spec = euler1d_system(1.0, 1.4);
        const Grid1D g = make_uniform_grid(0.0, 4.0, 200, GridLayout::PeriodicCells);
        const Field init = field_from_function(
            g, {[](double x) { return 1.0 + 0.2 * std::sin(M_PI * x); },
                [](double x) { return 1.0 + 0.2 * std::sin(M_PI * x); }});
        const double T = 0.2;
        const Trajectory traj = solve_reference(spec, init, T, 0.7);
        auto mass = [&](const Field& f) {
            double s = 0.0;
            for (double v : f.comp(0)) s += v;
            return s * g.dx;
        };
        const double drift = std::abs(mass(traj.states.fields.back()) - mass(traj.states.fields.front()));
        pass = pass && drift <= 1e-10 * T;
        detail += "; mass drift " + fmt(drift);

        // hierarchy matrix entries for N <= 10
        bool entries_ok = true;
        for (int N = 1; N <= 10; ++N) {
            const MomentMatrices mm = rte_moment_matrices(N, 0.3, 0.6);
            for (int r = 0; r <= N; ++r)
                for (int c2 = 0; c2 <= N; ++c2) {
                    const double want = (c2 == r - 1)   ? r / (2.0 * r + 1.0)
                                        : (c2 == r + 1) ? (r + 1.0) / (2.0 * r + 1.0)
                                                        : 0.0;
                    if (std::abs(mm.a(r, c2) - want) > 1e-15) entries_ok = false;
                }
            if (std::abs(mm.S_diag[0] + 0.3) > 1e-15) entries_ok = false;
            for (int k = 1; k <= N; ++k)
                if (std::abs(mm.S_diag[k] + 0.9) > 1e-15) entries_ok = false;
        }
        pass = pass && entries_ok;
        detail += std::string("; A_N entries ") + (entries_ok ? "exact" : "WRONG");

        // determinism: byte-identical reruns
        ExperimentConfig cfg = preset_config("scalar-sec3.1");
        cfg.params["N"] = 64;
        cfg.params["N_ob"] = 16;
        cfg.params["T"] = 0.05;
        cfg.params["noise_eps"] = 1e-4;
        cfg.output_dir = "acceptance-out/det_a";
        const RunReport ra = run_experiment(cfg);
        cfg.output_dir = "acceptance-out/det_b";
        run_experiment(cfg);
        bool identical = true;
        for (const auto& f : ra.files) {
            if (f.find(".csv") == std::string::npos) continue;
            identical = identical && slurp("acceptance-out/det_a/" + f) ==
                                         slurp("acceptance-out/det_b/" + f);
        }
        pass = pass && identical;
        detail += std::string("; reruns ") + (identical ? "byte-identical" : "DIFFER");
    } catch (const std::exception& e) {
        pass = false;
        detail += std::string("; exception: ") + e.what();
    }
    report(10, "structural invariants", pass, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    scalar_criteria();       // criteria 1 and 4
    euler1d_criterion();     // 2
    euler2d_criterion();     // 3
    sparsity_criterion();    // 5
    noise_criterion();       // 6
    rte_thin_criterion();    // 7
    rte_thick_criterion();   // 8
    building_block_criterion();  // 9
    structural_criterion();      // 10
    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
