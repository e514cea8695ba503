#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lpvmor/model.hpp"

namespace lpvmor {

/// Frozen snapshot of an LPV model at (rho, rhodot).
using LpvView = std::function<LtiSnapshot(double rho, double rhodot)>;

LpvView make_view(const GridLpvModel& model);
LpvView make_view(const ReducedLpvModel& model);

struct Scenario {
    std::function<double(double)> rho;    ///< rho(t)
    std::function<double(double)> rhodot; ///< d rho / dt
    std::function<Vec(double)> u;         ///< input u(t)
    double t_end = 1.0;
    double dt = 1e-3;
};

struct SimulationResult {
    std::vector<double> t;
    Mat y; ///< one row per time sample
    std::vector<std::string> warnings;
};

/// Fixed-step classical Runge-Kutta integration of x' = A x + B u, y = C x + D u.
/// Throws Error (stage "simulation") when ||x|| exceeds 1e12.
SimulationResult simulate(const LpvView& model, Eigen::Index n_x, const Scenario& sc, const Vec& x0 = Vec());

/// As above, with the scheduling range and rate bound of the model checked (warnings only).
SimulationResult simulate(const GridLpvModel& model, const Scenario& sc);
SimulationResult simulate(const ReducedLpvModel& model, const Scenario& sc);

/// ||y1 - y2||_2 / ||y1||_2 over all samples and channels (absolute when y1 = 0).
double relative_l2(const Mat& y1, const Mat& y2);

/// Triangular sweep from lo up to hi and back over [0, t_end].
Scenario triangular_sweep(double lo, double hi, double t_end, double dt, std::function<Vec(double)> u);

/// CSV with columns t, y_1 ... y_ny.
std::string simulation_csv(const SimulationResult& r);

} // namespace lpvmor
