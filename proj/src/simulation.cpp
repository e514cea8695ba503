#include "lpvmor/simulation.hpp"

#include <cmath>
#include <sstream>

namespace lpvmor {
namespace {

template <class Model>
void check_scenario(const Model& m, const Scenario& sc, std::vector<std::string>& warnings)
{
    const auto steps = static_cast<long>(std::ceil(sc.t_end / sc.dt - 1e-9));
    bool range_ok = true, rate_ok = true;
    for (long i = 0; i <= steps; ++i) {
        const double t = std::min(sc.t_end, static_cast<double>(i) * sc.dt);
        const double r = sc.rho(t);
        if (r < m.rho_min() - 1e-12 || r > m.rho_max() + 1e-12) range_ok = false;
        if (std::abs(sc.rhodot(t)) > m.rate_bound * (1.0 + 1e-12) + 1e-15) rate_ok = false;
    }
    if (!range_ok) warnings.emplace_back("scheduling trajectory leaves the grid range (clamped)");
    if (!rate_ok) warnings.emplace_back("scheduling rate exceeds the model rate bound");
}

double clamp_to(double r, const std::vector<double>& grid) { return std::min(std::max(r, grid.front()), grid.back()); }

} // namespace

LpvView make_view(const GridLpvModel& model)
{
    return [&model](double rho, double) { return interpolate(model, clamp_to(rho, model.rho_grid)); };
}

LpvView make_view(const ReducedLpvModel& model)
{
    return [&model](double rho, double rhodot) { return interpolate(model, clamp_to(rho, model.rho_grid), rhodot); };
}

SimulationResult simulate(const LpvView& model, Eigen::Index n_x, const Scenario& sc, const Vec& x0)
{
    if (!(sc.dt > 0.0)) throw Error("simulate: dt must be positive", "simulation");
    if (!(sc.t_end >= 0.0)) throw Error("simulate: t_end must be nonnegative", "simulation");
    const auto steps = static_cast<long>(std::ceil(sc.t_end / sc.dt - 1e-9));
    Vec x = x0.size() == 0 ? Vec::Zero(n_x) : x0;
    if (x.size() != n_x) throw Error("simulate: initial state has wrong dimension", "simulation");

    SimulationResult r;
    auto at = [&](double t) { return model(sc.rho(t), sc.rhodot(t)); };
    LtiSnapshot s0 = at(0.0);
    r.y.resize(steps + 1, s0.C.rows());
    r.t.reserve(static_cast<std::size_t>(steps + 1));
    r.t.push_back(0.0);
    r.y.row(0) = (s0.C * x + s0.D * sc.u(0.0)).transpose();
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * sc.dt;
        const double h = std::min(sc.dt, sc.t_end - t);
        const LtiSnapshot sm = at(t + 0.5 * h);
        const LtiSnapshot s1 = at(t + h);
        const Vec u0 = sc.u(t), um = sc.u(t + 0.5 * h), u1 = sc.u(t + h);
        const Vec k1 = s0.A * x + s0.B * u0;
        const Vec k2 = sm.A * (x + 0.5 * h * k1) + sm.B * um;
        const Vec k3 = sm.A * (x + 0.5 * h * k2) + sm.B * um;
        const Vec k4 = s1.A * (x + h * k3) + s1.B * u1;
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!(x.norm() <= 1e12)) {
            std::ostringstream msg;
            msg << "simulation diverged at t = " << t + h;
            throw Error(msg.str(), "simulation");
        }
        r.t.push_back(t + h);
        r.y.row(i + 1) = (s1.C * x + s1.D * u1).transpose();
        s0 = s1;
    }
    return r;
}

SimulationResult simulate(const GridLpvModel& model, const Scenario& sc)
{
    std::vector<std::string> w;
    check_scenario(model, sc, w);
    SimulationResult r = simulate(make_view(model), model.n_x, sc);
    r.warnings = std::move(w);
    return r;
}

SimulationResult simulate(const ReducedLpvModel& model, const Scenario& sc)
{
    std::vector<std::string> w;
    check_scenario(model, sc, w);
    SimulationResult r = simulate(make_view(model), model.n_x, sc);
    r.warnings = std::move(w);
    return r;
}

double relative_l2(const Mat& y1, const Mat& y2)
{
    const double d = (y1 - y2).norm();
    const double n = y1.norm();
    return n > 0.0 ? d / n : d;
}

Scenario triangular_sweep(double lo, double hi, double t_end, double dt, std::function<Vec(double)> u)
{
    Scenario sc;
    const double half = 0.5 * t_end;
    const double slope = half > 0.0 ? (hi - lo) / half : 0.0;
    sc.rho = [=](double t) { return t <= half ? lo + slope * t : std::max(lo, hi - slope * (t - half)); };
    sc.rhodot = [=](double t) { return t < half ? slope : -slope; };
    sc.u = std::move(u);
    sc.t_end = t_end;
    sc.dt = dt;
    return sc;
}

std::string simulation_csv(const SimulationResult& r)
{
    std::ostringstream out;
    out.precision(17);
    out << "t";
    for (Eigen::Index j = 0; j < r.y.cols(); ++j) out << ",y_" << j + 1;
    out << '\n';
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        out << r.t[i];
        for (Eigen::Index j = 0; j < r.y.cols(); ++j) out << ',' << r.y(static_cast<Eigen::Index>(i), j);
        out << '\n';
    }
    return out.str();
}

} // namespace lpvmor
