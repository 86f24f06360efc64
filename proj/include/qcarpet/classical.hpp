#pragma once

// Classical trajectories x(t) at fixed energy. With hbar = 1, 2M = 1 the
// equations of motion are xdot = 2p, pdot = -V'(x), i.e. dx/dt = ±2 sqrt(E-V).
// Square-well paths are exact triangle folds; smooth wells use fixed-step RK4
// on the (x, p) system, which passes through turning points smoothly.

#include <cmath>
#include <vector>

#include "qcarpet/errors.hpp"
#include "qcarpet/spectrum.hpp"

namespace qcarpet {

struct Path {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> p; // momentum sqrt(E-V) with sign; empty when unused
};

namespace detail {

// fold s onto [0, L] as a triangle wave; returns position and slope sign
inline std::pair<double, double> fold_into_well(double s, double L) {
    double y = std::fmod(s, 2.0 * L);
    if (y < 0.0) y += 2.0 * L;
    if (y <= L) return {y, +1.0};
    return {2.0 * L - y, -1.0};
}

} // namespace detail

inline Path classical_trajectory(const SpectrumModel& m, double E, double x0, int direction,
                                 const std::vector<double>& t_grid) {
    if (!m.has_position_space())
        throw unsupported_model_error("polynomial spectrum has no classical dynamics");
    if (t_grid.empty()) throw domain_error("t_grid must be nonempty");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw domain_error("t_grid must be ascending");
    if (direction != 1 && direction != -1) throw domain_error("direction must be +1 or -1");
    check_in_domain(m, x0);
    const double v_floor = min_potential(m);
    if (!(E > v_floor)) throw domain_error("energy must exceed the potential minimum");
    const double V0 = potential_value(m, x0);
    if (E < V0 - 1e-12 * std::max(1.0, std::abs(E)))
        throw domain_error("E < V(x0): start point classically forbidden");

    Path path;
    path.t = t_grid;
    path.x.resize(t_grid.size());
    path.p.resize(t_grid.size());

    if (m.kind == ModelKind::InfiniteSquareWell) {
        const double v = 2.0 * std::sqrt(E);
        const double t0 = t_grid.front();
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            const auto [x, slope] = detail::fold_into_well(
                x0 + direction * v * (t_grid[i] - t0), m.L);
            path.x[i] = x;
            path.p[i] = 0.5 * direction * slope * v;
        }
        return path;
    }

    // RK4 on (x, p)
    const double v_max = 2.0 * std::sqrt(E - v_floor) + 1e-30;
    const double dt0 = (m.x_max - m.x_min) / (4096.0 * v_max);
    auto rhs = [&](double x, double p, double& dx, double& dp) {
        dx = 2.0 * p;
        dp = -potential_derivative(m, x);
    };
    double x = x0;
    double p = direction * std::sqrt(std::max(E - V0, 0.0));
    double t = t_grid.front();
    path.x[0] = x;
    path.p[0] = p;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t;
        const int steps = std::max(1, int(std::ceil(span / dt0)));
        const double h = span / steps;
        for (int s = 0; s < steps; ++s) {
            double k1x, k1p, k2x, k2p, k3x, k3p, k4x, k4p;
            rhs(x, p, k1x, k1p);
            rhs(x + 0.5 * h * k1x, p + 0.5 * h * k1p, k2x, k2p);
            rhs(x + 0.5 * h * k2x, p + 0.5 * h * k2p, k3x, k3p);
            rhs(x + h * k3x, p + h * k3p, k4x, k4p);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        }
        t = t_grid[i];
        path.x[i] = x;
        path.p[i] = p;
    }
    return path;
}

} // namespace qcarpet
