#pragma once

// Numerov shooting solver for bound states: node-counting bracketer plus
// energy bisection, two-sided integration joined at the outer turning point.
// Backs eigenfunction() for the models without closed-form states.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "qcarpet/errors.hpp"
#include "qcarpet/spectrum.hpp"

namespace qcarpet {

struct EigenState {
    int n = 0;
    double energy = 0.0;
    std::vector<double> x;   // uniform grid
    std::vector<double> psi; // normalized, outer (right) lobe positive
    double normalization_residual = 0.0;

    // Linear interpolation; 0 beyond the sampled domain (decayed tail).
    double value(double xq) const {
        if (x.size() < 2) return 0.0;
        const double h = x[1] - x[0];
        const double s = (xq - x.front()) / h;
        if (s <= 0.0) return (s > -0.5) ? psi.front() : 0.0;
        const auto i = static_cast<std::size_t>(s);
        if (i + 1 >= x.size()) return (s < double(x.size()) - 0.5) ? psi.back() : 0.0;
        const double f = s - double(i);
        return psi[i] * (1.0 - f) + psi[i + 1] * f;
    }
};

namespace detail {

struct eigen_cache {
    std::mutex mu;
    std::vector<double> x, V;
    std::map<int, std::shared_ptr<const EigenState>> states;
};

inline eigen_cache& cache_for(const SpectrumModel& m) {
    static std::mutex creation_mu;
    std::scoped_lock lk(creation_mu);
    if (!m.eigen_cache) m.eigen_cache = std::make_shared<eigen_cache>();
    return *m.eigen_cache;
}

inline void ensure_grid(const SpectrumModel& m, eigen_cache& c) {
    if (!c.x.empty()) return;
    const int N = std::max(m.numerov.points, 16);
    const double h = (m.x_max - m.x_min) / (N - 1);
    c.x.resize(N);
    c.V.resize(N);
    for (int i = 0; i < N; ++i) {
        c.x[i] = m.x_min + i * h;
        c.V[i] = potential_value(m, c.x[i]);
    }
}

// Forward Numerov sweep over [i0, i1] (inclusive), seeds already placed at
// the first two indices of the sweep. `dir` is +1 or -1.
inline void numerov_sweep(const std::vector<double>& V, double E, double h, int i0, int i1,
                          int dir, std::vector<double>& psi) {
    const double h12 = h * h / 12.0;
    auto g = [&](int i) { return E - V[i]; };
    for (int i = i0 + 2 * dir; (dir > 0) ? i <= i1 : i >= i1; i += dir) {
        const int im1 = i - dir, im2 = i - 2 * dir;
        const double num =
            2.0 * psi[im1] * (1.0 - 5.0 * h12 * g(im1)) - psi[im2] * (1.0 + h12 * g(im2));
        psi[i] = num / (1.0 + h12 * g(i));
        if (std::abs(psi[i]) > 1e200) {
            // rescale the sweep so the forbidden-region growth never overflows
            for (int j = (dir > 0) ? 0 : int(psi.size()) - 1; (dir > 0) ? j <= i : j >= i;
                 j += dir)
                psi[j] *= 1e-200;
        }
    }
}

inline int count_nodes(const std::vector<double>& x, const std::vector<double>& V, double E) {
    const int N = int(x.size());
    const double h = x[1] - x[0];
    std::vector<double> psi(N, 0.0);
    psi[0] = 0.0;
    psi[1] = 1e-8 * std::exp(-std::sqrt(std::max(V[1] - E, 0.0)) * h);
    numerov_sweep(V, E, h, 0, N - 1, +1, psi);
    int nodes = 0;
    double prev = 0.0;
    for (int i = 1; i < N; ++i) {
        const double v = psi[i];
        if (v == 0.0) continue;
        if (prev != 0.0 && (prev > 0) != (v > 0)) ++nodes;
        prev = v;
    }
    return nodes;
}

} // namespace detail

// Solve for the n-th bound state on the model's configured grid.
inline EigenState solve_numerov(const SpectrumModel& m, int n) {
    if (!m.has_position_space())
        throw unsupported_model_error("polynomial spectrum has no eigenfunctions");
    check_quantum_number(m, n);
    auto& cache = detail::cache_for(m);
    std::scoped_lock lk(cache.mu);
    if (auto it = cache.states.find(n); it != cache.states.end()) return *it->second;
    detail::ensure_grid(m, cache);

    const auto& x = cache.x;
    const auto& V = cache.V;
    const int N = int(x.size());
    const double h = x[1] - x[0];
    const int target_nodes = (m.kind == ModelKind::InfiniteSquareWell) ? n - 1 : n;

    const double v_floor = *std::min_element(V.begin(), V.end());
    const double e_cap = (m.kind == ModelKind::InfiniteSquareWell)
                             ? std::numeric_limits<double>::infinity()
                             : std::min(V.front(), V.back());

    auto above = [&](double E) { return detail::count_nodes(x, V, E) > target_nodes; };

    // bracket the node-count jump by doubling upward from the well floor
    double e_lo = v_floor + 1e-9 * (1.0 + std::abs(v_floor));
    if (above(e_lo)) throw numerical_error("node count already exceeded at the well floor");
    double de = std::isfinite(e_cap) ? (e_cap - v_floor) / 1024.0 : 1.0;
    double e_hi = e_lo;
    bool bracketed = false;
    for (int it = 0; it < 80; ++it) {
        e_hi = e_lo + de;
        if (std::isfinite(e_cap) && e_hi >= e_cap) {
            e_hi = e_cap - 1e-9 * (1.0 + std::abs(e_cap));
            if (above(e_hi)) {
                bracketed = true;
                break;
            }
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "bracketing failure: energy window [%.6g, %.6g] exhausted for n=%d",
                          v_floor, e_cap, n);
            throw numerical_error(buf);
        }
        if (above(e_hi)) {
            bracketed = true;
            break;
        }
        de *= 2.0;
    }
    if (!bracketed) throw numerical_error("bracketing failure: node count never increased");

    int iters = 0;
    while (e_hi - e_lo > m.numerov.energy_tolerance) {
        if (++iters > m.numerov.max_iterations) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "bisection did not converge for n=%d: window [%.12g, %.12g]", n, e_lo,
                          e_hi);
            throw numerical_error(buf);
        }
        const double mid = 0.5 * (e_lo + e_hi);
        if (mid <= e_lo || mid >= e_hi) break; // double-precision floor
        (above(mid) ? e_hi : e_lo) = mid;
    }
    const double E = 0.5 * (e_lo + e_hi);

    // two-sided integration, matched at the outer turning point
    int m_idx = 3;
    for (int i = N - 4; i >= 3; --i)
        if (E >= V[i]) {
            m_idx = i;
            break;
        }
    m_idx = std::clamp(m_idx, 3, N - 4);

    const int l_end = std::min(m_idx + 8, N - 1);
    const int r_end = std::max(m_idx - 8, 0);
    std::vector<double> pl(N, 0.0), pr(N, 0.0);
    pl[0] = 0.0;
    pl[1] = 1e-8 * std::exp(-std::sqrt(std::max(V[1] - E, 0.0)) * h);
    detail::numerov_sweep(V, E, h, 0, l_end, +1, pl);
    pr[N - 1] = 0.0;
    pr[N - 2] = 1e-8 * std::exp(-std::sqrt(std::max(V[N - 2] - E, 0.0)) * h);
    detail::numerov_sweep(V, E, h, N - 1, r_end, -1, pr);

    int mj = m_idx;
    double best = std::abs(pl[m_idx] * pr[m_idx]);
    for (int i = std::max(r_end, 3); i <= std::min(l_end, N - 4); ++i) {
        const double q = std::abs(pl[i] * pr[i]);
        if (q > best) {
            best = q;
            mj = i;
        }
    }
    if (pl[mj] == 0.0 || pr[mj] == 0.0)
        throw numerical_error("matching point degenerate; wavefunction assembly failed");

    EigenState st;
    st.n = n;
    st.energy = E;
    st.x = x;
    st.psi.resize(N);
    const double scale = pr[mj] / pl[mj];
    for (int i = 0; i < N; ++i) st.psi[i] = (i <= mj) ? pl[i] * scale : pr[i];

    auto quad = [&](const std::vector<double>& f) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) {
            const double w = (i == 0 || i == N - 1) ? 0.5 * h : h;
            s += w * f[i] * f[i];
        }
        return s;
    };
    double norm = std::sqrt(quad(st.psi));
    if (!(norm > 0)) throw numerical_error("zero-norm solution");
    double peak = 0.0;
    for (double v : st.psi) peak = std::max(peak, std::abs(v));
    int outer = N - 1;
    while (outer > 0 && std::abs(st.psi[outer]) < 0.2 * peak) --outer;
    const double sign = (st.psi[outer] < 0.0) ? -1.0 : 1.0;
    for (double& v : st.psi) v /= sign * norm;

    int nodes = 0;
    double prev = 0.0;
    for (int i = 0; i < N; ++i) {
        const double v = st.psi[i];
        if (std::abs(v) <= 1e-9 * peak / norm) continue;
        if (prev != 0.0 && (prev > 0) != (v > 0)) ++nodes;
        prev = v;
    }
    if (nodes != target_nodes) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "assembled state for n=%d has %d nodes (expected %d), E=%.12g", n, nodes,
                      target_nodes, E);
        throw numerical_error(buf);
    }
    st.normalization_residual = std::abs(quad(st.psi) - 1.0);

    auto sp = std::make_shared<const EigenState>(std::move(st));
    cache.states.emplace(n, sp);
    return *sp;
}

// Cached handle; solves on first use. Thread-safe.
inline std::shared_ptr<const EigenState> cached_state(const SpectrumModel& m, int n) {
    {
        auto& cache = detail::cache_for(m);
        std::scoped_lock lk(cache.mu);
        if (auto it = cache.states.find(n); it != cache.states.end()) return it->second;
    }
    solve_numerov(m, n);
    auto& cache = detail::cache_for(m);
    std::scoped_lock lk(cache.mu);
    return cache.states.at(n);
}

// psi_n(x): closed form for ISW and SHO, Numerov interpolation otherwise.
inline double eigenfunction(const SpectrumModel& m, int n, double x) {
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell:
        case ModelKind::HarmonicOscillator:
            return eigenfunction_analytic(m, n, x);
        case ModelKind::Morse:
        case ModelKind::RosenMorseI: {
            check_quantum_number(m, n);
            check_in_domain(m, x);
            return cached_state(m, n)->value(x);
        }
        case ModelKind::PolynomialSpectrum:
            break;
    }
    throw unsupported_model_error("polynomial spectrum has no eigenfunctions");
}

} // namespace qcarpet
