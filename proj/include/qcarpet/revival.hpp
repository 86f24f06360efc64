#pragma once

// Time scales T_j from the Taylor expansion of E_n around the packet center
// (2 pi / T_j = |E^(j)(nbar)| / j!), the Gauss-sum coefficients a_s of
// fractional revivals, the reconstruction
//   Psi(x, (p/q) T_R) = e^{-i E_nbar t} sum_s a_s Psi_cl(x, t + (s/l) T_cl),
// and the velocity-degeneracy analysis of the classicized wavefunction.
//
// The a_s are built by inverse DFT of the quadratic phase sequence
// f_k = e^{-2 pi i k^2 p / q}, which is periodic in k with period
// l = q/2 when 4 | q and l = q otherwise; both defining identities are
// verified before a plan is returned, so no coefficient table is ever
// hard-coded.

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "qcarpet/errors.hpp"
#include "qcarpet/packet.hpp"
#include "qcarpet/spectrum.hpp"

namespace qcarpet {

struct TimeScaleReport {
    double n_bar = 0.0;
    std::vector<double> derivatives; // E^(j)(n_bar), j = 1..J
    std::vector<double> periods;     // T_j = 2 pi j! / |E^(j)|; +inf where E^(j) = 0
    std::vector<int> signs;          // sign of E^(j)
    std::vector<double> ratios;      // T_{j+1}/T_j, from the derivative ratio
    bool hierarchy_ok = false;       // every ratio >= 10

    double t_cl() const { return periods.at(0); }
    double t_r() const { return periods.at(1); }
};

inline TimeScaleReport time_scales(const SpectrumModel& m, double n_bar, int max_order) {
    if (max_order < 2) throw domain_error("time_scales needs max_order >= 2");
    if (n_bar < m.n_min || (m.n_max && n_bar > *m.n_max))
        throw domain_error("n_bar outside the supported range");
    TimeScaleReport r;
    r.n_bar = n_bar;
    double fact = 1.0;
    for (int j = 1; j <= max_order; ++j) {
        fact *= j;
        const double d = spectrum_derivative(m, n_bar, j);
        r.derivatives.push_back(d);
        r.signs.push_back(d > 0 ? 1 : (d < 0 ? -1 : 0));
        r.periods.push_back(d == 0.0 ? std::numeric_limits<double>::infinity()
                                     : 2.0 * pi * fact / std::abs(d));
    }
    if (r.derivatives[0] == 0.0)
        throw degenerate_spectrum_error("E'(n_bar) = 0: T_cl undefined");
    for (int j = 1; j < max_order; ++j) {
        // T_{j+1}/T_j = (j+1) |E^(j)| / |E^(j+1)|, exact where the T's are not
        const double num = std::abs(r.derivatives[j - 1]);
        const double den = std::abs(r.derivatives[j]);
        double ratio;
        if (den == 0.0)
            ratio = std::numeric_limits<double>::infinity();
        else if (num == 0.0)
            ratio = 0.0;
        else
            ratio = (j + 1) * num / den;
        r.ratios.push_back(ratio);
    }
    r.hierarchy_ok = true;
    for (double q : r.ratios)
        if (!(q >= 10.0)) r.hierarchy_ok = false;
    return r;
}

struct HierarchyCheck {
    bool ok = false;
    double min_ratio = 0.0;
    std::string diagnostics;
};

// T_1 < T_2 < ... with every consecutive ratio >= min_ratio. Diagnostics
// report the sufficient condition n_bar >> M for degree-M spectra.
inline HierarchyCheck hierarchy_check(const TimeScaleReport& r, int degree,
                                      double min_ratio = 10.0) {
    HierarchyCheck h;
    h.ok = true;
    h.min_ratio = std::numeric_limits<double>::infinity();
    for (double q : r.ratios) {
        h.min_ratio = std::min(h.min_ratio, q);
        if (!(q >= min_ratio)) h.ok = false;
    }
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "n_bar=%.6g, degree M=%d: n_bar >> M %s; min T_{j+1}/T_j = %.6g (threshold %g)",
                  r.n_bar, degree, (r.n_bar >= 10.0 * degree) ? "satisfied" : "NOT satisfied",
                  h.min_ratio, min_ratio);
    h.diagnostics = buf;
    return h;
}

inline std::string format_time_scales(const TimeScaleReport& r) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "n_bar = %.17g\n", r.n_bar);
    out += buf;
    for (std::size_t j = 0; j < r.derivatives.size(); ++j) {
        std::snprintf(buf, sizeof buf, "E_deriv_%zu = %.17g\n", j + 1, r.derivatives[j]);
        out += buf;
        std::snprintf(buf, sizeof buf, "T_%zu = %.17g\n", j + 1, r.periods[j]);
        out += buf;
    }
    for (std::size_t j = 0; j < r.ratios.size(); ++j) {
        std::snprintf(buf, sizeof buf, "ratio_T%zu_T%zu = %.17g\n", j + 2, j + 1, r.ratios[j]);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "hierarchy_ok = %s\n", r.hierarchy_ok ? "true" : "false");
    out += buf;
    return out;
}

// ---------------------------------------------------------------------------
// Gauss-sum coefficients

struct RevivalPlan {
    long p = 0, q = 1;
    long l = 1;               // q/2 when 4 | q, else q
    std::vector<cplx> a;      // l complex coefficients
    double t_cl = 0.0, t_r = 0.0; // filled when built against a model
};

inline RevivalPlan gauss_coefficients(long p, long q) {
    if (q < 1 || p < 0 || p >= q) throw domain_error("need q >= 1 and 0 <= p < q");
    if (std::gcd(p, q) != 1) throw domain_error("p/q must be in lowest terms (gcd(p,q) = 1)");
    RevivalPlan plan;
    plan.p = p;
    plan.q = q;
    plan.l = (q % 4 == 0) ? q / 2 : q;
    const long l = plan.l;

    // integer phase residues keep k^2 p mod q exact
    auto residue = [&](long k) { return ((k % q) * (k % q) % q * (p % q)) % q; };
    for (long k = 0; k < l; ++k)
        if (residue(k) != residue(k + l))
            throw numerical_error("quadratic phase sequence is not l-periodic");

    auto f = [&](long k) { return std::polar(1.0, -2.0 * pi * double(residue(k)) / double(q)); };
    plan.a.resize(l);
    for (long s = 0; s < l; ++s) {
        cplx acc = 0.0;
        for (long k = 0; k < l; ++k)
            acc += f(k) * std::polar(1.0, 2.0 * pi * double((k * s) % l) / double(l));
        plan.a[s] = acc / double(l);
    }

    double unit = 0.0;
    for (const auto& a : plan.a) unit += std::norm(a);
    if (std::abs(unit - 1.0) > 1e-12)
        throw numerical_error("gauss coefficients fail unitarity self-check");
    for (long k = 0; k < l; ++k) {
        cplx acc = 0.0;
        for (long s = 0; s < l; ++s)
            acc += plan.a[s] * std::polar(1.0, -2.0 * pi * double((k * s) % l) / double(l));
        if (std::abs(acc - f(k)) > 1e-12)
            throw numerical_error("gauss coefficients fail the reconstruction identity");
    }
    return plan;
}

inline void export_revival_plan(const RevivalPlan& plan, std::ostream& os) {
    os << "s,re_a,im_a,abs2\n";
    char buf[120];
    for (std::size_t s = 0; s < plan.a.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", s, plan.a[s].real(),
                      plan.a[s].imag(), std::norm(plan.a[s]));
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Fractional-revival reconstruction

struct Reconstruction {
    std::vector<cplx> values; // sum_s a_s Psi_cl slices, with the global phase
    double l2_error = 0.0;    // phase-aligned, L2-normalized against exact psi
    RevivalPlan plan;
    double t = 0.0; // evaluation time (p/q) T_R
};

inline Reconstruction reconstruct_fractional(const SpectrumModel& m, const CoefficientSet& coeffs,
                                             long p, long q, const std::vector<double>& x_grid) {
    if (x_grid.empty()) throw domain_error("x_grid must be nonempty");
    const int n0 = coeffs.center_index();
    const double w1 = spectrum_derivative(m, n0, 1);
    const double w2 = 0.5 * spectrum_derivative(m, n0, 2);
    if (w1 == 0.0) throw degenerate_spectrum_error("E'(n_bar) = 0: T_cl undefined");
    if (w1 < 0.0) throw domain_error("decreasing spectrum: classicized evolution unsupported");
    if (w2 == 0.0) throw degenerate_spectrum_error("E''(n_bar) = 0: T_R undefined");
    const double t_cl = 2.0 * pi / w1;
    const double t_r = 2.0 * pi / std::abs(w2);
    const double t_star = (double(p) / double(q)) * t_r;

    // for E'' < 0 the quadratic phase runs the other way around the unit circle
    const long p_eff = (w2 > 0) ? p : (q - p) % q;
    Reconstruction rec;
    rec.plan = gauss_coefficients(p_eff, q);
    rec.plan.t_cl = t_cl;
    rec.plan.t_r = t_r;
    rec.t = t_star;
    const long l = rec.plan.l;

    const double e0 = energy(m, n0);
    const cplx global = std::polar(1.0, -e0 * t_star);
    rec.values.resize(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        cplx acc = 0.0;
        for (long s = 0; s < l; ++s)
            acc += rec.plan.a[s] * psi_cl(m, coeffs, x_grid[j], t_star + (double(s) / l) * t_cl);
        rec.values[j] = global * acc;
    }

    cplx overlap = 0.0;
    double norm_exact = 0.0, norm_diff = 0.0;
    std::vector<cplx> exact(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        exact[j] = psi(m, coeffs, x_grid[j], t_star);
        overlap += std::conj(rec.values[j]) * exact[j];
        norm_exact += std::norm(exact[j]);
    }
    const cplx phase = (std::abs(overlap) > 0) ? overlap / std::abs(overlap) : cplx(1.0, 0.0);
    for (std::size_t j = 0; j < x_grid.size(); ++j)
        norm_diff += std::norm(exact[j] - phase * rec.values[j]);
    rec.l2_error = (norm_exact > 0) ? std::sqrt(norm_diff / norm_exact) : 0.0;
    return rec;
}

// ---------------------------------------------------------------------------
// Velocity degeneracy of the classicized wavefunction:
//   v_nm = ±1 (2 pi / T_cl) (n - m) / (sqrt(E_n) ±2 sqrt(E_m))
// The -2 branch is the fast family, the +2 branch the slow one. For pure
// quadratic spectra the slow branch collides exactly when n/m = p/q.

struct VclClass {
    double speed = 0.0;                      // |v|
    std::vector<std::pair<int, int>> pairs;  // contributing (n, m), n > m
    int multiplicity() const { return int(pairs.size()); }
};

struct VclReport {
    double t_cl = 0.0;
    std::vector<VclClass> fast, slow;
    int fast_distinct = 0, slow_distinct = 0;
    int fast_max_multiplicity = 0, slow_max_multiplicity = 0;
    bool quadratic = false;          // E_n proportional to n^2 over the support
    bool slow_ratio_collision = false;
    std::vector<std::array<int, 4>> collisions; // (n, m, p, q) with n/m = p/q
};

namespace detail {

inline std::vector<VclClass> cluster_speeds(std::vector<std::pair<double, std::pair<int, int>>> v,
                                            double rel_tol = 1e-9) {
    std::sort(v.begin(), v.end());
    std::vector<VclClass> out;
    for (std::size_t i = 0; i < v.size();) {
        VclClass c;
        double prev = v[i].first, acc = 0.0;
        std::size_t j = i;
        for (; j < v.size(); ++j) {
            if (j > i && v[j].first - prev > rel_tol * (1.0 + std::abs(v[j].first))) break;
            prev = v[j].first;
            acc += v[j].first;
            c.pairs.push_back(v[j].second);
        }
        c.speed = acc / double(j - i);
        std::sort(c.pairs.begin(), c.pairs.end());
        out.push_back(std::move(c));
        i = j;
    }
    return out;
}

} // namespace detail

inline VclReport vcl_degeneracy(const SpectrumModel& m, const CoefficientSet& coeffs) {
    VclReport rep;
    rep.t_cl = classicized_period(m, coeffs);
    const double scale = 2.0 * pi / rep.t_cl;

    std::vector<std::pair<double, std::pair<int, int>>> fast, slow;
    const auto& es = coeffs.entries();
    for (std::size_t i = 0; i < es.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const int n = es[i].first, mm = es[j].first;
            const double rn = std::sqrt(energy(m, n)), rm = std::sqrt(energy(m, mm));
            fast.push_back({scale * (n - mm) / (rn - rm), {n, mm}});
            slow.push_back({scale * (n - mm) / (rn + rm), {n, mm}});
        }
    rep.fast = detail::cluster_speeds(std::move(fast));
    rep.slow = detail::cluster_speeds(std::move(slow));
    rep.fast_distinct = int(rep.fast.size());
    rep.slow_distinct = int(rep.slow.size());
    for (const auto& c : rep.fast)
        rep.fast_max_multiplicity = std::max(rep.fast_max_multiplicity, c.multiplicity());
    for (const auto& c : rep.slow)
        rep.slow_max_multiplicity = std::max(rep.slow_max_multiplicity, c.multiplicity());

    // pure-quadratic test: E_n / n^2 constant across the support
    bool quad = true;
    double ref = 0.0;
    bool have_ref = false;
    for (const auto& [n, c] : es) {
        if (n == 0) {
            quad = false;
            break;
        }
        const double r = energy(m, n) / (double(n) * n);
        if (!have_ref) {
            ref = r;
            have_ref = true;
        } else if (std::abs(r - ref) > 1e-12 * std::abs(ref)) {
            quad = false;
            break;
        }
    }
    rep.quadratic = quad && have_ref;
    if (rep.quadratic) {
        std::map<std::pair<long, long>, std::vector<std::pair<int, int>>> by_ratio;
        for (std::size_t i = 0; i < es.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const long n = es[i].first, mm = es[j].first;
                const long g = std::gcd(n, mm);
                by_ratio[{n / g, mm / g}].push_back({int(n), int(mm)});
            }
        for (const auto& [ratio, prs] : by_ratio)
            if (prs.size() > 1) {
                rep.slow_ratio_collision = true;
                for (std::size_t i = 1; i < prs.size(); ++i)
                    rep.collisions.push_back(
                        {prs[0].first, prs[0].second, prs[i].first, prs[i].second});
            }
    }
    return rep;
}

} // namespace qcarpet
