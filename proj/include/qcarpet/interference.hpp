#pragma once

// Intermode terms, characteristic velocities, and velocity bundles.
//
// Each eigenstate pair (n, m) contributes four sign-resolved interference
// terms. A term's line of constant phase moves with
//     v = -(E_n - E_m) / (s1 p_n(x) + s2 p_m(x)),
// which at a point with V = 0 factors to the degeneracy speed
//     v = -s1 sqrt(E_n) + s2 sqrt(E_m).
// Terms sharing |v| form a bundle beta_v; for the square well the speeds are
// exact integer multiples of v0 = hbar pi / (2 M L) and the terms are plane
// waves with wavenumber k = (pi/L)(s1 n + s2 m). For other models terms are
// evaluated from exact eigenfunction products: each of the four sign terms
// carries a quarter of d_nm psi_n psi_m e^{-i(E_n-E_m)t}, so the bundle
// fields still sum exactly to |Psi|^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "qcarpet/classical.hpp"
#include "qcarpet/errors.hpp"
#include "qcarpet/numerov.hpp"
#include "qcarpet/packet.hpp"
#include "qcarpet/spectrum.hpp"

namespace qcarpet {

enum class TermClass { Fast, Slow, Static };

inline const char* to_string(TermClass c) {
    switch (c) {
        case TermClass::Fast: return "fast";
        case TermClass::Slow: return "slow";
        case TermClass::Static: return "static";
    }
    return "?";
}

struct IntermodeTerm {
    int n = 0, m = 0;
    int sign1 = 1, sign2 = 1; // the WKB branch signs, +1 or -1
    cplx amplitude;           // d_nm times the plane-wave constants (ISW) or d_nm/4
    double degeneracy_speed = 0.0;
    double spatial_wavenumber = std::numeric_limits<double>::quiet_NaN(); // ISW only
    double energy_gap = 0.0;  // E_n - E_m
    TermClass cls = TermClass::Static;
};

struct VelocityBundle {
    double speed = 0.0; // common |degeneracy speed|
    long isw_key = -1;  // |(-s1 n + s2 m)| for the square well, else -1
    std::vector<IntermodeTerm> terms;
    int full_count = 0;
    int conjugate_pair_count = 0;
};

// ---------------------------------------------------------------------------
// Per-term quantities

inline double characteristic_velocity(const SpectrumModel& m, int n, int mm, int s1, int s2,
                                      double x) {
    if (s1 * s1 != 1 || s2 * s2 != 1) throw domain_error("signs must be +1 or -1");
    if (n == mm && s1 != s2)
        throw undefined_velocity_error(
            "n = m with opposite signs: velocity is 0/0 (constant-phase term)");
    const double pn = local_momentum(m, n, x);
    const double pm = local_momentum(m, mm, x);
    if (n == mm) return 0.0;
    return -(energy(m, n) - energy(m, mm)) / (s1 * pn + s2 * pm);
}

// Factored form -s1 sqrt(E_n) + s2 sqrt(E_m), exact integer arithmetic (times
// v0) for the square well.
inline double degeneracy_speed(const SpectrumModel& m, int n, int mm, int s1, int s2) {
    if (s1 * s1 != 1 || s2 * s2 != 1) throw domain_error("signs must be +1 or -1");
    check_quantum_number(m, n);
    check_quantum_number(m, mm);
    if (m.kind == ModelKind::InfiniteSquareWell) {
        const long k = -long(s1) * n + long(s2) * mm;
        return double(k) * isw_velocity_quantum(m);
    }
    const double en = energy(m, n);
    const double em = energy(m, mm);
    if (en < 0 || em < 0) throw domain_error("energy below the V = 0 reference");
    return -s1 * std::sqrt(en) + s2 * std::sqrt(em);
}

// Fast for opposite signs, slow for equal signs, static for n = m (including
// the constant-phase opposite-sign pair).
inline TermClass classify_term(const CoefficientSet&, const SpectrumModel&, int n, int mm, int s1,
                               int s2) {
    if (s1 * s1 != 1 || s2 * s2 != 1) throw domain_error("signs must be +1 or -1");
    if (n == mm) return TermClass::Static;
    return (s1 != s2) ? TermClass::Fast : TermClass::Slow;
}

namespace detail {

inline int sign_rank(int s1, int s2) {
    // (+,+) < (+,-) < (-,+) < (-,-)
    return (s1 < 0 ? 2 : 0) + (s2 < 0 ? 1 : 0);
}

inline bool term_order(const IntermodeTerm& a, const IntermodeTerm& b) {
    return std::tuple(a.n, a.m, sign_rank(a.sign1, a.sign2)) <
           std::tuple(b.n, b.m, sign_rank(b.sign1, b.sign2));
}

inline IntermodeTerm make_term(const SpectrumModel& model, const CoefficientSet& coeffs, int n,
                               int m, int s1, int s2) {
    IntermodeTerm t;
    t.n = n;
    t.m = m;
    t.sign1 = s1;
    t.sign2 = s2;
    const cplx d = coeffs.amplitude(n) * std::conj(coeffs.amplitude(m));
    if (model.kind == ModelKind::InfiniteSquareWell) {
        // psi_n = C(-) e^{ikx} + C(+) e^{-ikx} with C(+-) = ±(i/2) sqrt(2/L);
        // the (s1,s2) product constant is -s1 s2 / (2L)
        t.amplitude = d * (-double(s1 * s2) / (2.0 * model.L));
        t.spatial_wavenumber = (pi / model.L) * (s1 * n + s2 * m);
    } else {
        t.amplitude = d * 0.25;
    }
    t.degeneracy_speed = degeneracy_speed(model, n, m, s1, s2);
    t.energy_gap = energy(model, n) - energy(model, m);
    t.cls = classify_term(coeffs, model, n, m, s1, s2);
    return t;
}

inline void finish_bundle(VelocityBundle& b) {
    std::sort(b.terms.begin(), b.terms.end(), term_order);
    b.full_count = int(b.terms.size());
    // conjugate partner of (n, m, s1, s2) is (m, n, -s1, -s2); the involution
    // has no fixed point, so orbits have size 2
    std::set<std::tuple<int, int, int, int>> seen;
    int pairs = 0;
    for (const auto& t : b.terms) {
        if (seen.count({t.m, t.n, -t.sign1, -t.sign2})) {
            ++pairs;
        } else {
            seen.insert({t.n, t.m, t.sign1, t.sign2});
        }
    }
    if (2 * pairs != b.full_count)
        throw numerical_error("bundle is not closed under conjugate pairing");
    b.conjugate_pair_count = pairs;
}

} // namespace detail

// Enumerate every (n, m, s1, s2) over the coefficient support and group by
// |degeneracy speed|: exact integer keys for the square well, single-linkage
// clustering with absolute tolerance epsilon_v otherwise. Bundles come back
// sorted by speed, the static v = 0 group first.
inline std::vector<VelocityBundle> build_bundles(const SpectrumModel& model,
                                                 const CoefficientSet& coeffs,
                                                 double epsilon_v = 1e-9) {
    static constexpr int signs[2] = {+1, -1};
    std::vector<VelocityBundle> out;
    if (model.kind == ModelKind::InfiniteSquareWell) {
        std::map<long, VelocityBundle> by_key;
        for (const auto& [n, cn] : coeffs.entries())
            for (const auto& [m, cm] : coeffs.entries())
                for (int s1 : signs)
                    for (int s2 : signs) {
                        const long key = std::labs(-long(s1) * n + long(s2) * m);
                        auto& b = by_key[key];
                        b.isw_key = key;
                        b.speed = double(key) * isw_velocity_quantum(model);
                        b.terms.push_back(detail::make_term(model, coeffs, n, m, s1, s2));
                    }
        for (auto& [key, b] : by_key) {
            detail::finish_bundle(b);
            out.push_back(std::move(b));
        }
        return out;
    }

    std::vector<IntermodeTerm> all;
    for (const auto& [n, cn] : coeffs.entries())
        for (const auto& [m, cm] : coeffs.entries())
            for (int s1 : signs)
                for (int s2 : signs)
                    all.push_back(detail::make_term(model, coeffs, n, m, s1, s2));
    std::sort(all.begin(), all.end(), [](const IntermodeTerm& a, const IntermodeTerm& b) {
        const double sa = std::abs(a.degeneracy_speed), sb = std::abs(b.degeneracy_speed);
        if (sa != sb) return sa < sb;
        return detail::term_order(a, b);
    });
    for (std::size_t i = 0; i < all.size();) {
        VelocityBundle b;
        double prev = std::abs(all[i].degeneracy_speed);
        double acc = 0.0;
        std::size_t j = i;
        for (; j < all.size(); ++j) {
            const double s = std::abs(all[j].degeneracy_speed);
            if (j > i && s - prev > epsilon_v) break;
            prev = s;
            acc += s;
            b.terms.push_back(all[j]);
        }
        b.speed = acc / double(j - i);
        detail::finish_bundle(b);
        out.push_back(std::move(b));
        i = j;
    }
    return out;
}

// Number of distinct unordered index pairs {n, m} contributing moving (fast
// or slow) terms to the bundle: the degeneracy multiplicity of its speed.
// Linear spectra can reach 2 here through perfect-square energy ratios
// (E_q = k^2 E_p links the pair (p,q) with the (p,p) or (q,q) family), but
// larger families need the quadratic-spectrum degeneracy.
inline int degenerate_pair_families(const VelocityBundle& b) {
    std::set<std::pair<int, int>> fams;
    for (const auto& t : b.terms)
        if (t.cls != TermClass::Static)
            fams.insert({std::min(t.n, t.m), std::max(t.n, t.m)});
    return int(fams.size());
}

inline const VelocityBundle& find_bundle(const std::vector<VelocityBundle>& bundles, double speed,
                                         double tol = 1e-9) {
    const VelocityBundle* best = nullptr;
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& b : bundles) {
        const double d = std::abs(b.speed - speed);
        if (d < bd) {
            bd = d;
            best = &b;
        }
    }
    if (!best || bd > std::max(tol, 1e-9 * (1.0 + std::abs(speed)))) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "no velocity bundle at speed %.9g", speed);
        throw lookup_error(buf);
    }
    return *best;
}

// beta_v(x, t): sum of the bundle's terms in fixed (n, m, sign) order. The
// imaginary residue is checked against 1e-12 and discarded.
inline double bundle_field(const SpectrumModel& model, const VelocityBundle& bundle, double x,
                           double t) {
    cplx sum = 0.0;
    if (model.kind == ModelKind::InfiniteSquareWell) {
        for (const auto& term : bundle.terms)
            sum += term.amplitude *
                   std::polar(1.0, -(term.spatial_wavenumber * x + term.energy_gap * t));
    } else {
        for (const auto& term : bundle.terms)
            sum += term.amplitude * eigenfunction(model, term.n, x) *
                   eigenfunction(model, term.m, x) * std::polar(1.0, -term.energy_gap * t);
    }
    if (std::abs(sum.imag()) > 1e-12 * (1.0 + std::abs(sum.real())))
        throw numerical_error("bundle field has a non-negligible imaginary residue");
    return sum.real();
}

inline double bundle_field(const SpectrumModel& model, const CoefficientSet& coeffs, double speed,
                           double x, double t, double epsilon_v = 1e-9) {
    const auto bundles = build_bundles(model, coeffs, epsilon_v);
    return bundle_field(model, find_bundle(bundles, speed, epsilon_v), x, t);
}

// Closed-form beta_v(x, 0) for the square well:
//   -(2/L) sum_n Re{c_n c*_{n+v}} cos((2n+v) pi x / L)
//   +(1/L) sum_{n=1}^{v-1} c_n c*_{v-n} cos((2n-v) pi x / L)
// The second ("threshold") sum only exists for v >= 2.
inline double beta_isw_initial(const SpectrumModel& model, const CoefficientSet& coeffs, int v,
                               double x) {
    if (model.kind != ModelKind::InfiniteSquareWell)
        throw unsupported_model_error("closed-form beta_v(x,0) is a square-well result");
    if (v < 1) throw domain_error("v must be a positive integer multiple of v0");
    check_in_domain(model, x);
    const double L = model.L;
    double first = 0.0;
    for (const auto& [n, cn] : coeffs.entries()) {
        const cplx cnv = coeffs.amplitude(n + v);
        if (cnv == cplx{}) continue;
        first += std::real(cn * std::conj(cnv)) * std::cos((2.0 * n + v) * pi * x / L);
    }
    cplx second = 0.0;
    for (int n = 1; n <= v - 1; ++n) {
        const cplx a = coeffs.amplitude(n);
        const cplx b = coeffs.amplitude(v - n);
        if (a == cplx{} || b == cplx{}) continue;
        second += a * std::conj(b) * std::cos((2.0 * n - v) * pi * x / L);
    }
    return -(2.0 / L) * first + (1.0 / L) * second.real();
}

// Line of constant phase for one intermode term, integrated from x0.
// Square-well paths are exact triangle folds (|slope| constant); smooth wells
// integrate dx/dt = v(x) with reflection at the boundary of the region where
// both states are classically allowed.
inline Path constant_phase_trajectory(const SpectrumModel& model, int n, int m, int s1, int s2,
                                      double x0, const std::vector<double>& t_grid) {
    if (n == m && s1 != s2)
        throw undefined_velocity_error("constant term has no defined trajectory velocity");
    if (t_grid.empty()) throw domain_error("t_grid must be nonempty");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw domain_error("t_grid must be ascending");
    check_in_domain(model, x0);

    Path path;
    path.t = t_grid;
    path.x.resize(t_grid.size());

    if (model.kind == ModelKind::InfiniteSquareWell) {
        const double v = degeneracy_speed(model, n, m, s1, s2);
        const double t0 = t_grid.front();
        for (std::size_t i = 0; i < t_grid.size(); ++i)
            path.x[i] = detail::fold_into_well(x0 + v * (t_grid[i] - t0), model.L).first;
        return path;
    }

    if (n == m) { // static: zero velocity
        std::fill(path.x.begin(), path.x.end(), x0);
        return path;
    }

    // region where both states are classically allowed
    const double e_low = std::min(energy(model, n), energy(model, m));
    const double x_well = detail::bisect_root(
        [&](double x) { return potential_derivative(model, x); }, model.x_min, model.x_max);
    auto vme = [&](double x) { return potential_value(model, x) - e_low; };
    double a = model.x_min, b = model.x_max;
    if (vme(model.x_min) > 0) a = detail::bisect_root(vme, model.x_min, x_well);
    if (vme(model.x_max) > 0) b = detail::bisect_root(vme, x_well, model.x_max);
    const double margin = 1e-6 * (b - a);
    a += margin;
    b -= margin;
    double x = std::clamp(x0, a, b);
    if (x != x0 && (x0 < a - margin || x0 > b + margin))
        throw domain_error("x0 outside the classically allowed region of the term");

    const double v_cap = 1e3 * (b - a);
    auto vel = [&](double xx) {
        const double v = characteristic_velocity(model, n, m, s1, s2, std::clamp(xx, a, b));
        return std::clamp(v, -v_cap, v_cap);
    };
    double sigma = 1.0;
    const double dt0 = (b - a) / (8192.0 * std::max(std::abs(vel(0.5 * (a + b))), 1e-12));
    double t = t_grid.front();
    path.x[0] = x;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t;
        const int steps = std::max(1, int(std::ceil(span / dt0)));
        const double h = span / steps;
        for (int s = 0; s < steps; ++s) {
            const double k1 = sigma * vel(x);
            const double k2 = sigma * vel(x + 0.5 * h * k1);
            const double k3 = sigma * vel(x + 0.5 * h * k2);
            const double k4 = sigma * vel(x + h * k3);
            double xn = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (xn > b) {
                xn = b;
                sigma = -sigma;
            } else if (xn < a) {
                xn = a;
                sigma = -sigma;
            }
            x = xn;
        }
        t = t_grid[i];
        path.x[i] = x;
    }
    return path;
}

// Bundle inventory CSV: n,m,sign1,sign2,speed,re_amplitude,im_amplitude,class
inline void export_bundle_inventory(const std::vector<VelocityBundle>& bundles,
                                    std::ostream& os) {
    os << "n,m,sign1,sign2,speed,re_amplitude,im_amplitude,class\n";
    char buf[160];
    for (const auto& b : bundles)
        for (const auto& t : b.terms) {
            std::snprintf(buf, sizeof buf, "%d,%d,%c,%c,%.17g,%.17g,%.17g,%s\n", t.n, t.m,
                          t.sign1 > 0 ? '+' : '-', t.sign2 > 0 ? '+' : '-', t.degeneracy_speed,
                          t.amplitude.real(), t.amplitude.imag(), to_string(t.cls));
            os << buf;
        }
}

inline void export_bundle_inventory(const std::vector<VelocityBundle>& bundles,
                                    const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    export_bundle_inventory(bundles, f);
    if (!f.good()) throw io_error("write failure: " + path);
}

} // namespace qcarpet
