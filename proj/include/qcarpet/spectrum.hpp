#pragma once

// Potentials, energy spectra and analytic eigenfunctions for the supported
// one-dimensional bound systems.
//
// Natural units throughout: hbar = 1, 2M = 1, so H = p^2 + V(x),
// p_n(x) = sqrt(E_n - V(x)) and the classical velocity is dx/dt = 2p.
// The particle mass enters only through display quantities such as
// v0 = hbar*pi/(2*M*L); the default M = 1/2 gives v0 = pi/L.

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qcarpet/errors.hpp"

namespace qcarpet {

inline constexpr double pi = std::numbers::pi;

enum class ModelKind {
    InfiniteSquareWell,
    HarmonicOscillator,
    Morse,
    RosenMorseI,
    PolynomialSpectrum,
};

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::InfiniteSquareWell: return "infinite_square_well";
        case ModelKind::HarmonicOscillator: return "harmonic_oscillator";
        case ModelKind::Morse: return "morse";
        case ModelKind::RosenMorseI: return "rosen_morse1";
        case ModelKind::PolynomialSpectrum: return "polynomial";
    }
    return "?";
}

// One a_m * n^power term of a polynomial spectrum; power may be negative.
struct SpectrumTerm {
    int power = 1;
    double coefficient = 0.0;
};

struct NumerovSettings {
    int points = 4096;              // uniform grid size
    double energy_tolerance = 1e-10; // absolute bisection exit
    int max_iterations = 256;
};

namespace detail {
struct eigen_cache; // defined in numerov.hpp
}

class SpectrumModel {
public:
    ModelKind kind = ModelKind::InfiniteSquareWell;

    double L = pi;       // ISW well width
    double mass = 0.5;   // enters v0 = hbar*pi/(2*M*L) only
    double omega = 1.0;  // SHO angular frequency
    double A = 0.0, B = 0.0, alpha = 1.0; // Morse / Rosen-Morse I shape
    std::vector<SpectrumTerm> terms;      // polynomial spectrum

    double x_min = 0.0, x_max = pi; // domain on which V and psi_n live
    int n_min = 1;                  // lowest valid quantum number
    std::optional<int> n_max;       // highest valid quantum number, if bounded

    NumerovSettings numerov;

    // Lazily created by the Numerov solver; copies of a model share it.
    mutable std::shared_ptr<detail::eigen_cache> eigen_cache;

    static SpectrumModel infinite_square_well(double L = pi, double mass = 0.5);
    static SpectrumModel harmonic(double omega = 1.0, int n_cap = 32);
    static SpectrumModel morse(double A = 20.0, double B = 5.0, double alpha = 1.0);
    static SpectrumModel rosen_morse1(double A = 20.0, double B = 5.0,
                                      double alpha = 1.0, int n_cap = 40);
    static SpectrumModel polynomial(std::vector<SpectrumTerm> terms);

    bool has_position_space() const {
        return kind != ModelKind::PolynomialSpectrum;
    }
};

inline std::string describe(const SpectrumModel& m) {
    char buf[160];
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell:
            std::snprintf(buf, sizeof buf, "isw(L=%.9g)", m.L);
            break;
        case ModelKind::HarmonicOscillator:
            std::snprintf(buf, sizeof buf, "sho(omega=%.9g)", m.omega);
            break;
        case ModelKind::Morse:
            std::snprintf(buf, sizeof buf, "morse(A=%.9g,B=%.9g,alpha=%.9g)", m.A, m.B, m.alpha);
            break;
        case ModelKind::RosenMorseI:
            std::snprintf(buf, sizeof buf, "rosen_morse1(A=%.9g,B=%.9g,alpha=%.9g)", m.A, m.B,
                          m.alpha);
            break;
        case ModelKind::PolynomialSpectrum:
            std::snprintf(buf, sizeof buf, "polynomial(%zu terms)", m.terms.size());
            break;
    }
    return buf;
}

// ---------------------------------------------------------------------------
// Quantum-number validation

inline void check_quantum_number(const SpectrumModel& m, int n) {
    if (n < m.n_min || (m.n_max && n > *m.n_max)) {
        char buf[128];
        if (m.n_max)
            std::snprintf(buf, sizeof buf, "quantum number n=%d outside valid range [%d, %d] for %s",
                          n, m.n_min, *m.n_max, to_string(m.kind));
        else
            std::snprintf(buf, sizeof buf, "quantum number n=%d outside valid range [%d, inf) for %s",
                          n, m.n_min, to_string(m.kind));
        throw domain_error(buf);
    }
}

inline void check_in_domain(const SpectrumModel& m, double x) {
    if (!m.has_position_space())
        throw unsupported_model_error("model has no position-space representation");
    const double slack = 1e-12 * (1.0 + std::abs(m.x_max - m.x_min));
    if (!(x >= m.x_min - slack && x <= m.x_max + slack)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "x=%.9g outside domain [%.9g, %.9g]", x, m.x_min, m.x_max);
        throw domain_error(buf);
    }
}

// ---------------------------------------------------------------------------
// Spectra

inline double energy(const SpectrumModel& m, int n) {
    check_quantum_number(m, n);
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell: {
            const double p = n * (pi / m.L);
            return p * p; // squared this way so local_momentum^2 == E bit-exactly
        }
        case ModelKind::HarmonicOscillator:
            return m.omega * (n + 0.5);
        case ModelKind::Morse: {
            const double d = m.A - m.alpha * n;
            return m.A * m.A - d * d;
        }
        case ModelKind::RosenMorseI: {
            const double u = m.A + m.alpha * n;
            return u * u - m.A * m.A + (m.B / m.A) * (m.B / m.A) - (m.B / u) * (m.B / u);
        }
        case ModelKind::PolynomialSpectrum: {
            double e = 0.0;
            for (const auto& t : m.terms) e += t.coefficient * std::pow(double(n), t.power);
            return e;
        }
    }
    throw domain_error("unknown model kind");
}

// d^j E / dn^j at (possibly non-integer) n, from the closed-form spectra.
inline double spectrum_derivative(const SpectrumModel& m, double n, int j) {
    if (j < 1) throw domain_error("derivative order must be >= 1");
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell: {
            const double k = pi / m.L;
            if (j == 1) return 2.0 * k * k * n;
            if (j == 2) return 2.0 * k * k;
            return 0.0;
        }
        case ModelKind::HarmonicOscillator:
            return j == 1 ? m.omega : 0.0;
        case ModelKind::Morse:
            if (j == 1) return 2.0 * m.alpha * (m.A - m.alpha * n);
            if (j == 2) return -2.0 * m.alpha * m.alpha;
            return 0.0;
        case ModelKind::RosenMorseI: {
            // E(u) = u^2 - A^2 + (B/A)^2 - B^2 u^-2,  u = A + alpha*n.
            const double u = m.A + m.alpha * n;
            double d = 0.0;
            if (j == 1) d = 2.0 * u;
            if (j == 2) d = 2.0;
            // d^j/du^j (u^-2) = (-1)^j (j+1)! u^-(j+2)
            double fact = 1.0;
            for (int i = 2; i <= j + 1; ++i) fact *= i;
            const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
            d += -(m.B * m.B) * sgn * fact * std::pow(u, -(j + 2));
            return d * std::pow(m.alpha, j);
        }
        case ModelKind::PolynomialSpectrum: {
            // falling factorial p(p-1)...(p-j+1); valid for negative powers too
            double d = 0.0;
            for (const auto& t : m.terms) {
                double fall = 1.0;
                for (int i = 0; i < j; ++i) fall *= double(t.power - i);
                if (fall == 0.0) continue;
                d += t.coefficient * fall * std::pow(double(n), t.power - j);
            }
            return d;
        }
    }
    throw domain_error("unknown model kind");
}

// ---------------------------------------------------------------------------
// Potentials

inline double potential_value(const SpectrumModel& m, double x) {
    check_in_domain(m, x);
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell:
            return 0.0; // flat interior; walls live at the domain boundary
        case ModelKind::HarmonicOscillator: {
            const double w = 0.5 * m.omega * x;
            return w * w; // V = (omega x / 2)^2 gives E_n = omega (n + 1/2)
        }
        case ModelKind::Morse: {
            const double e = std::exp(-m.alpha * x);
            return m.A * m.A + m.B * m.B * e * e - 2.0 * m.B * (m.A + 0.5 * m.alpha) * e;
        }
        case ModelKind::RosenMorseI: {
            const double s = std::sin(m.alpha * x);
            const double c = std::cos(m.alpha * x);
            return m.A * (m.A - m.alpha) / (s * s) + 2.0 * m.B * c / s - m.A * m.A +
                   (m.B / m.A) * (m.B / m.A);
        }
        case ModelKind::PolynomialSpectrum:
            break;
    }
    throw unsupported_model_error("polynomial spectrum has no potential");
}

inline double min_potential(const SpectrumModel& m) {
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell:
        case ModelKind::HarmonicOscillator:
            return 0.0;
        case ModelKind::Morse: {
            const double h = m.A + 0.5 * m.alpha;
            return m.A * m.A - h * h;
        }
        case ModelKind::RosenMorseI: {
            // well minimum at cot(alpha x0) = -B / (A (A - alpha))
            const double c = -m.B / (m.A * (m.A - m.alpha));
            const double x0 = std::atan2(1.0, c) / m.alpha;
            return potential_value(m, x0);
        }
        case ModelKind::PolynomialSpectrum:
            break;
    }
    throw unsupported_model_error("polynomial spectrum has no potential");
}

// ---------------------------------------------------------------------------
// Analytic eigenfunctions (ISW, SHO). Morse / Rosen-Morse I states come from
// the Numerov solver; see numerov.hpp for the dispatching eigenfunction().

inline double eigenfunction_analytic(const SpectrumModel& m, int n, double x) {
    check_quantum_number(m, n);
    check_in_domain(m, x);
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell:
            return std::sqrt(2.0 / m.L) * std::sin(n * pi * x / m.L);
        case ModelKind::HarmonicOscillator: {
            // psi_n(x) = a^{1/4} phi_n(sqrt(a) x), a = omega/2, via the
            // normalized Hermite-function recurrence (stable to large n).
            const double a = 0.5 * m.omega;
            const double xi = std::sqrt(a) * x;
            double f0 = std::pow(pi, -0.25) * std::exp(-0.5 * xi * xi);
            if (n == 0) return std::pow(a, 0.25) * f0;
            double f1 = std::sqrt(2.0) * xi * f0;
            for (int k = 1; k < n; ++k) {
                const double f2 =
                    std::sqrt(2.0 / (k + 1.0)) * xi * f1 - std::sqrt(k / (k + 1.0)) * f0;
                f0 = f1;
                f1 = f2;
            }
            return std::pow(a, 0.25) * f1;
        }
        default:
            break;
    }
    throw unsupported_model_error("no analytic eigenfunction for this model");
}

// sqrt(E_n - V(x)); 0 exactly at a turning point, error in the forbidden region.
inline double local_momentum(const SpectrumModel& m, int n, double x) {
    const double E = energy(m, n);
    if (m.kind == ModelKind::InfiniteSquareWell) {
        check_in_domain(m, x);
        return n * (pi / m.L); // V = 0 inside; p^2 reproduces E bit-exactly
    }
    const double V = potential_value(m, x);
    const double tol = 1e-12 * std::max(1.0, std::abs(E));
    if (E - V > tol) return std::sqrt(E - V);
    if (E - V >= -tol) return 0.0;
    char buf[96];
    std::snprintf(buf, sizeof buf, "classically forbidden: E_n=%.9g < V(%.9g)=%.9g", E, x, V);
    throw forbidden_region_error(buf, std::sqrt(V - E));
}

// dV/dx, analytic.
inline double potential_derivative(const SpectrumModel& m, double x) {
    check_in_domain(m, x);
    switch (m.kind) {
        case ModelKind::InfiniteSquareWell:
            return 0.0;
        case ModelKind::HarmonicOscillator:
            return 0.5 * m.omega * m.omega * x;
        case ModelKind::Morse: {
            const double e = std::exp(-m.alpha * x);
            return -2.0 * m.alpha * m.B * m.B * e * e +
                   2.0 * m.alpha * m.B * (m.A + 0.5 * m.alpha) * e;
        }
        case ModelKind::RosenMorseI: {
            const double s = std::sin(m.alpha * x);
            const double csc2 = 1.0 / (s * s);
            const double cot = std::cos(m.alpha * x) / s;
            return -2.0 * m.alpha * csc2 * (m.A * (m.A - m.alpha) * cot + m.B);
        }
        case ModelKind::PolynomialSpectrum:
            break;
    }
    throw unsupported_model_error("polynomial spectrum has no potential");
}

// ISW characteristic speed hbar*pi/(2*M*L); the natural velocity quantum.
inline double isw_velocity_quantum(const SpectrumModel& m) {
    if (m.kind != ModelKind::InfiniteSquareWell)
        throw unsupported_model_error("v0 is an ISW quantity");
    return pi / (2.0 * m.mass * m.L);
}

// ---------------------------------------------------------------------------
// Factories

namespace detail {

// March outward from x_turn until the accumulated WKB suppression
// integral(kappa dx) with kappa = sqrt(V - E) exceeds `budget`.
template <class Pot>
double extend_tail(Pot&& V, double E, double x_turn, double step, double limit, double budget) {
    double acc = 0.0;
    double x = x_turn;
    double k_prev = 0.0;
    const int dir = (limit > x_turn) ? 1 : -1;
    for (int it = 0; it < 2000000; ++it) {
        double h = step;
        if (dir > 0 && x + h > limit) h = limit - x;
        if (dir < 0 && x - h < limit) h = x - limit;
        if (h <= 0.0) return limit;
        const double xn = x + dir * h;
        const double k = std::sqrt(std::max(V(xn) - E, 0.0));
        acc += 0.5 * (k_prev + k) * h;
        x = xn;
        k_prev = k;
        if (acc >= budget) return x;
    }
    return x;
}

template <class F>
double bisect_root(F&& f, double lo, double hi, double tol = 1e-13) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < tol * (1.0 + std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

inline SpectrumModel SpectrumModel::infinite_square_well(double L, double mass) {
    if (!(L > 0)) throw domain_error("ISW requires L > 0");
    SpectrumModel m;
    m.kind = ModelKind::InfiniteSquareWell;
    m.L = L;
    m.mass = mass;
    m.x_min = 0.0;
    m.x_max = L;
    m.n_min = 1;
    return m;
}

inline SpectrumModel SpectrumModel::harmonic(double omega, int n_cap) {
    if (!(omega > 0)) throw domain_error("SHO requires omega > 0");
    SpectrumModel m;
    m.kind = ModelKind::HarmonicOscillator;
    m.omega = omega;
    m.n_min = 0;
    // domain: turning point of E(n_cap) plus a tail worth ~e^-12 suppression
    const double e_top = omega * (n_cap + 0.5);
    const double x_turn = 2.0 * std::sqrt(e_top) / omega;
    auto V = [&](double x) { return 0.25 * omega * omega * x * x; };
    const double r =
        detail::extend_tail(V, e_top, x_turn, x_turn / 2048.0, 20.0 * x_turn, 12.0);
    m.x_min = -r;
    m.x_max = r;
    return m;
}

inline SpectrumModel SpectrumModel::morse(double A, double B, double alpha) {
    if (!(A > 0) || !(B > 0) || !(alpha > 0)) throw domain_error("Morse requires A, B, alpha > 0");
    SpectrumModel m;
    m.kind = ModelKind::Morse;
    m.A = A;
    m.B = B;
    m.alpha = alpha;
    m.n_min = 0;
    m.n_max = static_cast<int>(std::ceil(A / alpha)) - 1; // bound states need A - alpha*n > 0
    if (*m.n_max < 0) throw domain_error("Morse parameters support no bound state");

    auto V = [&](double x) {
        const double e = std::exp(-alpha * x);
        return A * A + B * B * e * e - 2.0 * B * (A + 0.5 * alpha) * e;
    };
    const double e_top = [&] {
        const double d = A - alpha * *m.n_max;
        return A * A - d * d;
    }();
    const double x_well = -std::log((A + 0.5 * alpha) / B) / alpha;
    const double lo_turn =
        detail::bisect_root([&](double x) { return V(x) - e_top; }, x_well - 60.0 / alpha, x_well);
    const double hi_turn =
        detail::bisect_root([&](double x) { return V(x) - e_top; }, x_well, x_well + 400.0 / alpha);
    const double span = hi_turn - lo_turn;
    m.x_min = detail::extend_tail(V, e_top, lo_turn, span / 2048.0, lo_turn - 60.0 / alpha, 12.0);
    m.x_max = detail::extend_tail(V, e_top, hi_turn, span / 256.0, hi_turn + 400.0 / alpha, 12.0);
    return m;
}

inline SpectrumModel SpectrumModel::rosen_morse1(double A, double B, double alpha, int n_cap) {
    if (!(A > alpha) || !(alpha > 0) || !(B > 0))
        throw domain_error("Rosen-Morse I requires A > alpha > 0 and B > 0");
    SpectrumModel m;
    m.kind = ModelKind::RosenMorseI;
    m.A = A;
    m.B = B;
    m.alpha = alpha;
    m.n_min = 0;
    m.n_max = n_cap;

    auto V = [&](double x) {
        const double s = std::sin(alpha * x);
        return A * (A - alpha) / (s * s) + 2.0 * B * std::cos(alpha * x) / s - A * A +
               (B / A) * (B / A);
    };
    const double u = A + alpha * n_cap;
    const double e_top = u * u - A * A + (B / A) * (B / A) - (B / u) * (B / u);
    const double wall = pi / alpha;
    const double x0 = std::atan2(1.0, -B / (A * (A - alpha))) / alpha;
    const double lo_turn =
        detail::bisect_root([&](double x) { return V(x) - e_top; }, 1e-9 * wall, x0);
    const double hi_turn =
        detail::bisect_root([&](double x) { return V(x) - e_top; }, x0, wall * (1.0 - 1e-9));
    const double span = hi_turn - lo_turn;
    m.x_min = detail::extend_tail(V, e_top, lo_turn, span / 8192.0, 1e-9 * wall, 12.0);
    m.x_max = detail::extend_tail(V, e_top, hi_turn, span / 8192.0, wall * (1.0 - 1e-9), 12.0);
    return m;
}

inline SpectrumModel SpectrumModel::polynomial(std::vector<SpectrumTerm> terms) {
    if (terms.empty()) throw domain_error("polynomial spectrum needs at least one term");
    SpectrumModel m;
    m.kind = ModelKind::PolynomialSpectrum;
    m.terms = std::move(terms);
    m.n_min = 1;
    m.x_min = m.x_max = 0.0;
    return m;
}

} // namespace qcarpet
