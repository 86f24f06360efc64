#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qcarpet/classical.hpp"
#include "qcarpet/numerov.hpp"
#include "qcarpet/spectrum.hpp"

using namespace qcarpet;

namespace {

double trapz(const std::vector<double>& x, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

// independent oracle for spectrum_derivative: central finite differences on a
// plain re-statement of the closed-form spectra; the step grows with the
// order to keep cancellation noise below the truncation error
double fd_derivative(const SpectrumModel& m, double n, int j) {
    const double h = (j <= 2) ? 5e-3 : (j == 3 ? 0.05 : 0.1);
    auto e = [&](double nn) {
        double v = 0.0;
        switch (m.kind) {
            case ModelKind::InfiniteSquareWell: v = (nn * pi / m.L) * (nn * pi / m.L); break;
            case ModelKind::HarmonicOscillator: v = m.omega * (nn + 0.5); break;
            case ModelKind::Morse:
                v = m.A * m.A - (m.A - m.alpha * nn) * (m.A - m.alpha * nn);
                break;
            case ModelKind::RosenMorseI: {
                const double u = m.A + m.alpha * nn;
                v = u * u - m.A * m.A + (m.B / m.A) * (m.B / m.A) - (m.B / u) * (m.B / u);
                break;
            }
            case ModelKind::PolynomialSpectrum:
                for (const auto& t : m.terms) v += t.coefficient * std::pow(nn, t.power);
                break;
        }
        return v;
    };
    switch (j) {
        case 1: return (e(n + h) - e(n - h)) / (2 * h);
        case 2: return (e(n + h) - 2 * e(n) + e(n - h)) / (h * h);
        case 3:
            return (e(n + 2 * h) - 2 * e(n + h) + 2 * e(n - h) - e(n - 2 * h)) /
                   (2 * h * h * h);
        case 4:
            return (e(n + 2 * h) - 4 * e(n + h) + 6 * e(n) - 4 * e(n - h) + e(n - 2 * h)) /
                   (h * h * h * h);
    }
    return 0.0;
}

} // namespace

TEST_CASE("analytic energies") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    CHECK(energy(isw, 3) == Catch::Approx(9.0).margin(1e-14));
    CHECK(energy(isw, 1) == Catch::Approx(1.0).margin(1e-14));

    auto morse = SpectrumModel::morse(10.0, 10.0, 1.0);
    CHECK(energy(morse, 0) == 0.0);
    CHECK(*morse.n_max == 9);

    auto sho = SpectrumModel::harmonic(2.0);
    CHECK(energy(sho, 0) == Catch::Approx(1.0));
    CHECK(energy(sho, 5) == Catch::Approx(11.0));

    auto rmi = SpectrumModel::rosen_morse1(20.0, 5.0, 1.0);
    CHECK(energy(rmi, 0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("quantum number validation names the range") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    CHECK_THROWS_MATCHES(
        energy(isw, 0), domain_error,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("[1, inf)")));
    auto morse = SpectrumModel::morse(10.0, 10.0, 1.0);
    CHECK_THROWS_AS(energy(morse, 10), domain_error);
    CHECK_THROWS_AS(energy(morse, -1), domain_error);
}

TEST_CASE("spectrum monotone over the supported range") {
    for (auto m :
         {SpectrumModel::infinite_square_well(2.0), SpectrumModel::harmonic(1.7),
          SpectrumModel::morse(12.0, 4.0, 1.0), SpectrumModel::rosen_morse1(15.0, 3.0, 1.0, 30)}) {
        const int hi = m.n_max ? *m.n_max : m.n_min + 40;
        for (int n = m.n_min; n < hi; ++n) CHECK(energy(m, n) < energy(m, n + 1));
    }
}

TEST_CASE("potentials") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    CHECK(potential_value(isw, 1.0) == 0.0);
    CHECK_THROWS_AS(potential_value(isw, -0.5), domain_error);

    auto sho = SpectrumModel::harmonic(2.0);
    CHECK(potential_value(sho, 0.0) == 0.0);
    CHECK(potential_value(sho, 1.0) == Catch::Approx(1.0)); // (omega x / 2)^2

    auto morse = SpectrumModel::morse(10.0, 10.0, 1.0);
    CHECK(potential_value(morse, morse.x_max) == Catch::Approx(100.0).margin(1e-6));
    CHECK(min_potential(morse) == Catch::Approx(100.0 - 10.5 * 10.5));

    auto rmi = SpectrumModel::rosen_morse1(20.0, 5.0, 1.0);
    CHECK(min_potential(rmi) < 0.0);
    // a V = 0 reference point exists inside the well
    CHECK(potential_value(rmi, 0.5 * (rmi.x_min + rmi.x_max)) < 0.0);
}

TEST_CASE("square well eigenfunctions at the midpoint") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    const double s = std::sqrt(2.0 / pi);
    CHECK(eigenfunction(isw, 1, pi / 2) == Catch::Approx(s));
    CHECK(eigenfunction(isw, 2, pi / 2) == Catch::Approx(0.0).margin(1e-15));
    CHECK(eigenfunction(isw, 3, pi / 2) == Catch::Approx(-s));
}

TEST_CASE("oscillator eigenfunctions: parity and orthonormality") {
    auto sho = SpectrumModel::harmonic(1.0);
    for (int n = 0; n <= 8; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        CHECK(eigenfunction(sho, n, 1.3) ==
              Catch::Approx(sign * eigenfunction(sho, n, -1.3)).margin(1e-12));
    }
    const int N = 4097;
    std::vector<double> x(N);
    for (int i = 0; i < N; ++i) x[i] = sho.x_min + i * (sho.x_max - sho.x_min) / (N - 1);
    for (int n = 0; n <= 12; ++n)
        for (int m = n; m <= 12; ++m) {
            std::vector<double> f(N);
            for (int i = 0; i < N; ++i)
                f[i] = eigenfunction(sho, n, x[i]) * eigenfunction(sho, m, x[i]);
            const double expected = (n == m) ? 1.0 : 0.0;
            CHECK(std::abs(trapz(x, f) - expected) <= 1e-5);
        }
}

TEST_CASE("local momentum") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    const double p = local_momentum(isw, 3, 1.0);
    CHECK(p == 3.0);
    CHECK(p * p + potential_value(isw, 1.0) == energy(isw, 3)); // bit-exact at L = pi
    CHECK(local_momentum(isw, 1, 2.0) == 1.0);

    auto sho = SpectrumModel::harmonic(2.0);
    const double E = energy(sho, 4);
    const double x_turn = 2.0 * std::sqrt(E) / sho.omega;
    CHECK(local_momentum(sho, 4, x_turn) == 0.0);
    const double xm = 0.3;
    const double pm = local_momentum(sho, 4, xm);
    CHECK(std::abs(pm * pm + potential_value(sho, xm) - E) <= 1e-12);
    try {
        local_momentum(sho, 0, 0.9 * sho.x_max);
        FAIL("expected forbidden_region_error");
    } catch (const forbidden_region_error& e) {
        const double V = potential_value(sho, 0.9 * sho.x_max);
        CHECK(e.imaginary_magnitude() ==
              Catch::Approx(std::sqrt(V - energy(sho, 0))).epsilon(1e-12));
    }
}

TEST_CASE("closed-form spectrum derivatives match finite differences") {
    auto morse = SpectrumModel::morse(20.0, 5.0, 1.0);
    auto rmi = SpectrumModel::rosen_morse1(20.0, 5.0, 1.0);
    auto poly = SpectrumModel::polynomial({{1, 1.0}, {2, 1.0}, {3, 1.0}});
    auto npow = SpectrumModel::polynomial({{-1, 1.0}, {-2, 2.0}, {-3, 1.0}});
    for (double n : {6.0, 12.0}) {
        for (int j = 1; j <= 4; ++j) {
            for (const auto* m : {&morse, &rmi, &poly, &npow})
                CHECK(spectrum_derivative(*m, n, j) ==
                      Catch::Approx(fd_derivative(*m, n, j)).margin(1e-4).epsilon(5e-3));
        }
    }
}

TEST_CASE("numerov eigenvalues against analytic spectra") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    auto st1 = solve_numerov(isw, 1);
    CHECK(std::abs(st1.energy - 1.0) <= 1e-6);
    CHECK(st1.normalization_residual <= 1e-12);

    auto sho = SpectrumModel::harmonic(2.0);
    auto st5 = solve_numerov(sho, 5);
    CHECK(std::abs(st5.energy - 11.0) / 11.0 <= 1e-6);

    for (int n = 1; n <= 20; ++n)
        CHECK(std::abs(solve_numerov(isw, n).energy - n * n) / (n * n) <= 1e-6);
    auto sho1 = SpectrumModel::harmonic(1.0);
    for (int n = 0; n <= 20; ++n) {
        const double exact = n + 0.5;
        CHECK(std::abs(solve_numerov(sho1, n).energy - exact) / exact <= 1e-6);
    }
}

TEST_CASE("numerov states: parity and node counts") {
    auto sho = SpectrumModel::harmonic(1.0);
    for (int n : {0, 1, 2, 5, 8}) {
        auto st = cached_state(sho, n);
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        for (double x : {0.4, 1.1, 2.7})
            CHECK(st->value(-x) == Catch::Approx(sign * st->value(x)).margin(1e-6));
        int nodes = 0;
        double prev = 0.0, peak = 0.0;
        for (double v : st->psi) peak = std::max(peak, std::abs(v));
        for (double v : st->psi) {
            if (std::abs(v) <= 1e-6 * peak) continue;
            if (prev != 0.0 && (prev > 0) != (v > 0)) ++nodes;
            prev = v;
        }
        CHECK(nodes == n);
    }
}

TEST_CASE("numerov orthonormality on the default grid") {
    for (auto m : {SpectrumModel::infinite_square_well(pi), SpectrumModel::harmonic(1.0),
                   SpectrumModel::morse(20.0, 5.0, 1.0)}) {
        std::vector<std::shared_ptr<const EigenState>> states;
        for (int n = m.n_min; n <= m.n_min + 12; ++n) states.push_back(cached_state(m, n));
        for (std::size_t a = 0; a < states.size(); ++a)
            for (std::size_t b = a; b < states.size(); ++b) {
                const auto& x = states[a]->x;
                std::vector<double> f(x.size());
                for (std::size_t i = 0; i < x.size(); ++i)
                    f[i] = states[a]->psi[i] * states[b]->psi[i];
                const double expected = (a == b) ? 1.0 : 0.0;
                CHECK(std::abs(trapz(x, f) - expected) <= 1e-5);
            }
    }
}

TEST_CASE("numerov failure paths") {
    // energy window exhausted: a state above the dissociation ceiling
    auto morse = SpectrumModel::morse(3.0, 3.0, 1.0); // n_max = 2
    auto doctored = morse;
    doctored.n_max = 25;
    doctored.eigen_cache.reset();
    CHECK_THROWS_AS(solve_numerov(doctored, 20), numerical_error);

    // bisection starved of iterations
    auto sho = SpectrumModel::harmonic(1.0);
    sho.numerov.max_iterations = 2;
    sho.eigen_cache.reset();
    CHECK_THROWS_AS(solve_numerov(sho, 3), numerical_error);
}

TEST_CASE("classical trajectory in the square well is a sawtooth") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    std::vector<double> t;
    for (int i = 0; i <= 400; ++i) t.push_back(i * (pi / 5) / 400.0);
    auto path = classical_trajectory(isw, 25.0, 0.0, +1, t);
    // speed 2 sqrt(E) = 10, so the full period is 2L / v = pi / 5
    CHECK(path.x[0] == 0.0);
    CHECK(path.x[100] == Catch::Approx(10.0 * t[100]));
    CHECK(path.x[200] == Catch::Approx(pi).margin(1e-12));
    CHECK(path.x[400] == Catch::Approx(0.0).margin(1e-12));
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(std::abs(25.0 - path.p[i] * path.p[i]) <= 1e-10);
}

TEST_CASE("classical trajectory conserves energy over ten periods") {
    auto sho = SpectrumModel::harmonic(1.0);
    const double E = energy(sho, 14);
    const double T = 2.0 * pi / sho.omega;
    std::vector<double> t;
    for (int i = 0; i <= 2000; ++i) t.push_back(i * 10.0 * T / 2000.0);
    auto path = classical_trajectory(sho, E, 0.3, +1, t);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double res = E - potential_value(sho, path.x[i]) - path.p[i] * path.p[i];
        worst = std::max(worst, std::abs(res) / E);
    }
    CHECK(worst <= 1e-8);
    CHECK(path.x.back() == Catch::Approx(path.x.front()).margin(1e-6));

    auto morse = SpectrumModel::morse(20.0, 5.0, 1.0);
    const double Em = energy(morse, 12);
    const double Tm = pi / (morse.alpha * std::sqrt(morse.A * morse.A - Em));
    std::vector<double> tm;
    for (int i = 0; i <= 1500; ++i) tm.push_back(i * 10.0 * Tm / 1500.0);
    auto pm = classical_trajectory(morse, Em, 0.0, -1, tm);
    double worst_m = 0.0;
    for (std::size_t i = 0; i < tm.size(); ++i) {
        const double res = Em - potential_value(morse, pm.x[i]) - pm.p[i] * pm.p[i];
        worst_m = std::max(worst_m, std::abs(res) / Em);
    }
    CHECK(worst_m <= 1e-8);
    CHECK(pm.x.back() == Catch::Approx(pm.x.front()).margin(1e-5));
}

TEST_CASE("classical trajectory rejects bad input") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    std::vector<double> t{0.0, 0.1};
    CHECK_THROWS_AS(classical_trajectory(isw, -1.0, 0.5, +1, t), domain_error);
    CHECK_THROWS_AS(classical_trajectory(isw, 4.0, 0.5, 0, t), domain_error);
    auto sho = SpectrumModel::harmonic(1.0);
    CHECK_THROWS_AS(classical_trajectory(sho, 0.25, 6.0, +1, t), domain_error);
    std::vector<double> bad{0.2, 0.1};
    CHECK_THROWS_AS(classical_trajectory(isw, 4.0, 0.5, +1, bad), domain_error);
}
