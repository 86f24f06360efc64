#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "qcarpet/carpet.hpp"

using namespace qcarpet;

namespace {

CarpetGrid synthetic_grid(int nt, int nx, double (*f)(double t, double x)) {
    CarpetGrid g;
    g.x_samples = linspace(0.0, 1.0, nx);
    g.t_samples = linspace(0.0, 1.0, nt);
    g.values.resize(std::size_t(nt) * nx);
    for (int it = 0; it < nt; ++it)
        for (int ix = 0; ix < nx; ++ix)
            g.values[std::size_t(it) * nx + ix] = f(g.t_samples[it], g.x_samples[ix]);
    return g;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("density grid: shape, positivity, row quadrature") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    auto u = CoefficientSet::uniform(1, 10);
    GridSpec spec{0.0, pi, 192, 0.0, 2.0 * pi, 64};
    auto g = density_grid(isw, u, spec);
    REQUIRE(g.nx() == 192);
    REQUIRE(g.nt() == 64);
    REQUIRE(g.values.size() == 192 * 64);
    for (double v : g.values) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    const double h = g.x_samples[1] - g.x_samples[0];
    for (std::size_t it = 0; it < g.nt(); ++it) {
        double s = 0.0;
        for (std::size_t ix = 1; ix < g.nx(); ++ix)
            s += 0.5 * (g.at(it, ix) + g.at(it, ix - 1)) * h;
        CHECK(std::abs(s - 1.0) <= 1e-6);
    }

    // rows integrate to one for smooth wells too, when the window covers the
    // packet's support
    auto sho = SpectrumModel::harmonic(1.0);
    auto g6 = CoefficientSet::gaussian(6.0, 2.0, 0, 23);
    GridSpec sspec{sho.x_min, sho.x_max, 1024, 0.0, 5.0, 12};
    auto sg = density_grid(sho, g6, sspec);
    const double sh = sg.x_samples[1] - sg.x_samples[0];
    for (std::size_t it = 0; it < sg.nt(); ++it) {
        double s = 0.0;
        for (std::size_t ix = 1; ix < sg.nx(); ++ix)
            s += 0.5 * (sg.at(it, ix) + sg.at(it, ix - 1)) * sh;
        CHECK(std::abs(s - 1.0) <= 1e-6);
    }
}

TEST_CASE("grid-level mirror identity for the square well") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    auto u = CoefficientSet::uniform(1, 10);
    GridSpec spec{0.0, pi, 128, 0.0, 2.0 * pi, 129}; // T_R/2 = 64 rows
    auto g = density_grid(isw, u, spec);
    double worst = 0.0;
    for (std::size_t it = 0; it + 64 < g.nt(); ++it)
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            worst = std::max(worst,
                             std::abs(g.at(it + 64, ix) - g.at(it, g.nx() - 1 - ix)));
    CHECK(worst <= 1e-10);
}

TEST_CASE("grid evaluation is bit-identical across worker counts") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    auto g6 = CoefficientSet::gaussian(6.0, 2.0, 1, 20);
    GridSpec spec{0.0, pi, 64, 0.0, 3.0, 48};
    auto a = density_grid(isw, g6, spec, 1);
    auto b = density_grid(isw, g6, spec, 2);
    auto c = density_grid(isw, g6, spec, 7);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        CHECK(a.values[i] == b.values[i]);
        CHECK(a.values[i] == c.values[i]);
    }

    auto morse = SpectrumModel::morse(10.0, 10.0, 1.0);
    auto gm = CoefficientSet::gaussian(4.0, 1.0, 0, 8);
    GridSpec mspec{-1.0, 4.0, 48, 0.0, 1.0, 32};
    auto ma = classicized_grid(morse, gm, mspec, 1);
    auto mb = classicized_grid(morse, gm, mspec, 3);
    for (std::size_t i = 0; i < ma.values.size(); ++i) CHECK(ma.values[i] == mb.values[i]);
}

TEST_CASE("extrema extraction on synthetic rows") {
    // one Gaussian bump per row, drifting across the window
    auto g = synthetic_grid(16, 101, [](double t, double x) {
        const double c = 0.3 + 0.4 * t;
        return std::exp(-200.0 * (x - c) * (x - c));
    });
    auto set = extract_extrema(g, 0.05);
    auto ridges = set.filtered(ExtremumKind::Ridge);
    CHECK(ridges.points.size() == 16); // exactly one ridge per row
    for (const auto& p : ridges.points)
        CHECK(p.x == Catch::Approx(0.3 + 0.4 * p.t).margin(0.011));

    // prominence 0 keeps every strict extremum of a wiggly row
    auto w = synthetic_grid(2, 101, [](double, double x) { return std::sin(12.0 * x); });
    auto all = extract_extrema(w, 0.0);
    int maxima = 0, minima = 0;
    for (const auto& p : all.points)
        (p.kind == ExtremumKind::Ridge ? maxima : minima)++;
    // sin(12x) on [0,1] has two interior maxima and two interior minima per row
    CHECK(maxima == 4);
    CHECK(minima == 4);
}

TEST_CASE("extrema extraction is scale equivariant") {
    auto g = synthetic_grid(8, 101, [](double t, double x) {
        return std::sin(9.0 * x + 2.0 * t) + 0.3 * std::sin(23.0 * x);
    });
    auto base = extract_extrema(g, 0.2);
    auto scaled_grid = g;
    for (double& v : scaled_grid.values) v *= 3.7;
    auto scaled = extract_extrema(scaled_grid, 0.2 * 3.7);
    REQUIRE(base.points.size() == scaled.points.size());
    for (std::size_t i = 0; i < base.points.size(); ++i) {
        CHECK(base.points[i].x == scaled.points[i].x);
        CHECK(base.points[i].t == scaled.points[i].t);
        CHECK(base.points[i].kind == scaled.points[i].kind);
    }
}

TEST_CASE("dominant ridge keeps one point per row") {
    auto g = synthetic_grid(12, 101, [](double t, double x) {
        return std::exp(-150.0 * (x - 0.35) * (x - 0.35)) +
               0.5 * std::exp(-150.0 * (x - 0.75) * (x - 0.75)) + 0.01 * t;
    });
    auto dom = extract_extrema(g, 0.1).dominant(ExtremumKind::Ridge);
    REQUIRE(dom.points.size() == 12);
    for (const auto& p : dom.points) CHECK(p.x == Catch::Approx(0.35).margin(0.011));
}

TEST_CASE("overlay scoring") {
    // extrema exactly on a trajectory
    auto g = synthetic_grid(32, 201, [](double t, double x) {
        const double c = 0.25 + 0.5 * t;
        return std::exp(-400.0 * (x - c) * (x - c));
    });
    auto ridges = extract_extrema(g, 0.1).filtered(ExtremumKind::Ridge);
    Path traj;
    traj.t = g.t_samples;
    for (double t : g.t_samples) {
        // place the trajectory exactly on the sampled ridge positions
        double best = 0.0, bv = -1.0;
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const std::size_t it = std::size_t(std::lround(t * 31.0));
            if (g.at(it, ix) > bv) {
                bv = g.at(it, ix);
                best = g.x_samples[ix];
            }
        }
        traj.x.push_back(best);
    }
    auto score = trajectory_overlay_score(ridges, {traj}, 0.02);
    CHECK(score.fraction == 1.0);
    CHECK(score.rms == 0.0);

    CHECK_THROWS_AS(trajectory_overlay_score(ridges, {}, 0.02), domain_error);
}

TEST_CASE("overlay baseline: random points match at rate ~ 2 tol / L") {
    const double L = pi, tol = 0.02 * L;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ux(0.0, L);
    ExtremaSet set;
    Path traj;
    traj.t = linspace(0.0, 1.0, 2);
    traj.x = {L / 2, L / 2};
    const int N = 20000;
    for (int i = 0; i < N; ++i)
        set.points.push_back({0.0, ux(rng), 1.0, ExtremumKind::Ridge});
    auto score = trajectory_overlay_score(set, {traj}, tol);
    CHECK(std::abs(score.fraction - 2.0 * tol / L) <= 0.006);
}

TEST_CASE("beta_v0 ridges advect along lines of slope +-v0") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    auto u = CoefficientSet::uniform(1, 10);
    auto bundles = build_bundles(isw, u);
    GridSpec spec{0.0, pi, 256, 0.0, 2.0 * pi, 256};
    auto g = bundle_grid(isw, u, find_bundle(bundles, 1.0), spec);
    double lo = g.values[0], hi = g.values[0];
    for (double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    auto ridges = extract_extrema(g, 0.1 * (hi - lo)).filtered(ExtremumKind::Ridge);
    const double dt = g.t_samples[1] - g.t_samples[0];
    std::map<long, std::vector<double>> by_row;
    for (const auto& p : ridges.points) by_row[std::lround(p.t / dt)].push_back(p.x);

    // shifting a ridge by +-v0 * dt (v0 = 1 here) with wall folding must land
    // near a ridge of the later row far more often than chance
    const int drow = 8;
    const double shift = drow * dt;
    const double tol = 0.02 * pi;
    auto fold = [](double x) {
        double y = std::fmod(x, 2.0 * pi);
        if (y < 0) y += 2.0 * pi;
        return (y <= pi) ? y : 2.0 * pi - y;
    };
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ux(0.0, pi);
    int total = 0, matched = 0, rnd_matched = 0;
    for (const auto& [row, xs] : by_row) {
        auto it = by_row.find(row + drow);
        if (it == by_row.end()) continue;
        auto near = [&](double target) {
            for (double xr : it->second)
                if (std::abs(xr - target) <= tol) return true;
            return false;
        };
        for (double x : xs) {
            ++total;
            if (near(fold(x + shift)) || near(fold(x - shift))) ++matched;
            const double r = ux(rng);
            if (near(fold(r + shift)) || near(fold(r - shift))) ++rnd_matched;
        }
    }
    REQUIRE(total > 300);
    CHECK(double(matched) / total >= 0.75);
    CHECK(double(rnd_matched) / total <= 0.35); // the check is not vacuous
}

TEST_CASE("verify_period on square-well grids") {
    auto isw = SpectrumModel::infinite_square_well(pi);
    auto u = CoefficientSet::uniform(1, 10);
    GridSpec spec{0.0, pi, 96, 0.0, 4.0 * pi, 257}; // two revivals, dt = 4pi/256
    auto g = density_grid(isw, u, spec);
    const double t_r = 2.0 * pi;
    auto full = verify_period(g, t_r, 1e-8);
    CHECK(full.ok);
    CHECK(full.max_deviation <= 1e-10);
    auto third = verify_period(g, t_r / 4.0, 1e-8); // T_R/4 is aligned (64 rows) but not a period
    CHECK_FALSE(third.ok);
    CHECK(third.max_deviation > 1e-3);

    CHECK_THROWS_AS(verify_period(g, 3.0 * t_r, 1e-8), domain_error); // range too short
    CHECK_THROWS_AS(verify_period(g, t_r * (1.0 + 3e-3), 1e-8), domain_error); // misaligned

    // T_R/3 on a grid where it aligns with the t step (384 = 3 * 128 rows)
    GridSpec spec3{0.0, pi, 96, 0.0, 4.0 * pi, 385};
    auto g3 = density_grid(isw, u, spec3);
    auto third3 = verify_period(g3, t_r / 3.0, 1e-8);
    CHECK_FALSE(third3.ok);
    CHECK(third3.max_deviation > 1e-3);

    // periods compose: T true implies 2T true when the range allows
    auto bundles = build_bundles(isw, u);
    auto b2 = bundle_grid(isw, u, find_bundle(bundles, 2.0), spec);
    auto quarter = verify_period(b2, t_r / 4.0, 1e-8);
    auto half = verify_period(b2, t_r / 2.0, 1e-8);
    CHECK(quarter.ok);
    CHECK(half.ok);
    CHECK(half.max_deviation <= 2.0 * quarter.max_deviation + 1e-12);
}

TEST_CASE("csv export round-trips at full precision") {
    auto g = synthetic_grid(7, 11, [](double t, double x) {
        return std::sin(57.3 * x + 11.1 * t) * 1e-3 + x * t;
    });
    const auto path = temp_file("qcarpet_roundtrip.csv");
    export_grid(g, GridFormat::Csv, path.string());
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "x,t,value");
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            std::string line;
            REQUIRE(std::getline(f, line));
            double x, t, v;
            REQUIRE(std::sscanf(line.c_str(), "%lg,%lg,%lg", &x, &t, &v) == 3);
            CHECK(x == g.x_samples[ix]);
            CHECK(t == g.t_samples[it]);
            CHECK(v == g.at(it, ix)); // %.17g round-trips exactly
        }
    std::filesystem::remove(path);
}

TEST_CASE("pgm export: 16-bit big-endian, min-max scaled") {
    CarpetGrid g;
    g.x_samples = {0.0, 1.0};
    g.t_samples = {0.0, 1.0};
    g.values = {0.0, 1.0, 2.0, 3.0};
    const auto path = temp_file("qcarpet_test.pgm");
    export_grid(g, GridFormat::Pgm, path.string());
    std::ifstream f(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::string header = "P5\n2 2\n65535\n";
    REQUIRE(all.rfind(header, 0) == 0);
    REQUIRE(all.size() == header.size() + 8);
    const unsigned char* d = reinterpret_cast<const unsigned char*>(all.data() + header.size());
    auto px = [&](int i) { return (unsigned(d[2 * i]) << 8) | unsigned(d[2 * i + 1]); };
    CHECK(px(0) == 0u);
    CHECK(px(1) == 21845u);
    CHECK(px(2) == 43690u);
    CHECK(px(3) == 65535u);
    std::filesystem::remove(path);

    // constant grids map to zero
    g.values = {4.2, 4.2, 4.2, 4.2};
    export_grid(g, GridFormat::Pgm, path.string());
    std::ifstream f2(path, std::ios::binary);
    std::string all2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    for (std::size_t i = header.size(); i < all2.size(); ++i) CHECK(all2[i] == 0);
    std::filesystem::remove(path);
}

TEST_CASE("export failures carry the path") {
    auto g = synthetic_grid(2, 2, [](double, double) { return 1.0; });
    CHECK_THROWS_MATCHES(
        export_grid(g, GridFormat::Csv, "/nonexistent_dir_qcarpet/x.csv"), io_error,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring("/nonexistent_dir_qcarpet/x.csv")));
}

TEST_CASE("grid spec validation") {
    CHECK_THROWS_AS(linspace(0.0, 1.0, 1), domain_error);
    CHECK_THROWS_AS(linspace(1.0, 0.0, 8), domain_error);
}
