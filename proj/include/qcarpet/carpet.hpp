#pragma once

// Space-time grids of |Psi|^2, |Psi_cl|^2 and bundle fields beta_v, plus the
// machinery that reads carpets: per-row ridge/channel extraction, overlay
// scoring against trajectories, period verification, and CSV/PGM export.
//
// Grid evaluation may distribute rows over a worker pool; every row is
// evaluated in a fixed order by exactly one worker, so the result is
// bit-identical for any worker count.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "qcarpet/classical.hpp"
#include "qcarpet/errors.hpp"
#include "qcarpet/interference.hpp"
#include "qcarpet/packet.hpp"

namespace qcarpet {

enum class GridSource { FullDensity, Bundle, ClassicizedDensity };

inline const char* to_string(GridSource s) {
    switch (s) {
        case GridSource::FullDensity: return "full_density";
        case GridSource::Bundle: return "bundle";
        case GridSource::ClassicizedDensity: return "classicized_density";
    }
    return "?";
}

struct CarpetGrid {
    std::vector<double> x_samples, t_samples;
    std::vector<double> values; // row-major, rows = t
    GridSource source = GridSource::FullDensity;
    double bundle_speed = 0.0; // meaningful for source == Bundle
    std::string model_info, coefficients_info;

    std::size_t nx() const { return x_samples.size(); }
    std::size_t nt() const { return t_samples.size(); }
    double at(std::size_t it, std::size_t ix) const { return values[it * nx() + ix]; }
    double& at(std::size_t it, std::size_t ix) { return values[it * nx() + ix]; }
};

struct GridSpec {
    double x_min = 0.0, x_max = 1.0;
    int nx = 256;
    double t_min = 0.0, t_max = 1.0;
    int nt = 256;
};

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) throw domain_error("linspace needs n >= 2");
    if (!(b > a)) throw domain_error("linspace needs ascending range");
    std::vector<double> v(n);
    const double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) v[i] = a + i * h;
    v.back() = b;
    return v;
}

namespace detail {

inline void run_rows(int nt, int workers, const std::function<void(int)>& row) {
    if (workers <= 0) workers = int(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, 64);
    if (workers == 1 || nt < 2) {
        for (int i = 0; i < nt; ++i) row(i);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (nt + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk, hi = std::min(nt, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (int i = lo; i < hi; ++i) row(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Pre-resolves any Numerov states so row workers never touch the cache lock.
inline void prefetch_states(const SpectrumModel& m, const CoefficientSet& coeffs) {
    if (m.kind == ModelKind::Morse || m.kind == ModelKind::RosenMorseI)
        for (const auto& [n, c] : coeffs.entries()) cached_state(m, n);
}

} // namespace detail

inline CarpetGrid density_grid(const SpectrumModel& m, const CoefficientSet& coeffs,
                               const GridSpec& spec, int workers = 0) {
    detail::prefetch_states(m, coeffs);
    CarpetGrid g;
    g.source = GridSource::FullDensity;
    g.model_info = describe(m);
    g.coefficients_info = coeffs.describe();
    g.x_samples = linspace(spec.x_min, spec.x_max, spec.nx);
    g.t_samples = linspace(spec.t_min, spec.t_max, spec.nt);
    g.values.resize(g.nx() * g.nt());
    detail::run_rows(spec.nt, workers, [&](int it) {
        const double t = g.t_samples[it];
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            g.values[it * g.nx() + ix] = std::norm(psi(m, coeffs, g.x_samples[ix], t));
    });
    return g;
}

inline CarpetGrid classicized_grid(const SpectrumModel& m, const CoefficientSet& coeffs,
                                   const GridSpec& spec, int workers = 0) {
    detail::prefetch_states(m, coeffs);
    CarpetGrid g;
    g.source = GridSource::ClassicizedDensity;
    g.model_info = describe(m);
    g.coefficients_info = coeffs.describe();
    g.x_samples = linspace(spec.x_min, spec.x_max, spec.nx);
    g.t_samples = linspace(spec.t_min, spec.t_max, spec.nt);
    g.values.resize(g.nx() * g.nt());
    detail::run_rows(spec.nt, workers, [&](int it) {
        const double t = g.t_samples[it];
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            g.values[it * g.nx() + ix] = std::norm(psi_cl(m, coeffs, g.x_samples[ix], t));
    });
    return g;
}

inline CarpetGrid bundle_grid(const SpectrumModel& m, const CoefficientSet& coeffs,
                              const VelocityBundle& bundle, const GridSpec& spec,
                              int workers = 0) {
    detail::prefetch_states(m, coeffs);
    CarpetGrid g;
    g.source = GridSource::Bundle;
    g.bundle_speed = bundle.speed;
    g.model_info = describe(m);
    g.coefficients_info = coeffs.describe();
    g.x_samples = linspace(spec.x_min, spec.x_max, spec.nx);
    g.t_samples = linspace(spec.t_min, spec.t_max, spec.nt);
    g.values.resize(g.nx() * g.nt());
    detail::run_rows(spec.nt, workers, [&](int it) {
        const double t = g.t_samples[it];
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            g.values[it * g.nx() + ix] = bundle_field(m, bundle, g.x_samples[ix], t);
    });
    return g;
}

// ---------------------------------------------------------------------------
// Ridge / channel extraction: per-row strict local extrema whose prominence
// (value distance to the neighboring extremum or row endpoint, whichever is
// closer) reaches the threshold.

enum class ExtremumKind { Ridge, Channel };

struct ExtremumPoint {
    double t = 0.0, x = 0.0, value = 0.0;
    ExtremumKind kind = ExtremumKind::Ridge;
};

struct ExtremaSet {
    std::vector<ExtremumPoint> points;
    double prominence = 0.0;

    ExtremaSet filtered(ExtremumKind k) const {
        ExtremaSet out;
        out.prominence = prominence;
        for (const auto& p : points)
            if (p.kind == k) out.points.push_back(p);
        return out;
    }

    // One point per row: the strongest ridge (largest value) or the deepest
    // channel (smallest value). This is the curve that follows the packet.
    ExtremaSet dominant(ExtremumKind k) const {
        ExtremaSet out;
        out.prominence = prominence;
        for (const auto& p : points) {
            if (p.kind != k) continue;
            if (!out.points.empty() && out.points.back().t == p.t) {
                const bool better = (k == ExtremumKind::Ridge)
                                        ? p.value > out.points.back().value
                                        : p.value < out.points.back().value;
                if (better) out.points.back() = p;
            } else {
                out.points.push_back(p);
            }
        }
        return out;
    }
};

inline ExtremaSet extract_extrema(const CarpetGrid& grid, double prominence) {
    if (prominence < 0) throw domain_error("prominence must be >= 0");
    ExtremaSet set;
    set.prominence = prominence;
    const std::size_t nx = grid.nx();
    for (std::size_t it = 0; it < grid.nt(); ++it) {
        struct Ev {
            std::size_t ix;
            double v;
            int kind; // +1 max, -1 min, 0 endpoint
        };
        std::vector<Ev> evs;
        evs.push_back({0, grid.at(it, 0), 0});
        for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
            const double a = grid.at(it, ix - 1), b = grid.at(it, ix), c = grid.at(it, ix + 1);
            if (b > a && b > c) evs.push_back({ix, b, +1});
            if (b < a && b < c) evs.push_back({ix, b, -1});
        }
        evs.push_back({nx - 1, grid.at(it, nx - 1), 0});
        for (std::size_t k = 1; k + 1 < evs.size(); ++k) {
            if (evs[k].kind == 0) continue;
            const double prom = std::min(std::abs(evs[k].v - evs[k - 1].v),
                                         std::abs(evs[k].v - evs[k + 1].v));
            if (prom >= prominence)
                set.points.push_back({grid.t_samples[it], grid.x_samples[evs[k].ix], evs[k].v,
                                      evs[k].kind > 0 ? ExtremumKind::Ridge
                                                      : ExtremumKind::Channel});
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Overlay scoring: fraction of extrema within `tolerance` (in x) of the
// nearest trajectory, and the RMS x-distance of the matched ones.

struct OverlayScore {
    double fraction = 0.0;
    double rms = 0.0;
    int matched = 0;
    int total = 0;
};

inline OverlayScore trajectory_overlay_score(const ExtremaSet& extrema,
                                             const std::vector<Path>& trajectories,
                                             double tolerance) {
    if (trajectories.empty()) throw domain_error("overlay needs at least one trajectory");
    OverlayScore score;
    score.total = int(extrema.points.size());
    double acc = 0.0;
    for (const auto& pt : extrema.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& path : trajectories) {
            // trajectories are sampled on the grid's t rows; nearest sample
            auto it = std::lower_bound(path.t.begin(), path.t.end(), pt.t);
            std::size_t idx = std::size_t(it - path.t.begin());
            if (idx == path.t.size()) idx = path.t.size() - 1;
            if (idx > 0 && std::abs(path.t[idx - 1] - pt.t) <= std::abs(path.t[idx] - pt.t))
                --idx;
            best = std::min(best, std::abs(pt.x - path.x[idx]));
        }
        if (best <= tolerance) {
            ++score.matched;
            acc += best * best;
        }
    }
    if (score.total > 0) score.fraction = double(score.matched) / score.total;
    if (score.matched > 0) score.rms = std::sqrt(acc / score.matched);
    return score;
}

// ---------------------------------------------------------------------------
// Periodicity: grid(x, t + T) vs grid(x, t) at aligned samples. T must be an
// integer multiple of the (uniform) t step and the range must span >= 2T.

struct PeriodCheck {
    bool ok = false;
    double max_deviation = 0.0;
    int row_offset = 0;
};

inline PeriodCheck verify_period(const CarpetGrid& grid, double T, double tolerance) {
    if (!(T > 0)) throw domain_error("period must be positive");
    if (grid.nt() < 3) throw domain_error("grid has too few t samples");
    const double span = grid.t_samples.back() - grid.t_samples.front();
    if (span + 1e-9 * span < 2.0 * T)
        throw domain_error("t range too short: need at least two periods");
    const double dt = grid.t_samples[1] - grid.t_samples[0];
    for (std::size_t i = 1; i < grid.nt(); ++i)
        if (std::abs(grid.t_samples[i] - grid.t_samples[i - 1] - dt) > 1e-9 * dt)
            throw domain_error("t samples are not uniform");
    const double offs = T / dt;
    const long off = std::lround(offs);
    if (off < 1 || std::abs(offs - double(off)) > 1e-6)
        throw domain_error("T is not an integer multiple of the t step");
    PeriodCheck check;
    check.row_offset = int(off);
    for (std::size_t it = 0; it + off < grid.nt(); ++it)
        for (std::size_t ix = 0; ix < grid.nx(); ++ix)
            check.max_deviation =
                std::max(check.max_deviation, std::abs(grid.at(it + off, ix) - grid.at(it, ix)));
    check.ok = check.max_deviation <= tolerance;
    return check;
}

// ---------------------------------------------------------------------------
// Export

enum class GridFormat { Csv, Pgm };

inline void export_grid(const CarpetGrid& grid, GridFormat format, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    if (format == GridFormat::Csv) {
        f << "x,t,value\n";
        char buf[128];
        for (std::size_t it = 0; it < grid.nt(); ++it)
            for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.x_samples[ix],
                              grid.t_samples[it], grid.at(it, ix));
                f << buf;
            }
    } else {
        // binary P5, 16-bit big-endian, t increasing downward, min-max scaled
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double v : grid.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        f << "P5\n" << grid.nx() << " " << grid.nt() << "\n65535\n";
        const double scale = (hi > lo) ? 65535.0 / (hi - lo) : 0.0;
        std::vector<unsigned char> row(grid.nx() * 2);
        for (std::size_t it = 0; it < grid.nt(); ++it) {
            for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
                const auto u = std::uint16_t(std::llround((grid.at(it, ix) - lo) * scale));
                row[2 * ix] = (unsigned char)(u >> 8);
                row[2 * ix + 1] = (unsigned char)(u & 0xff);
            }
            f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
        }
    }
    if (!f.good()) throw io_error("write failure: " + path);
}

inline void export_path_csv(const Path& path, const std::string& file) {
    std::ofstream f(file, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + file);
    f << "t,x\n";
    char buf[80];
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.t[i], path.x[i]);
        f << buf;
    }
    if (!f.good()) throw io_error("write failure: " + file);
}

} // namespace qcarpet
