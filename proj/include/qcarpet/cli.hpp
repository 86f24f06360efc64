#pragma once

// Config-driven command line front end. Subcommands:
//   carpet       full |Psi|^2 grid
//   bundles      inventory CSV, count report, per-bundle grids
//   velocities   (n, m, ±, ±) -> degeneracy speed table
//   trajectories constant-phase paths as CSV
//   revival      Gauss coefficients a_s and reconstruction error
//   classicized  |Psi_cl|^2 grid, classical path, overlay score
//   timescales   T_j report
//
// Configs are strict JSON: unknown keys are rejected and validation errors
// name the offending key. Exit codes: 0 success, 1 I/O failure, 2 config or
// validation error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcarpet/qcarpet.hpp"

namespace qcarpet::cli {

using json = nlohmann::json;

namespace cfg {

[[noreturn]] inline void fail(const std::string& key, const std::string& what) {
    throw domain_error("config error: " + key + ": " + what);
}

inline void check_keys(const json& obj, const std::string& prefix,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(prefix, "expected an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (item.key() == a) ok = true;
        if (!ok) fail(prefix + "." + item.key(), "unknown key");
    }
}

inline const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double num(const json& obj, const std::string& prefix, const char* key,
                  std::optional<double> def = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (def) return *def;
        fail(prefix + "." + key, "required number missing");
    }
    if (!v->is_number()) fail(prefix + "." + key, "expected a number");
    return v->get<double>();
}

inline long integer(const json& obj, const std::string& prefix, const char* key,
                    std::optional<long> def = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (def) return *def;
        fail(prefix + "." + key, "required integer missing");
    }
    if (!v->is_number_integer()) fail(prefix + "." + key, "expected an integer");
    return v->get<long>();
}

inline std::string str(const json& obj, const std::string& prefix, const char* key,
                       std::optional<std::string> def = std::nullopt) {
    const json* v = find(obj, key);
    if (!v) {
        if (def) return *def;
        fail(prefix + "." + key, "required string missing");
    }
    if (!v->is_string()) fail(prefix + "." + key, "expected a string");
    return v->get<std::string>();
}

} // namespace cfg

struct TrajectorySeed {
    int n = 1, m = 1, sign1 = 1, sign2 = 1;
    double x0 = 0.0;
};

struct RunConfig {
    SpectrumModel model;
    std::optional<CoefficientSet> coeffs;
    GridSpec grid;
    bool grid_given = false;

    std::vector<double> bundle_speeds; // ISW: multiples of v0; otherwise absolute
    bool bundles_all = false;
    double epsilon_v = 1e-9;

    long p = 1, q = 2;
    std::vector<TrajectorySeed> seeds;
    double prominence_rel = 0.2;
    double overlay_tolerance_rel = 0.05;
    std::optional<double> nbar;
    int max_order = 4;

    std::string out_dir = "out";
    bool fmt_csv = true, fmt_pgm = false;
    int workers = 0;
};

namespace detail_cli {

inline SpectrumModel parse_model(const json& j) {
    const std::string prefix = "model";
    const std::string kind = cfg::str(j, prefix, "kind");
    SpectrumModel m;
    if (kind == "isw") {
        cfg::check_keys(j, prefix, {"kind", "L", "mass", "numerov_points", "numerov_tolerance"});
        m = SpectrumModel::infinite_square_well(cfg::num(j, prefix, "L", pi),
                                                cfg::num(j, prefix, "mass", 0.5));
    } else if (kind == "sho") {
        cfg::check_keys(j, prefix,
                        {"kind", "omega", "n_cap", "numerov_points", "numerov_tolerance"});
        m = SpectrumModel::harmonic(cfg::num(j, prefix, "omega", 1.0),
                                    int(cfg::integer(j, prefix, "n_cap", 32)));
    } else if (kind == "morse") {
        cfg::check_keys(j, prefix,
                        {"kind", "A", "B", "alpha", "numerov_points", "numerov_tolerance"});
        m = SpectrumModel::morse(cfg::num(j, prefix, "A", 20.0), cfg::num(j, prefix, "B", 5.0),
                                 cfg::num(j, prefix, "alpha", 1.0));
    } else if (kind == "rosen_morse1") {
        cfg::check_keys(
            j, prefix, {"kind", "A", "B", "alpha", "n_cap", "numerov_points", "numerov_tolerance"});
        m = SpectrumModel::rosen_morse1(
            cfg::num(j, prefix, "A", 20.0), cfg::num(j, prefix, "B", 5.0),
            cfg::num(j, prefix, "alpha", 1.0), int(cfg::integer(j, prefix, "n_cap", 40)));
    } else if (kind == "polynomial") {
        cfg::check_keys(j, prefix, {"kind", "terms"});
        const json* terms = cfg::find(j, "terms");
        if (!terms || !terms->is_array() || terms->empty())
            cfg::fail(prefix + ".terms", "expected a nonempty array of [power, coefficient]");
        std::vector<SpectrumTerm> ts;
        for (const auto& t : *terms) {
            if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number())
                cfg::fail(prefix + ".terms", "each term must be [integer power, coefficient]");
            ts.push_back({t[0].get<int>(), t[1].get<double>()});
        }
        return SpectrumModel::polynomial(std::move(ts));
    } else {
        cfg::fail(prefix + ".kind",
                  "must be one of isw, sho, morse, rosen_morse1, polynomial");
    }
    if (cfg::find(j, "numerov_points"))
        m.numerov.points = int(cfg::integer(j, prefix, "numerov_points"));
    if (cfg::find(j, "numerov_tolerance"))
        m.numerov.energy_tolerance = cfg::num(j, prefix, "numerov_tolerance");
    if (m.numerov.points < 64) cfg::fail(prefix + ".numerov_points", "must be >= 64");
    return m;
}

inline CoefficientSet parse_coefficients(const json& j, const SpectrumModel& model) {
    const std::string prefix = "coefficients";
    const std::string kind = cfg::str(j, prefix, "kind");
    if (kind == "gaussian") {
        cfg::check_keys(j, prefix, {"kind", "n_bar", "sigma", "n_lo", "n_hi"});
        const double nb = cfg::num(j, prefix, "n_bar");
        const double sg = cfg::num(j, prefix, "sigma");
        long lo = cfg::integer(j, prefix, "n_lo", long(model.n_min));
        long hi_default =
            model.n_max ? long(*model.n_max) : std::lround(nb + 10.0 * sg);
        long hi = cfg::integer(j, prefix, "n_hi", hi_default);
        return CoefficientSet::gaussian(nb, sg, int(lo), int(hi));
    }
    if (kind == "uniform") {
        cfg::check_keys(j, prefix, {"kind", "n_lo", "n_hi"});
        return CoefficientSet::uniform(int(cfg::integer(j, prefix, "n_lo")),
                                       int(cfg::integer(j, prefix, "n_hi")));
    }
    if (kind == "perfect_squares") {
        cfg::check_keys(j, prefix, {"kind", "n_max"});
        return CoefficientSet::perfect_squares(int(cfg::integer(j, prefix, "n_max")));
    }
    if (kind == "custom") {
        cfg::check_keys(j, prefix, {"kind", "entries"});
        const json* entries = cfg::find(j, "entries");
        if (!entries || !entries->is_array())
            cfg::fail(prefix + ".entries", "expected an array of [n, re, im]");
        std::vector<CoefficientSet::Entry> es;
        for (const auto& e : *entries) {
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
                !e[1].is_number() || !e[2].is_number())
                cfg::fail(prefix + ".entries", "each entry must be [n, re, im]");
            es.emplace_back(e[0].get<int>(), cplx(e[1].get<double>(), e[2].get<double>()));
        }
        return CoefficientSet::custom(std::move(es));
    }
    cfg::fail(prefix + ".kind", "must be one of gaussian, uniform, perfect_squares, custom");
}

inline void validate_support(const RunConfig& rc) {
    const auto& m = rc.model;
    for (const auto& [n, c] : rc.coeffs->entries()) check_quantum_number(m, n);
}

inline GridSpec default_grid(const SpectrumModel& m, const CoefficientSet& coeffs) {
    GridSpec g;
    g.x_min = m.x_min;
    g.x_max = m.x_max;
    g.nx = 256;
    g.nt = 256;
    g.t_min = 0.0;
    const int n0 = coeffs.center_index();
    const double d2 = spectrum_derivative(m, n0, 2);
    if (d2 != 0.0)
        g.t_max = 2.0 * pi * 2.0 / std::abs(d2); // revival time
    else
        g.t_max = 2.0 * pi / std::abs(spectrum_derivative(m, n0, 1)); // classical period
    return g;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw domain_error("config error: " + path + ": " + e.what());
    }
    cfg::check_keys(j, "config",
                    {"model", "coefficients", "grid", "bundles", "revival", "trajectories",
                     "classicized", "timescales", "output"});
    RunConfig rc;
    const json* model = cfg::find(j, "model");
    if (!model) cfg::fail("config.model", "required section missing");
    rc.model = parse_model(*model);
    const json* coeffs = cfg::find(j, "coefficients");
    if (!coeffs) cfg::fail("config.coefficients", "required section missing");
    rc.coeffs = parse_coefficients(*coeffs, rc.model);
    validate_support(rc);

    if (const json* g = cfg::find(j, "grid")) {
        cfg::check_keys(*g, "grid", {"x_min", "x_max", "nx", "t_min", "t_max", "nt"});
        if (!rc.model.has_position_space())
            cfg::fail("grid", "model has no position-space grid");
        const GridSpec d = default_grid(rc.model, *rc.coeffs);
        rc.grid.x_min = cfg::num(*g, "grid", "x_min", d.x_min);
        rc.grid.x_max = cfg::num(*g, "grid", "x_max", d.x_max);
        rc.grid.nx = int(cfg::integer(*g, "grid", "nx", d.nx));
        rc.grid.t_min = cfg::num(*g, "grid", "t_min", d.t_min);
        rc.grid.t_max = cfg::num(*g, "grid", "t_max", d.t_max);
        rc.grid.nt = int(cfg::integer(*g, "grid", "nt", d.nt));
        rc.grid_given = true;
        if (rc.grid.nx < 2) cfg::fail("grid.nx", "must be >= 2");
        if (rc.grid.nt < 2) cfg::fail("grid.nt", "must be >= 2");
        if (!(rc.grid.x_max > rc.grid.x_min)) cfg::fail("grid.x_max", "must exceed grid.x_min");
        if (!(rc.grid.t_max > rc.grid.t_min)) cfg::fail("grid.t_max", "must exceed grid.t_min");
        const double slack = 1e-9 * (rc.model.x_max - rc.model.x_min);
        if (rc.grid.x_min < rc.model.x_min - slack || rc.grid.x_max > rc.model.x_max + slack)
            cfg::fail("grid.x_min", "x range outside the model domain");
    } else if (rc.model.has_position_space()) {
        rc.grid = default_grid(rc.model, *rc.coeffs);
    }

    if (const json* b = cfg::find(j, "bundles")) {
        cfg::check_keys(*b, "bundles", {"speeds", "epsilon_v"});
        rc.epsilon_v = cfg::num(*b, "bundles", "epsilon_v", 1e-9);
        if (const json* s = cfg::find(*b, "speeds")) {
            if (s->is_string() && s->get<std::string>() == "all") {
                rc.bundles_all = true;
            } else if (s->is_array()) {
                for (const auto& v : *s) {
                    if (!v.is_number()) cfg::fail("bundles.speeds", "expected numbers or \"all\"");
                    rc.bundle_speeds.push_back(v.get<double>());
                }
            } else {
                cfg::fail("bundles.speeds", "expected an array of numbers or \"all\"");
            }
        }
    }

    if (const json* r = cfg::find(j, "revival")) {
        cfg::check_keys(*r, "revival", {"p", "q"});
        rc.p = cfg::integer(*r, "revival", "p", rc.p);
        rc.q = cfg::integer(*r, "revival", "q", rc.q);
    }

    if (const json* t = cfg::find(j, "trajectories")) {
        cfg::check_keys(*t, "trajectories", {"seeds"});
        const json* seeds = cfg::find(*t, "seeds");
        if (!seeds || !seeds->is_array())
            cfg::fail("trajectories.seeds", "expected an array of seed objects");
        int idx = 0;
        for (const auto& s : *seeds) {
            const std::string prefix = "trajectories.seeds[" + std::to_string(idx++) + "]";
            cfg::check_keys(s, prefix, {"n", "m", "sign1", "sign2", "x0"});
            TrajectorySeed seed;
            seed.n = int(cfg::integer(s, prefix, "n"));
            seed.m = int(cfg::integer(s, prefix, "m"));
            const auto sgn = [&](const char* key) {
                const std::string v = cfg::str(s, prefix, key);
                if (v == "+") return +1;
                if (v == "-") return -1;
                cfg::fail(prefix + "." + key, "expected \"+\" or \"-\"");
            };
            seed.sign1 = sgn("sign1");
            seed.sign2 = sgn("sign2");
            seed.x0 = cfg::num(s, prefix, "x0");
            rc.seeds.push_back(seed);
        }
    }

    if (const json* c = cfg::find(j, "classicized")) {
        cfg::check_keys(*c, "classicized", {"prominence_rel", "overlay_tolerance_rel"});
        rc.prominence_rel = cfg::num(*c, "classicized", "prominence_rel", rc.prominence_rel);
        rc.overlay_tolerance_rel =
            cfg::num(*c, "classicized", "overlay_tolerance_rel", rc.overlay_tolerance_rel);
    }

    if (const json* t = cfg::find(j, "timescales")) {
        cfg::check_keys(*t, "timescales", {"n_bar", "max_order"});
        if (cfg::find(*t, "n_bar")) rc.nbar = cfg::num(*t, "timescales", "n_bar");
        rc.max_order = int(cfg::integer(*t, "timescales", "max_order", rc.max_order));
    }

    if (const json* o = cfg::find(j, "output")) {
        cfg::check_keys(*o, "output", {"directory", "formats", "workers"});
        rc.out_dir = cfg::str(*o, "output", "directory", rc.out_dir);
        rc.workers = int(cfg::integer(*o, "output", "workers", 0));
        if (const json* fmts = cfg::find(*o, "formats")) {
            if (!fmts->is_array()) cfg::fail("output.formats", "expected an array");
            rc.fmt_csv = rc.fmt_pgm = false;
            for (const auto& fj : *fmts) {
                const std::string fv = fj.is_string() ? fj.get<std::string>() : "";
                if (fv == "csv")
                    rc.fmt_csv = true;
                else if (fv == "pgm")
                    rc.fmt_pgm = true;
                else
                    cfg::fail("output.formats", "entries must be \"csv\" or \"pgm\"");
            }
        }
    }
    return rc;
}

inline std::filesystem::path ensure_out_dir(const RunConfig& rc) {
    std::filesystem::path dir(rc.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory: " + rc.out_dir);
    return dir;
}

inline void export_grid_all(const RunConfig& rc, const CarpetGrid& grid,
                            const std::filesystem::path& dir, const std::string& stem,
                            std::ostream& out) {
    if (rc.fmt_csv) {
        const auto p = dir / (stem + ".csv");
        export_grid(grid, GridFormat::Csv, p.string());
        out << "wrote " << p.string() << "\n";
    }
    if (rc.fmt_pgm) {
        const auto p = dir / (stem + ".pgm");
        export_grid(grid, GridFormat::Pgm, p.string());
        out << "wrote " << p.string() << "\n";
    }
}

inline void print_warnings(const RunConfig& rc, std::ostream& err) {
    for (const auto& w : rc.coeffs->warnings()) err << "warning: " << w << "\n";
}

inline std::string bundle_stem(const SpectrumModel& model, const VelocityBundle& b, int index) {
    char buf[64];
    if (model.kind == ModelKind::InfiniteSquareWell)
        std::snprintf(buf, sizeof buf, "bundle_v%ld", b.isw_key);
    else
        std::snprintf(buf, sizeof buf, "bundle_s%d", index);
    return buf;
}

inline double resolve_speed(const SpectrumModel& model, double requested) {
    if (model.kind == ModelKind::InfiniteSquareWell)
        return requested * isw_velocity_quantum(model); // multiples of v0
    return requested;
}

inline int cmd_carpet(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    const auto dir = ensure_out_dir(rc);
    const auto grid = density_grid(rc.model, *rc.coeffs, rc.grid, rc.workers);
    export_grid_all(rc, grid, dir, "carpet", out);
    return 0;
}

inline int cmd_bundles(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    const auto dir = ensure_out_dir(rc);
    const auto bundles = build_bundles(rc.model, *rc.coeffs, rc.epsilon_v);
    export_bundle_inventory(bundles, (dir / "bundle_inventory.csv").string());
    out << "wrote " << (dir / "bundle_inventory.csv").string() << "\n";

    {
        std::ofstream f(dir / "bundle_counts.csv", std::ios::binary);
        if (!f) throw io_error("cannot open for writing: bundle_counts.csv");
        f << "speed,isw_key,full_count,conjugate_pair_count\n";
        char buf[96];
        for (const auto& b : bundles) {
            std::snprintf(buf, sizeof buf, "%.17g,%ld,%d,%d\n", b.speed, b.isw_key, b.full_count,
                          b.conjugate_pair_count);
            f << buf;
        }
    }
    out << "wrote " << (dir / "bundle_counts.csv").string() << "\n";

    std::vector<const VelocityBundle*> selected;
    if (rc.bundles_all) {
        for (const auto& b : bundles) selected.push_back(&b);
    } else {
        for (double s : rc.bundle_speeds)
            selected.push_back(&find_bundle(bundles, resolve_speed(rc.model, s), rc.epsilon_v));
    }
    for (const auto* b : selected)
        out << "bundle speed=" << b->speed << (b->isw_key >= 0 ? " (v0 multiple " : " (cluster")
            << (b->isw_key >= 0 ? std::to_string(b->isw_key) : "") << ")"
            << ": full_count=" << b->full_count
            << " conjugate_pair_count=" << b->conjugate_pair_count << "\n";

    int index = 0;
    for (const auto* b : selected) {
        const auto grid = bundle_grid(rc.model, *rc.coeffs, *b, rc.grid, rc.workers);
        export_grid_all(rc, grid, dir, bundle_stem(rc.model, *b, index++), out);
    }
    return 0;
}

inline int cmd_velocities(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    out << "n m sign1 sign2 class speed\n";
    char buf[96];
    static constexpr int signs[2] = {+1, -1};
    for (const auto& [n, cn] : rc.coeffs->entries())
        for (const auto& [m, cm] : rc.coeffs->entries())
            for (int s1 : signs)
                for (int s2 : signs) {
                    const double v = degeneracy_speed(rc.model, n, m, s1, s2);
                    const auto cls = classify_term(*rc.coeffs, rc.model, n, m, s1, s2);
                    std::snprintf(buf, sizeof buf, "%d %d %c %c %s %.17g\n", n, m,
                                  s1 > 0 ? '+' : '-', s2 > 0 ? '+' : '-', to_string(cls), v);
                    out << buf;
                }
    return 0;
}

inline int cmd_trajectories(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    if (rc.seeds.empty()) throw domain_error("config error: trajectories.seeds: none given");
    const auto dir = ensure_out_dir(rc);
    const auto t_grid = linspace(rc.grid.t_min, rc.grid.t_max, rc.grid.nt);
    int idx = 0;
    for (const auto& s : rc.seeds) {
        const auto path = constant_phase_trajectory(rc.model, s.n, s.m, s.sign1, s.sign2, s.x0,
                                                    t_grid);
        const auto file = dir / ("trajectory_" + std::to_string(idx++) + ".csv");
        export_path_csv(path, file.string());
        out << "wrote " << file.string() << "\n";
    }
    return 0;
}

inline int cmd_revival(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    const auto dir = ensure_out_dir(rc);
    const auto x_grid = linspace(rc.grid.x_min, rc.grid.x_max, rc.grid.nx);
    const auto rec = reconstruct_fractional(rc.model, *rc.coeffs, rc.p, rc.q, x_grid);
    {
        std::ofstream f(dir / "revival_coefficients.csv", std::ios::binary);
        if (!f) throw io_error("cannot open for writing: revival_coefficients.csv");
        export_revival_plan(rec.plan, f);
    }
    out << "wrote " << (dir / "revival_coefficients.csv").string() << "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "p/q = %ld/%ld  t = %.17g  l = %ld\n", rc.p, rc.q, rec.t,
                  rec.plan.l);
    out << buf;
    for (std::size_t s = 0; s < rec.plan.a.size(); ++s) {
        std::snprintf(buf, sizeof buf, "a[%zu] = (%.12g, %.12g)  |a|^2 = %.12g\n", s,
                      rec.plan.a[s].real(), rec.plan.a[s].imag(), std::norm(rec.plan.a[s]));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "reconstruction_error = %.6g\n", rec.l2_error);
    out << buf;
    std::ofstream f(dir / "revival_summary.txt", std::ios::binary);
    if (!f) throw io_error("cannot open for writing: revival_summary.txt");
    std::snprintf(buf, sizeof buf, "l = %ld\nreconstruction_error = %.17g\n", rec.plan.l,
                  rec.l2_error);
    f << buf;
    return 0;
}

inline int cmd_classicized(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    const auto dir = ensure_out_dir(rc);
    const auto grid = classicized_grid(rc.model, *rc.coeffs, rc.grid, rc.workers);
    export_grid_all(rc, grid, dir, "classicized", out);

    // classical path at the packet-center energy, launched from the outer
    // turning point (where the t = 0 packet sits)
    const int n0 = rc.coeffs->center_index();
    const double e0 = energy(rc.model, n0);
    double x0;
    if (rc.model.kind == ModelKind::InfiniteSquareWell) {
        x0 = rc.model.L;
    } else {
        const double x_well = detail::bisect_root(
            [&](double x) { return potential_derivative(rc.model, x); }, rc.model.x_min,
            rc.model.x_max);
        x0 = detail::bisect_root(
            [&](double x) { return potential_value(rc.model, x) - e0; }, x_well, rc.model.x_max);
    }
    const auto path = classical_trajectory(rc.model, e0, std::clamp(x0, rc.model.x_min,
                                                                    rc.model.x_max),
                                           -1, grid.t_samples);
    export_path_csv(path, (dir / "classical_path.csv").string());
    out << "wrote " << (dir / "classical_path.csv").string() << "\n";

    double peak = 0.0;
    for (double v : grid.values) peak = std::max(peak, v);
    const auto ridges =
        extract_extrema(grid, rc.prominence_rel * peak).dominant(ExtremumKind::Ridge);
    const double tol = rc.overlay_tolerance_rel * (rc.grid.x_max - rc.grid.x_min);
    const auto score = trajectory_overlay_score(ridges, {path}, tol);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "overlay_fraction = %.6g\noverlay_rms = %.6g\nridges = %d\nmatched = %d\n",
                  score.fraction, score.rms, score.total, score.matched);
    out << buf;
    std::ofstream f(dir / "overlay.txt", std::ios::binary);
    if (!f) throw io_error("cannot open for writing: overlay.txt");
    f << buf;
    return 0;
}

inline int cmd_timescales(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    print_warnings(rc, err);
    const double nb = rc.nbar ? *rc.nbar : rc.coeffs->n_bar();
    const auto report = time_scales(rc.model, nb, rc.max_order);
    out << format_time_scales(report);
    return 0;
}

} // namespace detail_cli

// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"quantum carpet toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<double> v_flags;
    std::optional<long> p_flag, q_flag;
    std::optional<std::string> format_flag, out_flag;
    std::optional<int> workers_flag;
    std::optional<double> nbar_flag;

    const char* names[] = {"carpet",  "bundles",     "velocities", "trajectories",
                           "revival", "classicized", "timescales"};
    for (const char* name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--v", v_flags,
                        "bundle speed override (ISW: multiple of v0; otherwise absolute)");
        sub->add_option("--p", p_flag, "revival fraction numerator");
        sub->add_option("--q", q_flag, "revival fraction denominator");
        sub->add_option("--format", format_flag, "csv, pgm or both");
        sub->add_option("--out", out_flag, "output directory override");
        sub->add_option("--workers", workers_flag, "grid worker count (0 = auto)");
        sub->add_option("--nbar", nbar_flag, "time-scale expansion center override");
    }

    std::vector<const char*> argv;
    argv.push_back("qcarpet");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        auto rc = detail_cli::parse_config(config_path);
        if (!v_flags.empty()) {
            rc.bundle_speeds = v_flags;
            rc.bundles_all = false;
        }
        if (p_flag) rc.p = *p_flag;
        if (q_flag) rc.q = *q_flag;
        if (out_flag) rc.out_dir = *out_flag;
        if (workers_flag) rc.workers = *workers_flag;
        if (nbar_flag) rc.nbar = *nbar_flag;
        if (format_flag) {
            if (*format_flag == "csv") {
                rc.fmt_csv = true;
                rc.fmt_pgm = false;
            } else if (*format_flag == "pgm") {
                rc.fmt_csv = false;
                rc.fmt_pgm = true;
            } else if (*format_flag == "both") {
                rc.fmt_csv = rc.fmt_pgm = true;
            } else {
                throw domain_error("config error: --format must be csv, pgm or both");
            }
        }

        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "carpet") return detail_cli::cmd_carpet(rc, out, err);
        if (sub == "bundles") return detail_cli::cmd_bundles(rc, out, err);
        if (sub == "velocities") return detail_cli::cmd_velocities(rc, out, err);
        if (sub == "trajectories") return detail_cli::cmd_trajectories(rc, out, err);
        if (sub == "revival") return detail_cli::cmd_revival(rc, out, err);
        if (sub == "classicized") return detail_cli::cmd_classicized(rc, out, err);
        if (sub == "timescales") return detail_cli::cmd_timescales(rc, out, err);
        err << "error: unknown subcommand\n";
        return 2;
    } catch (const io_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const numerical_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace qcarpet::cli
