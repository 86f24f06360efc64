#pragma once

// Weighting-coefficient distributions c_n and the wavefunctions built from
// them: Psi(x,t) = sum_n c_n psi_n(x) exp(-i E_n t), and the classicized
// Psi_cl(x,t) = sum_k c_{k+nbar} psi_{k+nbar}(x) exp(-2 pi i k t / T_cl),
// which keeps only the linear-in-k part of the spectrum and is therefore
// exactly T_cl-periodic.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "qcarpet/errors.hpp"
#include "qcarpet/numerov.hpp"
#include "qcarpet/spectrum.hpp"

namespace qcarpet {

using cplx = std::complex<double>;

class CoefficientSet {
public:
    using Entry = std::pair<int, cplx>;

    // |c_n| ~ exp(-(n - n_bar)^2 / (4 sigma^2)) on [n_lo, n_hi]; entries below
    // 1e-8 of the peak weight are dropped.
    static CoefficientSet gaussian(double n_bar, double sigma, int n_lo, int n_hi) {
        if (!(sigma > 0)) throw construction_error("gaussian coefficients need sigma > 0");
        if (n_lo < 0 || n_lo > n_hi)
            throw construction_error("gaussian coefficients need 0 <= n_lo <= n_hi");
        std::vector<Entry> e;
        for (int n = n_lo; n <= n_hi; ++n) {
            const double d = (n - n_bar) / (2.0 * sigma);
            const double w = std::exp(-d * d);
            if (w >= 1e-8) e.emplace_back(n, w);
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "gaussian(n_bar=%.9g,sigma=%.9g,[%d,%d])", n_bar, sigma,
                      n_lo, n_hi);
        return CoefficientSet(std::move(e), buf, "empty support after gaussian truncation");
    }

    static CoefficientSet uniform(int n_lo, int n_hi) {
        if (n_lo < 1 || n_lo > n_hi)
            throw construction_error("uniform coefficients need 1 <= n_lo <= n_hi");
        std::vector<Entry> e;
        for (int n = n_lo; n <= n_hi; ++n) e.emplace_back(n, 1.0);
        char buf[64];
        std::snprintf(buf, sizeof buf, "uniform(%d,%d)", n_lo, n_hi);
        return CoefficientSet(std::move(e), buf, "");
    }

    // equal weights on {1, 4, 9, ..., floor(sqrt(n_max))^2}
    static CoefficientSet perfect_squares(int n_max) {
        if (n_max < 1) throw construction_error("perfect_squares needs n_max >= 1");
        std::vector<Entry> e;
        for (int k = 1; k * k <= n_max; ++k) e.emplace_back(k * k, 1.0);
        char buf[48];
        std::snprintf(buf, sizeof buf, "perfect_squares(%d)", n_max);
        return CoefficientSet(std::move(e), buf, "");
    }

    static CoefficientSet custom(std::vector<Entry> entries) {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].first == entries[i - 1].first)
                throw construction_error("duplicate quantum number in custom coefficients");
        return CoefficientSet(std::move(entries), "custom", "");
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    int min_n() const { return entries_.front().first; }
    int max_n() const { return entries_.back().first; }

    double n_bar() const { return n_bar_; }
    double delta_n() const { return delta_n_; }

    // nearest supported integer to n_bar; exact half-ties break downward
    int center_index() const {
        int best = entries_.front().first;
        double bd = std::abs(best - n_bar_);
        for (const auto& [n, c] : entries_) {
            const double d = std::abs(n - n_bar_);
            if (d < bd - 1e-12 || (std::abs(d - bd) <= 1e-12 && n < best)) {
                bd = d;
                best = n;
            }
        }
        return best;
    }

    cplx amplitude(int n) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), n,
                                   [](const Entry& e, int v) { return e.first < v; });
        if (it != entries_.end() && it->first == n) return it->second;
        return {};
    }

    const std::vector<std::string>& warnings() const { return warnings_; }
    const std::string& describe() const { return desc_; }

private:
    CoefficientSet(std::vector<Entry> entries, std::string desc, const char* empty_msg)
        : entries_(std::move(entries)), desc_(std::move(desc)) {
        if (entries_.empty())
            throw construction_error(*empty_msg ? empty_msg : "empty coefficient set");
        std::sort(entries_.begin(), entries_.end(),
                  [](const Entry& a, const Entry& b) { return a.first < b.first; });
        double norm2 = 0.0;
        for (const auto& [n, c] : entries_) norm2 += std::norm(c);
        if (!(norm2 > 0)) throw construction_error("all coefficients vanish");
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& [n, c] : entries_) c *= inv;
        double mean = 0.0;
        for (const auto& [n, c] : entries_) mean += n * std::norm(c);
        double var = 0.0;
        for (const auto& [n, c] : entries_) var += (n - mean) * (n - mean) * std::norm(c);
        n_bar_ = mean;
        delta_n_ = std::sqrt(var);
        if (delta_n_ <= 1.0 || n_bar_ <= 2.0 * delta_n_) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "semiclassical hierarchy 1 << dn << n_bar not satisfied "
                          "(n_bar=%.4g, dn=%.4g)",
                          n_bar_, delta_n_);
            warnings_.emplace_back(buf);
        }
    }

    std::vector<Entry> entries_;
    double n_bar_ = 0.0, delta_n_ = 0.0;
    std::string desc_;
    std::vector<std::string> warnings_;
};

// T_cl = 2 pi / E'(nbar) at the rounded packet center.
inline double classicized_period(const SpectrumModel& m, const CoefficientSet& coeffs) {
    const int n0 = coeffs.center_index();
    const double d1 = spectrum_derivative(m, n0, 1);
    if (d1 == 0.0) throw degenerate_spectrum_error("E'(n_bar) = 0: classical period undefined");
    if (d1 < 0.0) throw domain_error("decreasing spectrum: classicized evolution unsupported");
    return 2.0 * pi / d1;
}

inline cplx psi(const SpectrumModel& m, const CoefficientSet& coeffs, double x, double t) {
    cplx sum = 0.0;
    for (const auto& [n, c] : coeffs.entries()) {
        const double e = energy(m, n);
        sum += c * eigenfunction(m, n, x) * std::polar(1.0, -e * t);
    }
    return sum;
}

inline cplx psi_cl(const SpectrumModel& m, const CoefficientSet& coeffs, double x, double t) {
    const int n0 = coeffs.center_index();
    const double t_cl = classicized_period(m, coeffs);
    cplx sum = 0.0;
    for (const auto& [n, c] : coeffs.entries()) {
        const double k = n - n0;
        sum += c * eigenfunction(m, n, x) * std::polar(1.0, -2.0 * pi * k * t / t_cl);
    }
    return sum;
}

} // namespace qcarpet
