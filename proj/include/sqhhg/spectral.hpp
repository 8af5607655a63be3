#pragma once

// Windowed HHG spectra and per-shot cutoff extraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "tdse.hpp"
#include "units.hpp"

namespace sqhhg {

enum class WindowKind { blackman, hann };

inline double window_value(WindowKind kind, std::size_t n, std::size_t length)
{
    if (length < 2) return 1.0;
    const double phase = 2.0 * units::kPi * static_cast<double>(n) / static_cast<double>(length - 1);
    switch (kind) {
    case WindowKind::blackman: return 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    case WindowKind::hann: return 0.5 - 0.5 * std::cos(phase);
    }
    return 1.0;
}

/// One-sided power spectrum S(w_k) = |dt * sum_n a_n W_n e^{-i w_k t_n}|^2
/// for k = 0 .. n_fft/2, w_k = 2 pi k / (n_fft dt). Parseval in this
/// convention: dw * (S_0 + 2 sum_{0<k<n/2} S_k + S_{n/2}) = 2 pi dt sum |a W|^2.
struct Spectrum {
    std::vector<double> omega_au;
    std::vector<double> s;
    std::vector<double> harmonic_order;
    double omega_carrier_au = 0.0;
    std::size_t n_fft = 0;
    double dt = 0.0;

    std::size_t size() const { return s.size(); }
    double d_omega() const { return omega_au.size() > 1 ? omega_au[1] - omega_au[0] : 0.0; }
    double d_order() const { return harmonic_order.size() > 1 ? harmonic_order[1] - harmonic_order[0] : 0.0; }

    /// Keeps bins up to max_order harmonic orders.
    void truncate(double max_order)
    {
        std::size_t keep = 0;
        while (keep < harmonic_order.size() && harmonic_order[keep] <= max_order) ++keep;
        omega_au.resize(keep);
        s.resize(keep);
        harmonic_order.resize(keep);
    }
};

inline std::size_t next_power_of_two(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Resolution ceiling for the spectral grid, harmonic orders per bin.
inline constexpr double kMaxBinWidthOrders = 0.25;

inline Spectrum hhg_spectrum(const AccelerationTrace& trace, double omega_carrier_au,
                             WindowKind window = WindowKind::blackman, double max_order = 0.0)
{
    const std::size_t m = trace.a_au.size();
    require(m >= 2 && trace.t_au.size() == m, ErrorKind::invalid_parameter, "trace needs at least two samples");
    require(omega_carrier_au > 0.0, ErrorKind::invalid_parameter, "carrier frequency must be positive");
    const double dt = (trace.t_au.back() - trace.t_au.front()) / static_cast<double>(m - 1);
    for (std::size_t i = 1; i < m; ++i) {
        if (std::abs(trace.t_au[i] - trace.t_au[i - 1] - dt) > 1e-9 * dt) {
            fail(ErrorKind::invalid_parameter, "spectrum requires a uniform time grid");
        }
    }
    const double min_bins = 2.0 * units::kPi / (kMaxBinWidthOrders * omega_carrier_au * dt);
    const std::size_t n_fft = next_power_of_two(std::max(m, static_cast<std::size_t>(std::ceil(min_bins))));

    RealFft fft(n_fft);
    auto in = fft.input();
    std::fill(in.begin(), in.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) in[i] = trace.a_au[i] * window_value(window, i, m);
    fft.execute();
    const auto out = fft.output();

    Spectrum spec;
    spec.omega_carrier_au = omega_carrier_au;
    spec.n_fft = n_fft;
    spec.dt = dt;
    const double d_omega = 2.0 * units::kPi / (static_cast<double>(n_fft) * dt);
    std::size_t bins = out.size();
    if (max_order > 0.0) {
        bins = std::min(bins, static_cast<std::size_t>(std::floor(max_order * omega_carrier_au / d_omega)) + 1);
    }
    spec.omega_au.resize(bins);
    spec.s.resize(bins);
    spec.harmonic_order.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double w = static_cast<double>(k) * d_omega;
        spec.omega_au[k] = w;
        spec.harmonic_order[k] = w / omega_carrier_au;
        spec.s[k] = dt * dt * std::norm(out[k]);
    }
    return spec;
}

struct CutoffProtocol {
    double drop_decades = 3.0;
    double smooth_width_ho = 1.0;
    double plateau_lo = 0.3;
    double plateau_hi = 0.8;
    double persistence_ho = 2.0;
    /// Scan starts at this fraction of the classical hint.
    double scan_start = 0.8;

    void validate() const
    {
        require(drop_decades > 0.0, ErrorKind::invalid_parameter, "drop_decades must be positive");
        require(smooth_width_ho > 0.0, ErrorKind::invalid_parameter, "smoothing width must be positive");
        require(plateau_lo > 0.0 && plateau_lo < plateau_hi && plateau_hi < 1.0, ErrorKind::invalid_parameter,
                "plateau window must satisfy 0 < lo < hi < 1");
        require(persistence_ho >= 0.0, ErrorKind::invalid_parameter, "persistence must be non-negative");
        require(scan_start > 0.0, ErrorKind::invalid_parameter, "scan start must be positive");
    }
};

struct CutoffFlags {
    bool no_plateau = false;
    bool no_drop = false;
    bool noisy = false;

    bool any() const { return no_plateau || no_drop || noisy; }
};

struct CutoffExtraction {
    double h_ev = 0.0;
    double h_ho = 0.0;
    double plateau_level_log10 = 0.0;
    CutoffFlags flags;

    bool valid() const { return !flags.any(); }
};

/// Boxcar average of width `width` bins (odd, truncated at the edges).
inline std::vector<double> boxcar_smooth(const std::vector<double>& values, std::size_t width)
{
    const std::size_t n = values.size();
    const std::size_t half = width / 2;
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + values[i];
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

inline std::vector<double> log10_spectrum(const Spectrum& spectrum)
{
    double peak = 0.0;
    for (double v : spectrum.s) peak = std::max(peak, v);
    const double floor = std::max(peak * 1e-250, std::numeric_limits<double>::min());
    std::vector<double> out(spectrum.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log10(std::max(spectrum.s[i], floor));
    return out;
}

/// Cutoff = lowest order above scan_start * hint where the smoothed log
/// spectrum has fallen drop_decades below the plateau median and stays
/// there for persistence_ho orders. The crossing is interpolated linearly
/// between bins.
inline CutoffExtraction extract_cutoff(const Spectrum& spectrum, const CutoffProtocol& protocol,
                                       double classical_hint_ho)
{
    protocol.validate();
    require(classical_hint_ho > 0.0, ErrorKind::invalid_parameter, "classical cutoff hint must be positive");
    require(spectrum.size() >= 4, ErrorKind::invalid_parameter, "spectrum too short");
    const auto& order = spectrum.harmonic_order;
    require(order.back() >= 1.5 * classical_hint_ho, ErrorKind::invalid_parameter,
            "spectrum must extend to 1.5x the classical cutoff hint");

    const double d_order = spectrum.d_order();
    const auto width = static_cast<std::size_t>(std::max(1.0, std::round(protocol.smooth_width_ho / d_order)));
    const auto smoothed = boxcar_smooth(log10_spectrum(spectrum), width | 1u);

    CutoffExtraction result;
    std::vector<double> window;
    for (std::size_t i = 0; i < smoothed.size(); ++i) {
        if (order[i] >= protocol.plateau_lo * classical_hint_ho && order[i] <= protocol.plateau_hi * classical_hint_ho) {
            window.push_back(smoothed[i]);
        }
    }
    double scan_from = protocol.scan_start * classical_hint_ho;
    if (window.size() < 3) {
        result.flags.no_plateau = true;
        window.clear();
        for (std::size_t i = 0; i < smoothed.size(); ++i) {
            if (order[i] >= 1.0) window.push_back(smoothed[i]);
        }
        scan_from = 1.0;
        require(!window.empty(), ErrorKind::invalid_parameter, "spectrum has no bins above the fundamental");
    }
    const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
    std::nth_element(window.begin(), mid, window.end());
    double plateau = *mid;
    if (window.size() % 2 == 0) {
        plateau = 0.5 * (plateau + *std::max_element(window.begin(), mid));
    }
    result.plateau_level_log10 = plateau;
    const double threshold = plateau - protocol.drop_decades;

    std::size_t i = 0;
    while (i < smoothed.size() && order[i] < scan_from) ++i;
    std::size_t found = smoothed.size();
    while (i < smoothed.size()) {
        if (smoothed[i] > threshold) {
            ++i;
            continue;
        }
        std::size_t j = i;
        bool persisted = true;
        while (j < smoothed.size() && order[j] <= order[i] + protocol.persistence_ho) {
            if (smoothed[j] > threshold) {
                persisted = false;
                break;
            }
            ++j;
        }
        if (persisted) {
            found = i;
            break;
        }
        i = j;
    }

    if (found == smoothed.size()) {
        result.flags.no_drop = true;
        result.h_ho = order.back();
    } else {
        double h = order[found];
        if (found > 0 && smoothed[found - 1] > threshold) {
            const double above = smoothed[found - 1] - threshold;
            const double below = threshold - smoothed[found];
            h = order[found - 1] + d_order * above / (above + below);
        }
        result.h_ho = h;
        for (std::size_t k = found; k < smoothed.size(); ++k) {
            if (smoothed[k] > threshold) {
                result.flags.noisy = true;
                break;
            }
        }
    }
    result.h_ev = units::au_to_ev(result.h_ho * spectrum.omega_carrier_au);
    return result;
}

}  // namespace sqhhg
