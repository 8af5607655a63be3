#pragma once

// Ensemble statistics: mean and unbiased variance of the cutoff over valid
// shots, percentile-bootstrap intervals, the witness ratio against an SQL
// reference, and parameter sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "analytics.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace sqhhg {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double half_width() const { return 0.5 * (hi - lo); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

struct BootstrapOptions {
    std::size_t resamples = 2000;
    std::uint64_t seed = 7;
};

/// Minimum number of valid shots for a variance estimate.
inline constexpr std::size_t kMinShotsForVariance = 10;

inline double sample_mean(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v)
{
    require(v.size() >= 2, ErrorKind::insufficient_data, "variance needs at least two values");
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

/// Linear interpolation between order statistics at q (B - 1).
inline double percentile_sorted(std::span<const double> sorted, double q)
{
    require(!sorted.empty(), ErrorKind::insufficient_data, "percentile of an empty set");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline Interval percentile_interval(std::vector<double> replicates)
{
    std::sort(replicates.begin(), replicates.end());
    return {percentile_sorted(replicates, 0.025), percentile_sorted(replicates, 0.975)};
}

inline std::vector<double> resample(std::span<const double> v, RandomStream& stream)
{
    std::vector<double> out(v.size());
    for (auto& x : out) x = v[stream.next_below(v.size())];
    return out;
}

/// Bootstrap replicates of a statistic of one sample.
template <class Statistic>
std::vector<double> bootstrap_replicates(std::span<const double> v, Statistic&& stat, std::size_t resamples,
                                         SeedSpec seed)
{
    RandomStream stream(seed);
    std::vector<double> reps(resamples);
    for (auto& r : reps) r = stat(resample(v, stream));
    return reps;
}

struct EnsembleStats {
    std::size_t n_valid = 0;
    std::size_t n_flagged = 0;
    double mean_h_ev = 0.0;
    Interval ci95_mean_ev;
    std::optional<double> var_h_ev2;
    std::optional<Interval> ci95_var_ev2;
    double ev_per_order = 0.0;
    std::vector<double> h_ev;  // valid cutoffs in record order

    double var_h() const
    {
        if (!var_h_ev2) fail(ErrorKind::insufficient_data, "variance needs at least 10 valid shots");
        return *var_h_ev2;
    }
    Interval ci95_var() const
    {
        if (!ci95_var_ev2) fail(ErrorKind::insufficient_data, "variance needs at least 10 valid shots");
        return *ci95_var_ev2;
    }
    double mean_h_ho() const { return mean_h_ev / ev_per_order; }
    double var_h_ho2() const { return var_h() / (ev_per_order * ev_per_order); }
};

/// Statistics of H over valid shots. Flagged shots are excluded and counted.
inline EnsembleStats cutoff_statistics(std::span<const ShotRecord> records, const BootstrapOptions& options = {})
{
    EnsembleStats st;
    for (const auto& rec : records) {
        if (!rec.valid()) {
            ++st.n_flagged;
            continue;
        }
        if (st.ev_per_order == 0.0 && rec.cutoff.h_ho > 0.0) st.ev_per_order = rec.cutoff.h_ev / rec.cutoff.h_ho;
        st.h_ev.push_back(rec.cutoff.h_ev);
    }
    st.n_valid = st.h_ev.size();
    require(st.n_valid >= 1, ErrorKind::insufficient_data, "no valid shots");
    st.mean_h_ev = sample_mean(st.h_ev);
    st.ci95_mean_ev = {st.mean_h_ev, st.mean_h_ev};
    if (st.n_valid >= 2) {
        st.ci95_mean_ev = percentile_interval(bootstrap_replicates(
            st.h_ev, [](const std::vector<double>& v) { return sample_mean(v); }, options.resamples,
            {options.seed, 0}));
    }
    if (st.n_valid >= kMinShotsForVariance) {
        st.var_h_ev2 = sample_variance(st.h_ev);
        st.ci95_var_ev2 = percentile_interval(bootstrap_replicates(
            st.h_ev, [](const std::vector<double>& v) { return sample_variance(v); }, options.resamples,
            {options.seed, 1}));
    }
    return st;
}

struct WitnessRatio {
    double ratio = 0.0;
    Interval ci95;
};

/// var_test / var_sql. Each bootstrap replicate resamples both ensembles
/// independently.
inline WitnessRatio witness_ratio(const EnsembleStats& test, const EnsembleStats& sql,
                                  const BootstrapOptions& options = {})
{
    const double var_test = test.var_h();
    const double var_sql = sql.var_h();
    if (!(sql.ci95_var().lo > 0.0)) {
        fail(ErrorKind::undefined_ratio, "SQL variance interval includes zero");
    }
    RandomStream test_stream({options.seed, 2});
    RandomStream sql_stream({options.seed, 3});
    std::vector<double> reps(options.resamples);
    for (auto& r : reps) {
        const double vt = sample_variance(resample(test.h_ev, test_stream));
        const double vs = sample_variance(resample(sql.h_ev, sql_stream));
        r = vt / vs;
    }
    return {var_test / var_sql, percentile_interval(std::move(reps))};
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size() && a.size() >= 2, ErrorKind::invalid_parameter,
            "rank correlation needs two equal-length series");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> order(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = sample_mean(ra);
    const double mb = sample_mean(rb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    require(saa > 0.0 && sbb > 0.0, ErrorKind::invalid_parameter, "rank correlation of a constant series");
    return sab / std::sqrt(saa * sbb);
}

struct RateWeightedCutoff {
    double h_ev = 0.0;
    double h_ho = 0.0;
    Interval ci95_ev;
};

/// Ensemble cutoff sum(Gamma_i H_i) / sum(Gamma_i) with Gamma_i the ADK rate
/// at the shot's peak field E_vac |X + iP|.
inline RateWeightedCutoff rate_weighted_cutoff(std::span<const ShotRecord> records, double e_vac_au,
                                               const AdkParams& adk, const BootstrapOptions& options = {})
{
    std::vector<double> h;
    std::vector<double> log_w;
    double ev_per_order = 0.0;
    for (const auto& rec : records) {
        if (!rec.valid()) continue;
        const double e = e_vac_au * std::hypot(rec.sample.x, rec.sample.p);
        if (!(e > 0.0)) continue;
        h.push_back(rec.cutoff.h_ev);
        log_w.push_back(-adk.b_au / e);
        if (ev_per_order == 0.0 && rec.cutoff.h_ho > 0.0) ev_per_order = rec.cutoff.h_ev / rec.cutoff.h_ho;
    }
    require(!h.empty(), ErrorKind::insufficient_data, "no valid shots");
    const double shift = *std::max_element(log_w.begin(), log_w.end());
    std::vector<double> w(h.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - shift);
    auto weighted = [&](std::span<const std::size_t> idx) {
        double sw = 0.0, swh = 0.0;
        for (auto i : idx) {
            sw += w[i];
            swh += w[i] * h[i];
        }
        return swh / sw;
    };
    std::vector<std::size_t> all(h.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    RateWeightedCutoff out;
    out.h_ev = weighted(all);
    out.h_ho = out.h_ev / ev_per_order;
    RandomStream stream({options.seed, 4});
    std::vector<double> reps(options.resamples);
    std::vector<std::size_t> idx(h.size());
    for (auto& r : reps) {
        for (auto& i : idx) i = stream.next_below(h.size());
        r = weighted(idx);
    }
    out.ci95_ev = percentile_interval(std::move(reps));
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Seed of the SQL reference ensemble, decorrelated from master_seed.
inline std::uint64_t reference_seed(std::uint64_t master_seed)
{
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline PreparedRun sql_reference_run(const PreparedRun& base)
{
    auto ref = base.with_driver(DriverKind::coherent, 0.0, 0.0);
    ref.config.master_seed = reference_seed(base.config.master_seed);
    return ref;
}

enum class SweepAxis { r, theta };

struct SweepRow {
    double value = 0.0;
    double sigma_x2 = 0.0;  // driver amplitude-quadrature variance
    double flagged_fraction = 0.0;
    EnsembleStats stats;
    std::optional<WitnessRatio> witness;
    std::optional<RateWeightedCutoff> weighted_cutoff;
    std::optional<CutoffExtraction> mean_spectrum_cutoff;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::r;
    EnsembleStats sql;
    double sql_flagged_fraction = 0.0;
    std::vector<SweepRow> rows;
    std::optional<TwoChannelModel> fit;
};

/// Rows with a variance estimate, weighted by the inverse squared half-width
/// of their bootstrap interval.
inline std::vector<VariancePoint> variance_points(std::span<const SweepRow> rows)
{
    std::vector<VariancePoint> points;
    for (const auto& row : rows) {
        if (!row.stats.var_h_ev2) continue;
        const double hw = row.stats.ci95_var_ev2->half_width();
        points.push_back({row.value, *row.stats.var_h_ev2, hw > 0.0 ? 1.0 / (hw * hw) : 1.0});
    }
    return points;
}

inline BootstrapOptions bootstrap_options(const RunConfig& cfg) { return {cfg.bootstrap_resamples, cfg.bootstrap_seed}; }

inline SweepRow summarize_point(const PreparedRun& run, std::span<const ShotRecord> records, double value,
                                const EnsembleStats* sql)
{
    SweepRow row;
    row.value = value;
    row.sigma_x2 = run.covariance().sxx;
    row.flagged_fraction = flagged_fraction(records);
    row.stats = cutoff_statistics(records, bootstrap_options(run.config));
    if (sql && row.stats.var_h_ev2) {
        try {
            row.witness = witness_ratio(row.stats, *sql, bootstrap_options(run.config));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::undefined_ratio) throw;
        }
    }
    row.weighted_cutoff =
        rate_weighted_cutoff(records, run.e_vac_au, AdkParams::make(run.atom.ip_achieved_au), bootstrap_options(run.config));
    if (run.config.store_spectra) {
        row.mean_spectrum_cutoff = extract_cutoff(averaged_spectrum(records), run.config.protocol, run.hint_ho);
    }
    return row;
}

/// One ensemble per axis value with the base driver kind, each compared
/// with a shared SQL reference. Pass `sql` to reuse an existing reference.
inline SweepResult sweep(const PreparedRun& base, SweepAxis axis, std::span<const double> values, unsigned workers = 1,
                         const EnsembleStats* sql = nullptr,
                         const std::function<void(std::size_t, std::size_t)>& progress = {})
{
    SweepResult result;
    result.axis = axis;
    if (values.empty()) return result;
    if (sql) {
        result.sql = *sql;
    } else {
        const auto ref = sql_reference_run(base);
        const auto records = run_ensemble(ref, workers);
        result.sql_flagged_fraction = flagged_fraction(records);
        result.sql = cutoff_statistics(records, bootstrap_options(base.config));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double r = axis == SweepAxis::r ? values[i] : base.config.squeeze.r;
        const double theta = axis == SweepAxis::theta ? values[i] : base.config.squeeze.theta;
        const auto point = base.with_driver(base.config.driver_kind, r, theta);
        const auto records = run_ensemble(point, workers);
        result.rows.push_back(summarize_point(point, records, values[i], &result.sql));
        if (progress) progress(i + 1, values.size());
    }
    if (axis == SweepAxis::r) {
        try {
            result.fit = two_channel_fit(variance_points(result.rows));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data) throw;
        }
    }
    return result;
}

}  // namespace sqhhg
