#pragma once

// Shot orchestration: each shot draws (X, P), synthesizes its field,
// propagates the shared ground state and extracts a cutoff. Shots depend
// only on (master_seed, shot_index) and read-only shared state.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "analytics.hpp"
#include "error.hpp"
#include "fieldgen.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "tdse.hpp"

namespace sqhhg {

enum class DriverKind { squeezed, classical_benchmark, coherent };

inline const char* to_string(DriverKind kind)
{
    switch (kind) {
    case DriverKind::squeezed: return "squeezed";
    case DriverKind::classical_benchmark: return "classical_benchmark";
    case DriverKind::coherent: return "coherent";
    }
    return "?";
}

struct RunConfig {
    SqueezeParams squeeze;
    PulseSpec pulse = PulseSpec::make(1500.0, 1.0e14, 2.0);
    ModeVolumeSpec mode_volume;
    AtomModel atom;
    bool calibrate_atom = true;  // bisect softening_a to atom.ip_target_ev
    GridSpec grid;
    double time_half_width_in_n = 3.0;
    CutoffProtocol protocol;
    WindowKind window = WindowKind::blackman;
    double spectrum_max_order = 300.0;
    std::size_t n_shot = 200;
    std::uint64_t master_seed = 20240601;
    DriverKind driver_kind = DriverKind::squeezed;
    bool store_spectra = false;
    double max_flagged_fraction = 0.05;
    std::size_t bootstrap_resamples = 2000;
    std::uint64_t bootstrap_seed = 7;

    void validate() const
    {
        require(n_shot >= 1, ErrorKind::invalid_parameter, "n_shot must be >= 1");
        require(squeeze.r >= 0.0 && std::isfinite(squeeze.r), ErrorKind::invalid_parameter, "r must be >= 0");
        require(std::isfinite(squeeze.theta) && std::isfinite(squeeze.phi), ErrorKind::invalid_parameter,
                "angles must be finite");
        require(time_half_width_in_n > 0.0, ErrorKind::invalid_parameter, "time half width must be positive");
        require(spectrum_max_order >= 0.0, ErrorKind::invalid_parameter, "spectrum max order must be >= 0");
        require(max_flagged_fraction >= 0.0 && max_flagged_fraction <= 1.0, ErrorKind::invalid_parameter,
                "max flagged fraction must lie in [0, 1]");
        require(bootstrap_resamples >= 100, ErrorKind::invalid_parameter, "bootstrap needs at least 100 resamples");
        grid.validate();
        protocol.validate();
    }
};

/// Quantities shared by every shot of a run, computed once.
struct PreparedRun {
    RunConfig config;
    AtomModel atom;
    std::shared_ptr<const Wavefunction> ground;
    double ground_energy_au = 0.0;
    double e_vac_au = 0.0;
    TimeGridSpec time_grid;
    double hint_ho = 0.0;

    std::array<double, 2> mean() const { return {config.squeeze.alpha_mag * std::cos(config.squeeze.phi),
                                                 config.squeeze.alpha_mag * std::sin(config.squeeze.phi)}; }

    QuadratureCovariance covariance() const
    {
        switch (config.driver_kind) {
        case DriverKind::squeezed: return covariance_of(config.squeeze.r, config.squeeze.theta);
        case DriverKind::classical_benchmark:
            return classical_benchmark_covariance(config.squeeze.r, config.squeeze.theta);
        case DriverKind::coherent: return {};
        }
        return {};
    }

    /// Same atom and grids with a different driver.
    PreparedRun with_driver(DriverKind kind, double r, double theta) const
    {
        PreparedRun copy = *this;
        copy.config.driver_kind = kind;
        copy.config.squeeze = SqueezeParams::make(r, theta, config.squeeze.alpha_mag, config.squeeze.phi);
        return copy;
    }
};

/// Calibrates (or solves) the atom, resolves E_vac and fixes the
/// displacement at X_c = E0 / E_vac along phi.
inline PreparedRun prepare_run(const RunConfig& config, const GroundStateOptions& options = {})
{
    config.validate();
    PreparedRun run;
    run.config = config;
    GroundState gs;
    if (config.calibrate_atom) {
        auto cal = calibrate_softcore(config.atom.ip_target_ev, config.grid, options);
        run.atom = cal.atom;
        gs = std::move(cal.ground);
    } else {
        run.atom = config.atom;
        gs = ground_state(run.atom, config.grid, options);
        run.atom.ip_achieved_au = -gs.energy_au;
    }
    require(run.atom.ip_achieved_au > 0.0, ErrorKind::calibration, "ground state is not bound");
    run.ground_energy_au = gs.energy_au;
    run.ground = std::make_shared<const Wavefunction>(std::move(gs.psi));
    run.e_vac_au = resolve_vacuum_field(config.mode_volume, config.pulse);
    run.config.squeeze.alpha_mag = config.pulse.e0_au / run.e_vac_au;
    run.time_grid = default_time_grid(config.pulse, config.grid.dt, config.time_half_width_in_n);
    run.hint_ho = classical_cutoff(config.pulse.e0_au, run.atom.ip_achieved_au, config.pulse.omega_au) /
                  config.pulse.omega_au;
    return run;
}

struct ShotRecord {
    std::uint64_t shot_index = 0;
    QuadratureSample sample;
    CutoffExtraction cutoff;
    double norm_loss = 0.0;
    bool failed = false;  // numerical failure during the pipeline
    std::string failure;
    std::optional<Spectrum> spectrum;

    bool valid() const { return !failed && cutoff.valid(); }
};

inline std::string flag_string(const ShotRecord& rec)
{
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += '|';
        out += name;
    };
    add(rec.failed, "failed");
    add(rec.cutoff.flags.no_plateau, "no_plateau");
    add(rec.cutoff.flags.no_drop, "no_drop");
    add(rec.cutoff.flags.noisy, "noisy");
    return out.empty() ? "none" : out;
}

/// Full pipeline for one given quadrature pair.
inline ShotRecord run_sample(const PreparedRun& run, const QuadratureSample& sample)
{
    const auto& cfg = run.config;
    ShotRecord rec;
    rec.shot_index = sample.shot_index;
    rec.sample = sample;
    try {
        const auto field = synthesize_field(sample, cfg.pulse, run.e_vac_au, run.time_grid);
        const auto trace = propagate(*run.ground, field, run.atom, cfg.grid);
        rec.norm_loss = 1.0 - trace.norm_history.back();
        const double max_order = std::max(cfg.spectrum_max_order, 2.0 * run.hint_ho);
        auto spectrum = hhg_spectrum(trace, cfg.pulse.omega_au, cfg.window, max_order);
        rec.cutoff = extract_cutoff(spectrum, cfg.protocol, run.hint_ho);
        if (cfg.store_spectra) rec.spectrum = std::move(spectrum);
    } catch (const Error& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.cutoff.h_ev = rec.cutoff.h_ho = std::numeric_limits<double>::quiet_NaN();
    }
    return rec;
}

inline ShotRecord run_shot(const PreparedRun& run, std::uint64_t shot_index)
{
    const auto sample =
        sample_gaussian(run.covariance(), run.mean(), 1, {run.config.master_seed, shot_index}).front();
    return run_sample(run, sample);
}

/// Deterministic reference: the displacement mean with no fluctuation.
inline ShotRecord mean_field_shot(const PreparedRun& run)
{
    const auto m = run.mean();
    return run_sample(run, {m[0], m[1], 0});
}

/// Runs the listed shots with up to `workers` threads. Records come back in
/// the order of `indices` whatever the scheduling.
inline std::vector<ShotRecord> run_shots(const PreparedRun& run, std::span<const std::uint64_t> indices,
                                         unsigned workers = 1)
{
    std::vector<ShotRecord> records(indices.size());
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(indices.size())));
    if (threads == 1) {
        for (std::size_t i = 0; i < indices.size(); ++i) records[i] = run_shot(run, indices[i]);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> has_error{false};
    auto worker = [&](std::exception_ptr& slot) {
        try {
            for (std::size_t i = next++; i < indices.size(); i = next++) records[i] = run_shot(run, indices[i]);
        } catch (...) {
            slot = std::current_exception();
            has_error = true;
        }
    };
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, std::ref(errors[t]));
    for (auto& th : pool) th.join();
    if (has_error) {
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return records;
}

/// Shots 0 .. n_shot-1 in index order.
inline std::vector<ShotRecord> run_ensemble(const PreparedRun& run, unsigned workers = 1)
{
    std::vector<std::uint64_t> indices(run.config.n_shot);
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    return run_shots(run, indices, workers);
}

inline double flagged_fraction(std::span<const ShotRecord> records)
{
    if (records.empty()) return 0.0;
    const auto flagged = std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.valid(); });
    return static_cast<double>(flagged) / static_cast<double>(records.size());
}

inline void check_quality_gate(std::span<const ShotRecord> records, double max_fraction)
{
    const double fraction = flagged_fraction(records);
    if (fraction > max_fraction) {
        fail(ErrorKind::quality_gate, "flagged shot fraction " + std::to_string(fraction) + " exceeds " +
                                          std::to_string(max_fraction));
    }
}

/// Arithmetic mean of S over valid shots with stored spectra.
inline Spectrum averaged_spectrum(std::span<const ShotRecord> records)
{
    const Spectrum* first = nullptr;
    std::size_t count = 0;
    Spectrum mean;
    for (const auto& rec : records) {
        if (!rec.valid() || !rec.spectrum) continue;
        const auto& s = *rec.spectrum;
        if (!first) {
            first = &s;
            mean = s;
            count = 1;
            continue;
        }
        if (s.size() != first->size() || s.n_fft != first->n_fft || s.dt != first->dt ||
            s.omega_carrier_au != first->omega_carrier_au) {
            fail(ErrorKind::grid_mismatch, "stored spectra are on different frequency grids");
        }
        for (std::size_t k = 0; k < s.size(); ++k) mean.s[k] += s.s[k];
        ++count;
    }
    require(count > 0, ErrorKind::insufficient_data, "no valid shots with stored spectra");
    for (auto& v : mean.s) v /= static_cast<double>(count);
    return mean;
}

}  // namespace sqhhg
