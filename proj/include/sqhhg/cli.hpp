#pragma once

// Subcommand implementations behind the sqhhg executable. Each command
// writes its tables into an output directory and throws sqhhg::Error on
// failure; exit_code_for maps error kinds onto process exit codes.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "analytics.hpp"
#include "config.hpp"
#include "ensemble.hpp"
#include "io.hpp"
#include "stats.hpp"
#include "units.hpp"

#ifndef SQHHG_VERSION
#define SQHHG_VERSION "0.0.0"
#endif

namespace sqhhg::cli {

using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { ok = 0, config_error = 2, quality_gate_failure = 3, numerical_failure = 4 };

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_parameter:
    case ErrorKind::unknown_unit: return config_error;
    case ErrorKind::quality_gate: return quality_gate_failure;
    default: return numerical_failure;
    }
}

struct CliOptions {
    std::filesystem::path out = ".";
    unsigned workers = 1;
    std::ostream* log = &std::cerr;
};

namespace detail {

inline void say(const CliOptions& opt, const std::string& line)
{
    if (opt.log) *opt.log << line << '\n';
}

inline void ensure_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::config, "cannot create output directory '" + dir.string() + "'");
}

/// Energy in a.u., eV and harmonic orders.
inline ojson energy_json(double au, double omega_au)
{
    ojson j;
    j["au"] = au;
    j["ev"] = units::au_to_ev(au);
    j["ho"] = au / omega_au;
    return j;
}

inline ojson manifest(const char* command, const ConfigValues& values)
{
    ojson m;
    m["schema_version"] = kSchemaVersion;
    m["code_version"] = SQHHG_VERSION;
    m["command"] = command;
    m["master_seed"] = values.integer("ensemble.master_seed");
    m["config"] = values.to_json();
    return m;
}

inline void write_timings(const CliOptions& opt, double seconds)
{
    ojson t;
    t["wall_seconds"] = seconds;
    t["workers"] = opt.workers;
    io::write_json(opt.out / "timings.json", t);
}

inline ojson prepared_json(const PreparedRun& run)
{
    const double w = run.config.pulse.omega_au;
    ojson j;
    j["softening_a"] = run.atom.softening_a;
    j["ip_achieved"] = energy_json(run.atom.ip_achieved_au, w);
    j["e0_au"] = run.config.pulse.e0_au;
    j["e_vac_au"] = run.e_vac_au;
    j["e_vac_v_per_m"] = run.e_vac_au * units::kFieldAuInVPerM;
    j["x_c"] = run.config.squeeze.alpha_mag;
    j["omega_au"] = w;
    j["photon_ev"] = units::au_to_ev(w);
    j["classical_cutoff"] = energy_json(run.hint_ho * w, w);
    j["keldysh_gamma"] = keldysh_gamma(run.atom.ip_achieved_au, run.config.pulse.e0_au, w);
    return j;
}

inline ojson interval_json(const Interval& iv, double scale)
{
    return ojson::array({iv.lo * scale, iv.hi * scale});
}

inline ojson stats_json(const EnsembleStats& st, double omega_au)
{
    const double ev = units::au_to_ev(omega_au);
    const double to_au = 1.0 / units::kEnergyAuInEv;
    ojson j;
    j["n_valid"] = st.n_valid;
    j["n_flagged"] = st.n_flagged;
    j["mean_h_ev"] = st.mean_h_ev;
    j["mean_h_ho"] = st.mean_h_ev / ev;
    j["mean_h_au"] = st.mean_h_ev * to_au;
    j["ci95_mean_ev"] = interval_json(st.ci95_mean_ev, 1.0);
    j["var_h_ev2"] = io::json_optional(st.var_h_ev2);
    j["var_h_ho2"] = st.var_h_ev2 ? ojson(*st.var_h_ev2 / (ev * ev)) : ojson(nullptr);
    j["var_h_au2"] = st.var_h_ev2 ? ojson(*st.var_h_ev2 * to_au * to_au) : ojson(nullptr);
    j["ci95_var_ev2"] = st.ci95_var_ev2 ? interval_json(*st.ci95_var_ev2, 1.0) : ojson(nullptr);
    j["ci95_var_ho2"] = st.ci95_var_ev2 ? interval_json(*st.ci95_var_ev2, 1.0 / (ev * ev)) : ojson(nullptr);
    return j;
}

inline ojson cutoff_json(const CutoffExtraction& c, double omega_au)
{
    ojson j = energy_json(c.h_ho * omega_au, omega_au);
    j["plateau_log10"] = c.plateau_level_log10;
    j["valid"] = c.valid();
    return j;
}

inline ojson weighted_json(const RateWeightedCutoff& w, double omega_au)
{
    ojson j = energy_json(units::ev_to_au(w.h_ev), omega_au);
    j["ci95_ev"] = interval_json(w.ci95_ev, 1.0);
    return j;
}

inline double elapsed(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct LadderRung {
    std::string label;
    GridSpec grid;
    double ip_achieved_au = 0.0;
    double softening_a = 0.0;
    CutoffExtraction cutoff;
};

/// Configured grid plus dt/2, dx/2 (nx x 2) and box x 2 variants.
inline std::vector<std::pair<std::string, GridSpec>> ladder_grids(const GridSpec& g)
{
    std::vector<std::pair<std::string, GridSpec>> out{{"configured", g}};
    auto half_dt = g;
    half_dt.dt *= 0.5;
    out.emplace_back("dt_half", half_dt);
    auto fine = g;
    fine.nx *= 2;
    out.emplace_back("dx_half", fine);
    auto wide = g;
    wide.x_min *= 2.0;
    wide.x_max *= 2.0;
    wide.nx *= 2;
    wide.absorber_width = std::max(g.absorber_width, 0.1 * wide.half_width());
    out.emplace_back("box_double", wide);
    return out;
}

inline void cmd_calibrate(const AppConfig& app, const ConfigValues& values, const CliOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    detail::ensure_dir(opt.out);
    auto cfg = app.run;
    const double w = cfg.pulse.omega_au;
    const auto run = prepare_run(cfg);
    detail::say(opt, "softening a = " + io::format_number(run.atom.softening_a) + ", Ip = " +
                         io::format_number(units::au_to_ev(run.atom.ip_achieved_au)) + " eV");
    const auto reference = mean_field_shot(run);

    ojson report = detail::manifest("calibrate", values);
    report["ip_target_ev"] = cfg.atom.ip_target_ev;
    report["calibrated"] = cfg.calibrate_atom;
    report["ground_energy_au"] = run.ground_energy_au;
    report["derived"] = detail::prepared_json(run);
    report["mean_field_cutoff"] = detail::cutoff_json(reference.cutoff, w);
    report["mean_field_norm_loss"] = reference.norm_loss;
    io::write_json(opt.out / "calibration.json", report);

    if (app.ladder) {
        io::CsvWriter csv(opt.out / "convergence.csv",
                          {"label", "dt_au", "dx_au", "x_half_width_au", "nx", "softening_a", "ip_ev", "cutoff_au",
                           "cutoff_ev", "cutoff_ho", "delta_ho"});
        double base_ho = 0.0;
        for (const auto& [label, grid] : ladder_grids(cfg.grid)) {
            auto rung_cfg = cfg;
            rung_cfg.grid = grid;
            const auto rung = prepare_run(rung_cfg);
            const auto shot = mean_field_shot(rung);
            if (label == "configured") base_ho = shot.cutoff.h_ho;
            detail::say(opt, label + ": cutoff " + io::format_number(shot.cutoff.h_ho) + " H.O.");
            csv.row({label, io::format_number(grid.dt), io::format_number(grid.dx()),
                     io::format_number(grid.half_width()), std::to_string(grid.nx),
                     io::format_number(rung.atom.softening_a),
                     io::format_number(units::au_to_ev(rung.atom.ip_achieved_au)),
                     io::format_number(shot.cutoff.h_ho * w), io::format_number(shot.cutoff.h_ev),
                     io::format_number(shot.cutoff.h_ho), io::format_number(shot.cutoff.h_ho - base_ho)});
        }
    }
    detail::write_timings(opt, detail::elapsed(t0));
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

inline void write_shots_csv(const std::filesystem::path& path, std::span<const ShotRecord> records, double omega_au)
{
    io::CsvWriter csv(path, {"shot_index", "X", "P", "H_au", "H_ev", "H_ho", "plateau_log10", "flags", "norm_loss"});
    for (const auto& r : records) {
        csv.row({std::to_string(r.shot_index), io::format_number(r.sample.x), io::format_number(r.sample.p),
                 io::format_number(r.cutoff.h_ho * omega_au), io::format_number(r.cutoff.h_ev),
                 io::format_number(r.cutoff.h_ho), io::format_number(r.cutoff.plateau_level_log10), flag_string(r),
                 io::format_number(r.norm_loss)});
    }
}

inline void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s)
{
    io::CsvWriter csv(path, {"omega_au", "photon_ev", "harmonic_order", "s", "log10_s"});
    for (std::size_t k = 0; k < s.size(); ++k) {
        csv.row({io::format_number(s.omega_au[k]), io::format_number(units::au_to_ev(s.omega_au[k])),
                 io::format_number(s.harmonic_order[k]), io::format_number(s.s[k]),
                 io::format_number(s.s[k] > 0.0 ? std::log10(s.s[k]) : -std::numeric_limits<double>::infinity())});
    }
}

inline void cmd_run(const AppConfig& app, const ConfigValues& values, const CliOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    detail::ensure_dir(opt.out);
    const auto& cfg = app.run;
    const double w = cfg.pulse.omega_au;
    const auto run = prepare_run(cfg);
    detail::say(opt, "running " + std::to_string(cfg.n_shot) + " shots (" + to_string(cfg.driver_kind) + ")");
    const auto records = run_ensemble(run, opt.workers);
    write_shots_csv(opt.out / "shots.csv", records, w);

    ojson manifest = detail::manifest("run", values);
    manifest["driver_kind"] = to_string(cfg.driver_kind);
    manifest["derived"] = detail::prepared_json(run);
    io::write_json(opt.out / "manifest.json", manifest);

    ojson stats;
    stats["schema_version"] = kSchemaVersion;
    stats["driver_kind"] = to_string(cfg.driver_kind);
    stats["sigma_x2"] = run.covariance().sxx;
    stats["n_shot"] = records.size();
    stats["flagged_fraction"] = flagged_fraction(records);
    const double fraction = flagged_fraction(records);
    if (fraction < 1.0) {
        const auto st = cutoff_statistics(records, bootstrap_options(cfg));
        stats.update(detail::stats_json(st, w));
        const auto weighted =
            rate_weighted_cutoff(records, run.e_vac_au, AdkParams::make(run.atom.ip_achieved_au), bootstrap_options(cfg));
        stats["rate_weighted_cutoff"] = detail::weighted_json(weighted, w);
    }
    if (cfg.store_spectra && fraction < 1.0) {
        const auto mean = averaged_spectrum(records);
        write_spectrum_csv(opt.out / "mean_spectrum.csv", mean);
        stats["mean_spectrum_cutoff"] = detail::cutoff_json(extract_cutoff(mean, cfg.protocol, run.hint_ho), w);
    }
    io::write_json(opt.out / "stats.json", stats);
    detail::write_timings(opt, detail::elapsed(t0));
    check_quality_gate(records, cfg.max_flagged_fraction);
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

inline void cmd_sweep(const AppConfig& app, const ConfigValues& values, const CliOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    detail::ensure_dir(opt.out);
    const auto& cfg = app.run;
    const double w = cfg.pulse.omega_au;
    const double ev = units::au_to_ev(w);
    const double to_au = 1.0 / units::kEnergyAuInEv;
    const auto base = prepare_run(cfg);
    const auto result = sweep(base, app.sweep_axis, app.sweep_values, opt.workers, nullptr,
                              [&](std::size_t done, std::size_t total) {
                                  detail::say(opt, "point " + std::to_string(done) + "/" + std::to_string(total));
                              });

    io::CsvWriter csv(opt.out / "sweep.csv",
                      {"axis", "mean_h", "var_h", "ci_lo", "ci_hi", "witness_ratio", "ratio_ci_lo", "ratio_ci_hi",
                       "sigma_x2", "mean_h_ho", "var_h_ho2", "mean_h_au", "var_h_au2", "weighted_h_ev",
                       "weighted_h_ho", "n_valid", "n_flagged"});
    for (const auto& row : result.rows) {
        const auto& st = row.stats;
        auto opt_num = [](bool has, double v) { return has ? io::format_number(v) : std::string{}; };
        const bool has_var = st.var_h_ev2.has_value();
        const double var = has_var ? *st.var_h_ev2 : 0.0;
        csv.row({io::format_number(row.value), io::format_number(st.mean_h_ev), opt_num(has_var, var),
                 opt_num(has_var, has_var ? st.ci95_var_ev2->lo : 0.0),
                 opt_num(has_var, has_var ? st.ci95_var_ev2->hi : 0.0),
                 opt_num(row.witness.has_value(), row.witness ? row.witness->ratio : 0.0),
                 opt_num(row.witness.has_value(), row.witness ? row.witness->ci95.lo : 0.0),
                 opt_num(row.witness.has_value(), row.witness ? row.witness->ci95.hi : 0.0),
                 io::format_number(row.sigma_x2), io::format_number(st.mean_h_ev / ev),
                 opt_num(has_var, var / (ev * ev)), io::format_number(st.mean_h_ev * to_au),
                 opt_num(has_var, var * to_au * to_au),
                 opt_num(row.weighted_cutoff.has_value(), row.weighted_cutoff ? row.weighted_cutoff->h_ev : 0.0),
                 opt_num(row.weighted_cutoff.has_value(), row.weighted_cutoff ? row.weighted_cutoff->h_ho : 0.0),
                 std::to_string(st.n_valid), std::to_string(st.n_flagged)});
    }

    ojson manifest = detail::manifest("sweep", values);
    manifest["axis"] = app.sweep_axis == SweepAxis::r ? "r" : "theta";
    manifest["driver_kind"] = to_string(cfg.driver_kind);
    manifest["derived"] = detail::prepared_json(base);
    manifest["sql_reference_seed"] = reference_seed(cfg.master_seed);
    io::write_json(opt.out / "manifest.json", manifest);

    ojson reference;
    reference["schema_version"] = kSchemaVersion;
    reference["flagged_fraction"] = result.sql_flagged_fraction;
    reference.update(detail::stats_json(result.sql, w));
    io::write_json(opt.out / "reference.json", reference);

    if (result.fit) {
        const auto& fit = *result.fit;
        ojson j;
        j["schema_version"] = kSchemaVersion;
        j["units"] = "eV^2";
        j["c_x"] = fit.c_x;
        j["c_p"] = fit.c_p;
        j["c_x_ho2"] = fit.c_x / (ev * ev);
        j["c_p_ho2"] = fit.c_p / (ev * ev);
        j["r_opt"] = io::json_optional(fit.r_opt);
        j["residual"] = fit.residual;
        j["poor_fit"] = fit.poor_fit;
        j["at_boundary"] = fit.at_boundary;
        io::write_json(opt.out / "twochannel.json", j);
    }
    detail::write_timings(opt, detail::elapsed(t0));

    double worst = result.sql_flagged_fraction;
    for (const auto& row : result.rows) worst = std::max(worst, row.flagged_fraction);
    if (worst > cfg.max_flagged_fraction) {
        fail(ErrorKind::quality_gate, "a sweep ensemble exceeded the flagged-shot limit");
    }
}

// ---------------------------------------------------------------------------
// analytics
// ---------------------------------------------------------------------------

inline std::vector<double> r_grid(double r_max, double r_step)
{
    const auto n = static_cast<std::size_t>(std::floor(r_max / r_step + 1e-9));
    std::vector<double> r(n + 1);
    for (std::size_t i = 0; i <= n; ++i) r[i] = static_cast<double>(i) * r_step;
    return r;
}

inline void cmd_analytics(const AppConfig& app, const ConfigValues& values, const CliOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    detail::ensure_dir(opt.out);
    const auto& cfg = app.run;
    const auto& pulse = cfg.pulse;
    const double w = pulse.omega_au;
    const double ip = units::ev_to_au(cfg.atom.ip_target_ev);
    const double e_vac = resolve_vacuum_field(cfg.mode_volume, pulse);
    const auto adk = AdkParams::make(ip);
    const auto coeffs = CumulantCoeffs::make(pulse.e0_au, e_vac, adk);
    const double as = 0.0;
    const double ps = units::kPi / 2.0;
    const double classical = classical_cutoff(pulse.e0_au, ip, w);

    io::CsvWriter yield(opt.out / "yield_vs_r.csv",
                        {"r", "sigma_x2_as", "yield_numeric_as", "yield_analytic_as", "sigma_x2_ps",
                         "yield_numeric_ps", "yield_analytic_ps", "eta", "epsilon_ps", "outside_validity_ps"});
    io::CsvWriter cutoff(opt.out / "cutoff_vs_r.csv",
                         {"r", "epsilon_ps", "classical_au", "classical_ev", "classical_ho", "analytic_au",
                          "analytic_ev", "analytic_ho", "numeric_au", "numeric_ev", "numeric_ho", "shift_analytic_ev",
                          "shift_numeric_ev", "variance_ratio_as", "variance_ratio_ps", "outside_validity"});
    for (double r : r_grid(app.analytics_r_max, app.analytics_r_step)) {
        const auto m_as = field_marginal(r, as, pulse.e0_au, e_vac);
        const auto m_ps = field_marginal(r, ps, pulse.e0_au, e_vac);
        const auto ya = yield_analytic(r, as, coeffs);
        const auto yp = yield_analytic(r, ps, coeffs);
        yield.row({io::format_number(r), io::format_number(covariance_of(r, as).sxx),
                   io::format_number(yield_numeric(m_as, adk)), io::format_number(ya.ratio),
                   io::format_number(covariance_of(r, ps).sxx), io::format_number(yield_numeric(m_ps, adk)),
                   io::format_number(yp.ratio), io::format_number(coeffs.eta), io::format_number(yp.epsilon),
                   yp.outside_validity ? "1" : "0"});

        const auto pred = cutoff_shift_analytic(r, ps, pulse, e_vac, adk);
        const double numeric = rate_weighted_cutoff_numeric(m_ps, adk, ip, w);
        cutoff.row({io::format_number(r), io::format_number(pred.epsilon), io::format_number(classical),
                    io::format_number(units::au_to_ev(classical)), io::format_number(classical / w),
                    io::format_number(pred.cutoff_au), io::format_number(units::au_to_ev(pred.cutoff_au)),
                    io::format_number(pred.cutoff_au / w), io::format_number(numeric),
                    io::format_number(units::au_to_ev(numeric)), io::format_number(numeric / w),
                    io::format_number(units::au_to_ev(pred.shift_au)),
                    io::format_number(units::au_to_ev(numeric - classical)),
                    io::format_number(variance_ratio_leading(r, as)), io::format_number(variance_ratio_leading(r, ps)),
                    pred.outside_validity ? "1" : "0"});
    }

    ojson manifest = detail::manifest("analytics", values);
    manifest["ip_au"] = ip;
    manifest["e0_au"] = pulse.e0_au;
    manifest["e_vac_au"] = e_vac;
    manifest["b_au"] = adk.b_au;
    manifest["eta"] = coeffs.eta;
    io::write_json(opt.out / "manifest.json", manifest);
    detail::write_timings(opt, detail::elapsed(t0));
}

}  // namespace sqhhg::cli
