#pragma once

// Run configuration: a JSON document of nested objects whose leaves map to
// dotted keys, merged over documented defaults, with key=value overrides.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ensemble.hpp"
#include "error.hpp"
#include "stats.hpp"

namespace sqhhg {

using json = nlohmann::json;

enum class ValueKind { real, count, seed, boolean, text, real_list };

struct ConfigKey {
    std::string key;
    ValueKind kind;
    json default_value;
    std::vector<std::string> choices;  // for text keys
    std::string description;
};

inline const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = {
        {"squeeze.r", ValueKind::real, 0.0, {}, "squeezing parameter r"},
        {"squeeze.theta", ValueKind::real, 0.0, {}, "squeezing angle (rad), 0 = amplitude squeezing"},
        {"squeeze.phi", ValueKind::real, 0.0, {}, "displacement phase (rad)"},
        {"pulse.wavelength_nm", ValueKind::real, 1500.0, {}, "carrier wavelength (nm)"},
        {"pulse.peak_intensity_wcm2", ValueKind::real, 1.0e14, {}, "peak intensity (W/cm^2)"},
        {"pulse.n_cycles", ValueKind::real, 2.0, {}, "Gaussian envelope parameter N"},
        {"mode_volume.kind", ValueKind::text, "ratio", {"ratio", "amplitude_au", "volume_au"},
         "how E_vac is specified"},
        {"mode_volume.value", ValueKind::real, 1.0e-2, {}, "E_vac/E0, E_vac (a.u.) or V_eff (a.u.)"},
        {"atom.ip_target_ev", ValueKind::real, 15.76, {}, "target ionization potential (eV)"},
        {"atom.calibrate", ValueKind::boolean, true, {}, "bisect softening_a to the target Ip"},
        {"atom.softening_a", ValueKind::real, 1.4142135623730951, {}, "soft-core a (a.u.) when not calibrating"},
        {"grid.x_half_width", ValueKind::real, 409.6, {}, "box half width (a.u.)"},
        {"grid.nx", ValueKind::count, 4096, {}, "spatial points"},
        {"grid.dt", ValueKind::real, 0.02, {}, "time step (a.u.)"},
        {"grid.absorber_width", ValueKind::real, 50.0, {}, "absorbing layer width (a.u.)"},
        {"grid.absorber_kind", ValueKind::text, "cos_eighth", {"cos_eighth", "none"}, "absorbing mask shape"},
        {"time.half_width_in_n", ValueKind::real, 3.0, {}, "time window half width in units of N periods"},
        {"protocol.drop_decades", ValueKind::real, 3.0, {}, "cutoff threshold below the plateau (decades)"},
        {"protocol.smooth_width_ho", ValueKind::real, 1.0, {}, "boxcar width (H.O.)"},
        {"protocol.plateau_lo", ValueKind::real, 0.3, {}, "plateau window start (x classical cutoff)"},
        {"protocol.plateau_hi", ValueKind::real, 0.8, {}, "plateau window end (x classical cutoff)"},
        {"protocol.persistence_ho", ValueKind::real, 2.0, {}, "orders the drop must persist (H.O.)"},
        {"protocol.scan_start", ValueKind::real, 0.8, {}, "scan start (x classical cutoff)"},
        {"spectrum.window", ValueKind::text, "blackman", {"blackman", "hann"}, "acceleration window"},
        {"spectrum.max_order", ValueKind::real, 300.0, {}, "highest stored harmonic order"},
        {"ensemble.n_shot", ValueKind::count, 200, {}, "shots per ensemble"},
        {"ensemble.master_seed", ValueKind::seed, 20240601, {}, "master seed"},
        {"ensemble.driver_kind", ValueKind::text, "squeezed", {"squeezed", "classical_benchmark", "coherent"},
         "driver statistics"},
        {"ensemble.store_spectra", ValueKind::boolean, false, {}, "keep per-shot spectra and write the mean"},
        {"ensemble.max_flagged_fraction", ValueKind::real, 0.05, {}, "quality gate on flagged shots"},
        {"stats.bootstrap_resamples", ValueKind::count, 2000, {}, "bootstrap resamples"},
        {"stats.bootstrap_seed", ValueKind::seed, 7, {}, "bootstrap seed"},
        {"sweep.axis", ValueKind::text, "r", {"r", "theta"}, "swept parameter"},
        {"sweep.values", ValueKind::real_list, json::array({0.0, 0.5, 1.0, 1.5}), {}, "swept values"},
        {"analytics.r_max", ValueKind::real, 3.0, {}, "largest r in analytics tables"},
        {"analytics.r_step", ValueKind::real, 0.1, {}, "r spacing in analytics tables"},
        {"calibrate.ladder", ValueKind::boolean, true, {}, "run the dt/dx/box convergence ladder"},
    };
    return keys;
}

inline const ConfigKey* find_config_key(std::string_view key)
{
    for (const auto& k : config_keys()) {
        if (k.key == key) return &k;
    }
    return nullptr;
}

/// Checks one value against its key and returns it in canonical form.
inline json check_config_value(const ConfigKey& k, const json& v)
{
    auto bad = [&](const char* what) -> json {
        fail(ErrorKind::config, "config key '" + k.key + "': expected " + what);
    };
    switch (k.kind) {
    case ValueKind::real:
        if (!v.is_number() || !std::isfinite(v.get<double>())) return bad("a finite number");
        return v.get<double>();
    case ValueKind::count:
    case ValueKind::seed:
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        return bad("a non-negative integer");
    case ValueKind::boolean:
        if (!v.is_boolean()) return bad("true or false");
        return v;
    case ValueKind::text: {
        if (!v.is_string()) return bad("a string");
        const auto s = v.get<std::string>();
        for (const auto& c : k.choices) {
            if (c == s) return v;
        }
        std::string list;
        for (const auto& c : k.choices) list += (list.empty() ? "" : ", ") + c;
        fail(ErrorKind::config, "config key '" + k.key + "': '" + s + "' is not one of " + list);
    }
    case ValueKind::real_list:
        if (!v.is_array()) return bad("an array of numbers");
        for (const auto& e : v) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) return bad("an array of numbers");
        }
        return v;
    }
    return v;
}

/// Flat dotted-key view of the configuration.
class ConfigValues {
public:
    ConfigValues()
    {
        for (const auto& k : config_keys()) values_[k.key] = k.default_value;
    }

    void set(const std::string& key, const json& value)
    {
        const auto* k = find_config_key(key);
        if (!k) fail(ErrorKind::config, "unknown config key '" + key + "'");
        values_[key] = check_config_value(*k, value);
    }

    /// Merges a nested JSON object; every leaf must be a known key.
    void merge(const json& doc, const std::string& prefix = "")
    {
        if (!doc.is_object()) {
            fail(ErrorKind::config, prefix.empty() ? std::string("config document must be a JSON object")
                                                   : "config key '" + prefix + "': expected an object");
        }
        for (const auto& [name, value] : doc.items()) {
            const std::string key = prefix.empty() ? name : prefix + "." + name;
            if (value.is_object()) merge(value, key);
            else set(key, value);
        }
    }

    void merge_file(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) fail(ErrorKind::config, "cannot open config file '" + path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::config, "config file '" + path + "' is not valid JSON: " + e.what());
        }
        merge(doc);
    }

    /// key=value, where value is parsed as JSON or else taken as a string.
    void apply_override(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0) {
            fail(ErrorKind::config, "override '" + assignment + "' is not of the form key=value");
        }
        const std::string key = assignment.substr(0, eq);
        const std::string text = assignment.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        set(key, value);
    }

    const json& at(const std::string& key) const { return values_.at(key); }
    double real(const std::string& key) const { return values_.at(key).get<double>(); }
    std::uint64_t integer(const std::string& key) const { return values_.at(key).get<std::uint64_t>(); }
    bool boolean(const std::string& key) const { return values_.at(key).get<bool>(); }
    std::string text(const std::string& key) const { return values_.at(key).get<std::string>(); }

    /// Nested document in key-table order.
    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json doc = nlohmann::ordered_json::object();
        for (const auto& k : config_keys()) {
            const auto dot = k.key.find('.');
            doc[k.key.substr(0, dot)][k.key.substr(dot + 1)] = values_.at(k.key);
        }
        return doc;
    }

private:
    std::map<std::string, json> values_;
};

struct AppConfig {
    RunConfig run;
    SweepAxis sweep_axis = SweepAxis::r;
    std::vector<double> sweep_values;
    double analytics_r_max = 3.0;
    double analytics_r_step = 0.1;
    bool ladder = true;
};

inline DriverKind parse_driver_kind(const std::string& s)
{
    if (s == "squeezed") return DriverKind::squeezed;
    if (s == "classical_benchmark") return DriverKind::classical_benchmark;
    if (s == "coherent") return DriverKind::coherent;
    fail(ErrorKind::config, "unknown driver kind '" + s + "'");
}

inline AppConfig build_config_unchecked(const ConfigValues& v);

/// Typed configuration; every failure is reported as a config error.
inline AppConfig build_config(const ConfigValues& v)
{
    try {
        return build_config_unchecked(v);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        fail(ErrorKind::config, std::string("invalid configuration: ") + e.what());
    }
}

inline AppConfig build_config_unchecked(const ConfigValues& v)
{
    AppConfig app;
    auto& run = app.run;
    run.squeeze = SqueezeParams::make(v.real("squeeze.r"), v.real("squeeze.theta"), 0.0, v.real("squeeze.phi"));
    run.pulse = PulseSpec::make(v.real("pulse.wavelength_nm"), v.real("pulse.peak_intensity_wcm2"),
                                v.real("pulse.n_cycles"));

    const auto kind = v.text("mode_volume.kind");
    const double mv = v.real("mode_volume.value");
    require(mv > 0.0, ErrorKind::config, "config key 'mode_volume.value': must be positive");
    if (kind == "ratio") run.mode_volume.mode = AmplitudeRatio{mv};
    else if (kind == "amplitude_au") run.mode_volume.mode = ExplicitAmplitude{mv};
    else run.mode_volume.mode = ExplicitVolume{mv};

    run.atom.ip_target_ev = v.real("atom.ip_target_ev");
    run.atom.softening_a = v.real("atom.softening_a");
    run.calibrate_atom = v.boolean("atom.calibrate");
    require(run.atom.softening_a > 0.0, ErrorKind::config, "config key 'atom.softening_a': must be positive");

    const double half = v.real("grid.x_half_width");
    require(half > 0.0, ErrorKind::config, "config key 'grid.x_half_width': must be positive");
    run.grid.x_min = -half;
    run.grid.x_max = half;
    run.grid.nx = v.integer("grid.nx");
    run.grid.dt = v.real("grid.dt");
    require(run.grid.dt > 0.0, ErrorKind::config, "config key 'grid.dt': must be positive");
    run.grid.absorber_width = v.real("grid.absorber_width");
    run.grid.absorber_kind = v.text("grid.absorber_kind") == "none" ? AbsorberKind::none : AbsorberKind::cos_eighth;
    run.time_half_width_in_n = v.real("time.half_width_in_n");

    run.protocol.drop_decades = v.real("protocol.drop_decades");
    run.protocol.smooth_width_ho = v.real("protocol.smooth_width_ho");
    run.protocol.plateau_lo = v.real("protocol.plateau_lo");
    run.protocol.plateau_hi = v.real("protocol.plateau_hi");
    run.protocol.persistence_ho = v.real("protocol.persistence_ho");
    run.protocol.scan_start = v.real("protocol.scan_start");

    run.window = v.text("spectrum.window") == "hann" ? WindowKind::hann : WindowKind::blackman;
    run.spectrum_max_order = v.real("spectrum.max_order");

    run.n_shot = v.integer("ensemble.n_shot");
    run.master_seed = v.integer("ensemble.master_seed");
    run.driver_kind = parse_driver_kind(v.text("ensemble.driver_kind"));
    run.store_spectra = v.boolean("ensemble.store_spectra");
    run.max_flagged_fraction = v.real("ensemble.max_flagged_fraction");
    run.bootstrap_resamples = v.integer("stats.bootstrap_resamples");
    run.bootstrap_seed = v.integer("stats.bootstrap_seed");

    app.sweep_axis = v.text("sweep.axis") == "theta" ? SweepAxis::theta : SweepAxis::r;
    app.sweep_values = v.at("sweep.values").get<std::vector<double>>();
    app.analytics_r_max = v.real("analytics.r_max");
    app.analytics_r_step = v.real("analytics.r_step");
    require(app.analytics_r_max >= 0.0, ErrorKind::config, "config key 'analytics.r_max': must be >= 0");
    require(app.analytics_r_step > 0.0, ErrorKind::config, "config key 'analytics.r_step': must be positive");
    app.ladder = v.boolean("calibrate.ladder");

    run.validate();
    return app;
}

}  // namespace sqhhg
