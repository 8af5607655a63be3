#pragma once

// Atomic-unit conversions. All solver internals run in atomic units
// (hbar = m_e = e = a_0 = 1); these constants are the only place SI or
// laboratory units enter.

#include <cmath>
#include <string>
#include <string_view>

#include "error.hpp"

namespace sqhhg::units {

inline constexpr double kPi = 3.14159265358979323846;

/// 1 a.u. of electric field in V/m.
inline constexpr double kFieldAuInVPerM = 5.14221e11;
/// 1 a.u. of energy (Hartree) in eV.
inline constexpr double kEnergyAuInEv = 27.2114;
/// Intensity (W/cm^2) carried by a field of 1 a.u. peak amplitude.
inline constexpr double kIntensityAuInWPerCm2 = 3.50945e16;
/// omega[a.u.] = kPhotonNmAu / lambda[nm].
inline constexpr double kPhotonNmAu = 45.5634;
/// 1 a.u. of time in fs.
inline constexpr double kTimeAuInFs = 2.4188843265857e-2;
/// 1 a.u. of length (Bohr radius) in nm.
inline constexpr double kLengthAuInNm = 5.29177210903e-2;

enum class Unit {
    field_au,
    field_v_per_m,
    intensity_w_per_cm2,
    energy_au,
    energy_ev,
    time_au,
    time_fs,
    length_au,
    length_nm,
};

inline Unit parse_unit(std::string_view name)
{
    if (name == "field_au") return Unit::field_au;
    if (name == "V/m") return Unit::field_v_per_m;
    if (name == "W/cm2") return Unit::intensity_w_per_cm2;
    if (name == "energy_au" || name == "Ha") return Unit::energy_au;
    if (name == "eV") return Unit::energy_ev;
    if (name == "time_au") return Unit::time_au;
    if (name == "fs") return Unit::time_fs;
    if (name == "length_au" || name == "bohr") return Unit::length_au;
    if (name == "nm") return Unit::length_nm;
    fail(ErrorKind::unknown_unit, "unrecognized unit '" + std::string(name) + "'");
}

/// Converts between a laboratory unit and its atomic-unit counterpart.
/// Intensity converts to the peak field amplitude (E0 = sqrt(I / I_au)).
inline double convert(double value, Unit from, Unit to)
{
    if (from == to) return value;
    using U = Unit;
    if (from == U::field_au && to == U::field_v_per_m) return value * kFieldAuInVPerM;
    if (from == U::field_v_per_m && to == U::field_au) return value / kFieldAuInVPerM;
    if (from == U::intensity_w_per_cm2 && to == U::field_au) {
        require(value >= 0.0, ErrorKind::invalid_parameter, "intensity must be non-negative");
        return std::sqrt(value / kIntensityAuInWPerCm2);
    }
    if (from == U::field_au && to == U::intensity_w_per_cm2) return value * value * kIntensityAuInWPerCm2;
    if (from == U::energy_au && to == U::energy_ev) return value * kEnergyAuInEv;
    if (from == U::energy_ev && to == U::energy_au) return value / kEnergyAuInEv;
    if (from == U::time_au && to == U::time_fs) return value * kTimeAuInFs;
    if (from == U::time_fs && to == U::time_au) return value / kTimeAuInFs;
    if (from == U::length_au && to == U::length_nm) return value * kLengthAuInNm;
    if (from == U::length_nm && to == U::length_au) return value / kLengthAuInNm;
    fail(ErrorKind::unknown_unit, "no conversion between the requested units");
}

inline double ev_to_au(double ev) { return ev / kEnergyAuInEv; }
inline double au_to_ev(double au) { return au * kEnergyAuInEv; }

inline double wavelength_nm_to_omega_au(double wavelength_nm) { return kPhotonNmAu / wavelength_nm; }

inline double intensity_to_field_au(double w_per_cm2)
{
    return convert(w_per_cm2, Unit::intensity_w_per_cm2, Unit::field_au);
}

inline double harmonic_order(double energy_au, double omega_au) { return energy_au / omega_au; }

}  // namespace sqhhg::units
