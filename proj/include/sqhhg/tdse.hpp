#pragma once

// 1D length-gauge TDSE for a soft-core model atom,
//   H = p^2/2 - 1/sqrt(x^2 + a^2) + x E(t),
// on a periodic spectral grid. Ground states come from imaginary-time
// propagation; real-time propagation uses Strang splitting with the
// kinetic step applied in momentum space and records the Ehrenfest
// acceleration a(t) = <-dV/dx> - E(t) * norm(t).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "fieldgen.hpp"
#include "units.hpp"

namespace sqhhg {

enum class AbsorberKind { cos_eighth, none };

struct GridSpec {
    double x_min = -409.6;
    double x_max = 409.6;
    std::size_t nx = 4096;
    double dt = 0.02;
    double absorber_width = 50.0;
    AbsorberKind absorber_kind = AbsorberKind::cos_eighth;

    double dx() const { return (x_max - x_min) / static_cast<double>(nx); }
    double length() const { return x_max - x_min; }
    double half_width() const { return 0.5 * length(); }
    double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }

    /// Wave number of FFT bin i (standard wrap-around ordering).
    double k(std::size_t i) const
    {
        const double dk = 2.0 * units::kPi / length();
        const auto signed_i = i < nx / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(nx);
        return signed_i * dk;
    }

    void validate() const
    {
        require(x_max > x_min, ErrorKind::invalid_parameter, "grid requires x_max > x_min");
        require(nx >= 1024, ErrorKind::invalid_parameter, "grid requires nx >= 1024");
        require(dx() <= 0.5 + 1e-12, ErrorKind::invalid_parameter, "grid spacing must be <= 0.5 a.u.");
        require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_parameter, "time step must be positive");
        if (absorber_kind != AbsorberKind::none) {
            require(absorber_width >= 0.1 * half_width() - 1e-12, ErrorKind::invalid_parameter,
                    "absorber must cover at least 10% of the half-box");
            require(absorber_width < half_width(), ErrorKind::invalid_parameter, "absorber wider than the half-box");
        }
    }
};

struct AtomModel {
    double softening_a = std::sqrt(2.0);
    double ip_target_ev = 15.76;
    double ip_achieved_au = 0.0;

    double potential(double x) const { return -1.0 / std::sqrt(x * x + softening_a * softening_a); }
    /// -dV/dx = -x / (x^2 + a^2)^{3/2}
    double force(double x) const
    {
        const double s = x * x + softening_a * softening_a;
        return -x / (s * std::sqrt(s));
    }
};

struct Wavefunction {
    std::vector<std::complex<double>> amplitudes;
    double dx = 0.0;

    double norm() const
    {
        double sum = 0.0;
        for (const auto& z : amplitudes) sum += std::norm(z);
        return sum * dx;
    }

    void normalize()
    {
        const double scale = 1.0 / std::sqrt(norm());
        for (auto& z : amplitudes) z *= scale;
    }
};

struct AccelerationTrace {
    std::vector<double> t_au;
    std::vector<double> a_au;
    std::vector<double> norm_history;
};

/// cos^{1/8} mask over the outer absorber_width on each side; 1 elsewhere.
inline std::vector<double> absorber_mask(const GridSpec& grid)
{
    std::vector<double> mask(grid.nx, 1.0);
    if (grid.absorber_kind == AbsorberKind::none) return mask;
    const double inner = grid.half_width() - grid.absorber_width;
    const double centre = 0.5 * (grid.x_min + grid.x_max);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        const double depth = std::abs(grid.x(i) - centre) - inner;
        if (depth > 0.0) {
            const double c = std::cos(0.5 * units::kPi * std::min(depth / grid.absorber_width, 1.0));
            mask[i] = std::pow(std::max(c, 0.0), 0.125);
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Ground state
// ---------------------------------------------------------------------------

struct GroundStateOptions {
    /// Imaginary time steps, coarse to fine; each stage runs to convergence.
    std::vector<double> dtau_schedule{0.1, 0.01};
    double tolerance = 1e-10;  // energy change per step, a.u.
    std::size_t max_iterations = 400000;
    std::size_t check_every = 10;
    /// Duration of the real-time Gaussian energy filter applied after the
    /// imaginary-time stages; 0 disables it. The filter removes the O(dt^2)
    /// admixture by which the imaginary-time state differs from the
    /// stationary state of the real-time propagator at grid.dt.
    double stationary_filter_au = 200.0;
};

struct GroundState {
    Wavefunction psi;
    double energy_au = 0.0;
    double kinetic_au = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

struct EnergyParts {
    double kinetic;
    double potential;
};

/// Kinetic and potential expectation values of a normalized state.
inline EnergyParts energy_parts(const Wavefunction& psi, const GridSpec& grid, std::span<const double> potential,
                                ComplexFft& fft)
{
    auto buf = fft.data();
    std::copy(psi.amplitudes.begin(), psi.amplitudes.end(), buf.begin());
    fft.forward();
    double kin = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < grid.nx; ++i) {
        const double w = std::norm(buf[i]);
        const double k = grid.k(i);
        kin += 0.5 * k * k * w;
        total += w;
    }
    double pot = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < grid.nx; ++i) {
        const double w = std::norm(psi.amplitudes[i]);
        pot += potential[i] * w;
        norm += w;
    }
    return {kin / total, pot / norm};
}

/// psi <- sum_k w_k exp(i E k dt) U^k psi with Gaussian weights w_k over a
/// window of `duration`, U the field-free Strang step at grid.dt.
inline void stationary_filter(Wavefunction& psi, const GridSpec& grid, std::span<const double> potential,
                              double energy, double duration, ComplexFft& fft)
{
    const std::size_t n = grid.nx;
    const auto steps = static_cast<std::size_t>(std::ceil(duration / grid.dt));
    const double center = 0.5 * static_cast<double>(steps) * grid.dt;
    const double width = duration / 8.0;
    std::vector<std::complex<double>> half_pot(n), kin(n), acc(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        half_pot[i] = std::polar(1.0, -0.5 * potential[i] * grid.dt);
        const double k = grid.k(i);
        kin[i] = std::polar(1.0 / static_cast<double>(n), -0.5 * k * k * grid.dt);
    }
    auto buf = fft.data();
    std::copy(psi.amplitudes.begin(), psi.amplitudes.end(), buf.begin());
    for (std::size_t s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) * grid.dt;
        const double u = (t - center) / width;
        const auto w = std::polar(std::exp(-0.5 * u * u), energy * t);
        for (std::size_t i = 0; i < n; ++i) acc[i] += w * buf[i];
        if (s == steps) break;
        for (std::size_t i = 0; i < n; ++i) buf[i] *= half_pot[i];
        fft.forward();
        for (std::size_t i = 0; i < n; ++i) buf[i] *= kin[i];
        fft.backward();
        for (std::size_t i = 0; i < n; ++i) buf[i] *= half_pot[i];
    }
    psi.amplitudes = std::move(acc);
}

inline void symmetrize_even(Wavefunction& psi)
{
    const std::size_t n = psi.amplitudes.size();
    for (std::size_t i = 1; i < n / 2; ++i) {
        const auto avg = 0.5 * (psi.amplitudes[i] + psi.amplitudes[n - i]);
        psi.amplitudes[i] = avg;
        psi.amplitudes[n - i] = avg;
    }
}

}  // namespace detail

/// Lowest even eigenstate by imaginary-time split-operator propagation.
/// Convergence: energy change per step below options.tolerance in the final
/// stage of the dtau schedule.
inline GroundState ground_state(const AtomModel& atom, const GridSpec& grid, const GroundStateOptions& options = {},
                                const Wavefunction* guess = nullptr)
{
    grid.validate();
    require(atom.softening_a > 0.0, ErrorKind::invalid_parameter, "softening parameter must be positive");
    const std::size_t n = grid.nx;
    std::vector<double> potential(n);
    for (std::size_t i = 0; i < n; ++i) potential[i] = atom.potential(grid.x(i));

    Wavefunction psi;
    psi.dx = grid.dx();
    if (guess != nullptr && guess->amplitudes.size() == n) {
        psi = *guess;
    } else {
        psi.amplitudes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.x(i);
            psi.amplitudes[i] = std::exp(-0.25 * x * x);
        }
    }
    detail::symmetrize_even(psi);
    psi.normalize();

    ComplexFft fft(n);
    ComplexFft probe(n);
    std::vector<double> half_pot(n);
    std::vector<double> kin(n);
    std::size_t iterations = 0;
    double energy = 0.0;

    for (double dtau : options.dtau_schedule) {
        for (std::size_t i = 0; i < n; ++i) {
            half_pot[i] = std::exp(-0.5 * dtau * potential[i]);
            const double k = grid.k(i);
            kin[i] = std::exp(-0.5 * k * k * dtau) / static_cast<double>(n);
        }
        auto parts = detail::energy_parts(psi, grid, potential, probe);
        double previous = parts.kinetic + parts.potential;
        bool converged = false;
        while (!converged) {
            auto buf = fft.data();
            for (std::size_t c = 0; c < options.check_every; ++c) {
                for (std::size_t i = 0; i < n; ++i) buf[i] = psi.amplitudes[i] * half_pot[i];
                fft.forward();
                for (std::size_t i = 0; i < n; ++i) buf[i] *= kin[i];
                fft.backward();
                for (std::size_t i = 0; i < n; ++i) psi.amplitudes[i] = buf[i] * half_pot[i];
                psi.normalize();
            }
            iterations += options.check_every;
            parts = detail::energy_parts(psi, grid, potential, probe);
            energy = parts.kinetic + parts.potential;
            require(std::isfinite(energy), ErrorKind::numerical_instability, "ground-state energy is not finite");
            const double per_step = std::abs(energy - previous) / static_cast<double>(options.check_every);
            converged = per_step < options.tolerance;
            previous = energy;
            if (iterations > options.max_iterations) {
                fail(ErrorKind::convergence, "imaginary-time propagation did not converge");
            }
        }
    }
    detail::symmetrize_even(psi);
    psi.normalize();
    if (options.stationary_filter_au > 0.0) {
        detail::stationary_filter(psi, grid, potential, energy, options.stationary_filter_au, fft);
        detail::symmetrize_even(psi);
        psi.normalize();
    }
    const auto parts = detail::energy_parts(psi, grid, potential, probe);
    return {std::move(psi), parts.kinetic + parts.potential, parts.kinetic, iterations};
}

struct Calibration {
    AtomModel atom;
    GroundState ground;
    std::size_t evaluations = 0;
};

/// Bisects the softening parameter until the grid ground-state energy
/// equals -ip_target. Larger a binds more weakly, so E(a) is increasing.
inline Calibration calibrate_softcore(double ip_target_ev, const GridSpec& grid, const GroundStateOptions& options = {})
{
    require(ip_target_ev > 1.0 && ip_target_ev < 30.0, ErrorKind::invalid_parameter,
            "ionization potential target must lie in (1, 30) eV");
    const double target = -units::ev_to_au(ip_target_ev);
    constexpr double tolerance_au = 1e-7;

    Calibration result;
    Wavefunction warm;
    auto search = options;
    search.stationary_filter_au = 0.0;
    auto evaluate = [&](double a) {
        AtomModel atom{a, ip_target_ev, 0.0};
        auto gs = ground_state(atom, grid, search, warm.amplitudes.empty() ? nullptr : &warm);
        warm = gs.psi;
        ++result.evaluations;
        return gs;
    };

    double lo = 0.5;
    double hi = 2.0;
    double e_lo = evaluate(lo).energy_au;
    while (e_lo > target) {
        lo *= 0.5;
        if (lo < 0.02) fail(ErrorKind::calibration, "cannot bracket the target binding energy from below");
        e_lo = evaluate(lo).energy_au;
    }
    double e_hi = evaluate(hi).energy_au;
    while (e_hi < target) {
        hi *= 2.0;
        if (hi > 200.0) fail(ErrorKind::calibration, "cannot bracket the target binding energy from above");
        e_hi = evaluate(hi).energy_au;
    }

    GroundState best;
    double best_a = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        auto gs = evaluate(mid);
        best = gs;
        best_a = mid;
        if (std::abs(gs.energy_au - target) < tolerance_au || hi - lo < 1e-12) break;
        if (gs.energy_au < target) lo = mid;
        else hi = mid;
    }
    require(std::abs(best.energy_au - target) < units::ev_to_au(0.05), ErrorKind::calibration,
            "bisection did not reach the target binding energy");
    if (options.stationary_filter_au > 0.0) best = ground_state({best_a, ip_target_ev, 0.0}, grid, options, &best.psi);
    result.atom = AtomModel{best_a, ip_target_ev, -best.energy_au};
    result.ground = std::move(best);
    return result;
}

// ---------------------------------------------------------------------------
// Real-time propagation
// ---------------------------------------------------------------------------

/// Norm above 1 + kNormInflationLimit signals an unstable propagation.
inline constexpr double kNormInflationLimit = 1e-8;

/// Strang-split propagator bound to one atom, grid and time step. Owns its
/// FFT workspace; one instance per concurrent propagation.
class SplitOperatorPropagator {
public:
    SplitOperatorPropagator(const AtomModel& atom, const GridSpec& grid, double dt, bool absorb = true)
        : grid_(grid), dt_(dt), fft_(grid.nx)
    {
        grid.validate();
        const std::size_t n = grid.nx;
        x_.resize(n);
        force_.resize(n);
        pot_half_.resize(n);
        pot_full_.resize(n);
        kinetic_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.x(i);
            const double v = atom.potential(x);
            x_[i] = x;
            force_[i] = atom.force(x);
            pot_half_[i] = std::polar(1.0, -0.5 * v * dt);
            pot_full_[i] = std::polar(1.0, -v * dt);
            const double k = grid.k(i);
            kinetic_[i] = std::polar(1.0 / static_cast<double>(n), -0.5 * k * k * dt);
        }
        if (absorb && grid.absorber_kind != AbsorberKind::none) {
            const auto mask = absorber_mask(grid);
            for (std::size_t i = 0; i < n; ++i) {
                if (mask[i] < 1.0) mask_entries_.push_back({i, mask[i]});
            }
        }
    }

    double dt() const { return dt_; }

    /// Propagates psi across the field samples e[0..n-1] at spacing dt and
    /// returns the acceleration and surviving norm at each sample time.
    AccelerationTrace run(Wavefunction& psi, std::span<const double> t, std::span<const double> e)
    {
        require(t.size() == e.size() && !t.empty(), ErrorKind::invalid_parameter, "time and field sizes differ");
        require(psi.amplitudes.size() == grid_.nx, ErrorKind::grid_mismatch, "wavefunction does not match the grid");
        const std::size_t steps = t.size();
        AccelerationTrace trace;
        trace.t_au.assign(t.begin(), t.end());
        trace.a_au.resize(steps);
        trace.norm_history.resize(steps);

        auto buf = fft_.data();
        std::copy(psi.amplitudes.begin(), psi.amplitudes.end(), buf.begin());
        record(buf, e[0], trace, 0);
        if (steps > 1) apply_potential(buf, e[0], 0.5, pot_half_);
        for (std::size_t s = 1; s < steps; ++s) {
            fft_.forward();
            for (std::size_t i = 0; i < grid_.nx; ++i) buf[i] *= kinetic_[i];
            fft_.backward();
            for (const auto& [i, m] : mask_entries_) buf[i] *= m;
            // |psi|^2 at t_s is unaffected by the pending diagonal phase.
            record(buf, e[s], trace, s);
            if (s + 1 < steps) apply_potential(buf, e[s], 1.0, pot_full_);
            else apply_potential(buf, e[s], 0.5, pot_half_);
        }
        std::copy(buf.begin(), buf.end(), psi.amplitudes.begin());
        return trace;
    }

private:
    struct MaskEntry {
        std::size_t index;
        double value;
    };

    void record(std::span<const std::complex<double>> buf, double field, AccelerationTrace& trace, std::size_t s) const
    {
        double density = 0.0;
        double force = 0.0;
        for (std::size_t i = 0; i < grid_.nx; ++i) {
            const double w = std::norm(buf[i]);
            density += w;
            force += force_[i] * w;
        }
        const double dx = grid_.dx();
        const double norm = density * dx;
        if (!std::isfinite(norm) || !std::isfinite(force)) {
            fail(ErrorKind::numerical_instability, "wavefunction became non-finite");
        }
        if (norm > 1.0 + kNormInflationLimit) {
            fail(ErrorKind::numerical_instability, "norm inflation during propagation");
        }
        trace.norm_history[s] = norm;
        trace.a_au[s] = force * dx - field * norm;
    }

    /// psi_j *= base_j * exp(-i x_j E fraction dt). The linear phase is
    /// advanced by recurrence and re-anchored every kAnchor points.
    void apply_potential(std::span<std::complex<double>> buf, double field, double fraction,
                         const std::vector<std::complex<double>>& base) const
    {
        constexpr std::size_t kAnchor = 64;
        const double tau = fraction * dt_;
        const auto step = std::polar(1.0, -grid_.dx() * field * tau);
        for (std::size_t start = 0; start < grid_.nx; start += kAnchor) {
            auto phase = std::polar(1.0, -x_[start] * field * tau);
            const std::size_t end = std::min(start + kAnchor, grid_.nx);
            for (std::size_t i = start; i < end; ++i) {
                buf[i] *= base[i] * phase;
                phase *= step;
            }
        }
    }

    GridSpec grid_;
    double dt_;
    ComplexFft fft_;
    std::vector<double> x_;
    std::vector<double> force_;
    std::vector<std::complex<double>> pot_half_;
    std::vector<std::complex<double>> pot_full_;
    std::vector<std::complex<double>> kinetic_;
    std::vector<MaskEntry> mask_entries_;
};

/// Propagates psi0 under one field realization. The field grid step must
/// equal the propagation step.
inline AccelerationTrace propagate(const Wavefunction& psi0, const FieldRealization& field, const AtomModel& atom,
                                   const GridSpec& grid)
{
    require(std::abs(field.grid.dt - grid.dt) <= 1e-12 * grid.dt, ErrorKind::invalid_parameter,
            "field time step differs from the propagation step");
    require(std::abs(psi0.norm() - 1.0) < 1e-8, ErrorKind::invalid_parameter, "initial state is not normalized");
    SplitOperatorPropagator propagator(atom, grid, grid.dt);
    Wavefunction psi = psi0;
    return propagator.run(psi, field.t_au, field.e_au);
}

}  // namespace sqhhg
