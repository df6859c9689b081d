#include "etpa/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "etpa/errors.hpp"

namespace etpa::physics {

namespace {

constexpr double series_threshold = 1e-6;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

double angular_frequency(double wavelength_nm) {
    return 2.0 * std::numbers::pi * speed_of_light / wavelength_nm;
}

PhotonSource PhotonSource::degenerate(double lambda0_nm, double entanglement_time_fs) {
    PhotonSource source;
    source.lambda_s0 = lambda0_nm;
    source.lambda_i0 = lambda0_nm;
    source.entanglement_time = entanglement_time_fs;
    return source;
}

void PhotonSource::validate() const {
    if (!positive_finite(lambda_s0) || !positive_finite(lambda_i0))
        throw ValidationError("photon source: central wavelengths must be positive");
    if (!positive_finite(entanglement_time))
        throw ValidationError("photon source: entanglement time must be positive");
    if (!positive_finite(interaction_area))
        throw ValidationError("photon source: interaction area must be positive");
}

MolecularSystem MolecularSystem::with_unit_dipoles(std::vector<double> level_wavelengths_nm) {
    MolecularSystem system;
    system.dipole_products.assign(level_wavelengths_nm.size(), 1.0);
    system.level_wavelengths = std::move(level_wavelengths_nm);
    return system;
}

std::vector<double> MolecularSystem::level_energies() const {
    std::vector<double> energies(level_wavelengths.size());
    std::transform(level_wavelengths.begin(), level_wavelengths.end(), energies.begin(),
                   angular_frequency);
    return energies;
}

void MolecularSystem::validate() const {
    if (level_wavelengths.size() != dipole_products.size())
        throw ValidationError("molecular system: " + std::to_string(level_wavelengths.size()) +
                              " levels but " + std::to_string(dipole_products.size()) +
                              " dipole products");
    for (double w : level_wavelengths)
        if (!positive_finite(w))
            throw ValidationError("molecular system: level wavelengths must be positive");
    for (double d : dipole_products)
        if (!std::isfinite(d))
            throw ValidationError("molecular system: dipole products must be finite");
    std::set<double> unique(level_wavelengths.begin(), level_wavelengths.end());
    if (unique.size() != level_wavelengths.size())
        throw ValidationError("molecular system: level wavelengths must be distinct");
}

std::vector<double> tau_grid(TauWindow window, std::size_t n_samples) {
    if (n_samples < 2)
        throw ValidationError("tau grid: need at least 2 samples");
    if (!std::isfinite(window.start) || !std::isfinite(window.end) || !(window.start < window.end))
        throw ValidationError("tau grid: window start must be below window end");
    const std::size_t last = n_samples - 1;
    const double denom = static_cast<double>(last);
    std::vector<double> grid(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n)
        grid[n] = (window.start * static_cast<double>(last - n) + window.end * static_cast<double>(n)) /
                  denom;
    grid.front() = window.start;
    grid.back() = window.end;
    return grid;
}

std::complex<double> resonance_term(double detuning, double duration) {
    if (!std::isfinite(detuning) || !std::isfinite(duration))
        throw ValidationError("resonance term: non-finite argument");
    const double x = detuning;
    const double t = duration;
    const double phase = x * t;
    if (std::abs(phase) < series_threshold) {
        // i T + x T^2 / 2 - i x^2 T^3 / 6
        return {x * t * t / 2.0, t - x * x * t * t * t / 6.0};
    }
    // 1 - e^{-i phase} = 2 sin^2(phase / 2) + i sin(phase), free of cancellation
    const double half = std::sin(phase / 2.0);
    return {2.0 * half * half / x, std::sin(phase) / x};
}

namespace {

struct Pathways {
    std::vector<double> idler_detuning;
    std::vector<double> signal_detuning;
    double prefactor = 0.0;
    double two_te = 0.0;
};

Pathways prepare(const MolecularSystem& system, const PhotonSource& source) {
    system.validate();
    source.validate();
    Pathways p;
    const double w_s = source.omega_s0();
    const double w_i = source.omega_i0();
    for (double e : system.level_energies()) {
        p.idler_detuning.push_back(e - w_i);
        p.signal_detuning.push_back(e - w_s);
    }
    p.prefactor = w_i * w_s / source.entanglement_time;
    p.two_te = 2.0 * source.entanglement_time;
    return p;
}

double evaluate(const Pathways& p, std::span<const double> dipoles, double tau) {
    std::complex<double> amplitude{0.0, 0.0};
    for (std::size_t j = 0; j < dipoles.size(); ++j)
        amplitude += dipoles[j] * (resonance_term(p.idler_detuning[j], p.two_te - tau) +
                                   resonance_term(p.signal_detuning[j], p.two_te + tau));
    return p.prefactor * std::norm(amplitude);
}

} // namespace

double etpa_probability(const MolecularSystem& system, const PhotonSource& source, double tau) {
    if (!std::isfinite(tau))
        throw ValidationError("etpa probability: non-finite delay");
    return evaluate(prepare(system, source), system.dipole_products, tau);
}

SignalTrace signal_trace(const MolecularSystem& system, const PhotonSource& source,
                         TauWindow window, std::size_t n_samples, bool normalize) {
    SignalTrace trace;
    trace.tau = tau_grid(window, n_samples);
    const Pathways p = prepare(system, source);
    trace.values.resize(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n)
        trace.values[n] = evaluate(p, system.dipole_products, trace.tau[n]);

    if (normalize) {
        trace.normalized = true;
        const double peak = *std::max_element(trace.values.begin(), trace.values.end());
        if (peak <= 0.0) {
            std::fill(trace.values.begin(), trace.values.end(), 0.0);
            trace.degenerate = true;
        } else {
            for (double& v : trace.values)
                v /= peak;
        }
    }
    return trace;
}

double sinc_squared_half_max() {
    static const double root = [] {
        // Newton on g(x) = sin(x) - x / sqrt(2), which is concave on (0, pi).
        double x = 1.4;
        for (int it = 0; it < 50; ++it) {
            const double g = std::sin(x) - x * std::numbers::sqrt2 / 2.0;
            const double dg = std::cos(x) - std::numbers::sqrt2 / 2.0;
            const double next = x - g / dg;
            if (std::abs(next - x) < 1e-15) {
                x = next;
                break;
            }
            x = next;
        }
        return x;
    }();
    return root;
}

double fwhm_bandwidth(double entanglement_time_fs, double center_wavelength_nm) {
    if (!positive_finite(entanglement_time_fs) || !positive_finite(center_wavelength_nm))
        throw ValidationError("fwhm bandwidth: inputs must be positive");
    const double delta_omega = 2.0 * sinc_squared_half_max() / entanglement_time_fs;
    return center_wavelength_nm * center_wavelength_nm * delta_omega /
           (2.0 * std::numbers::pi * speed_of_light);
}

double entanglement_time_from_crystal(double inverse_group_velocity_s,
                                      double inverse_group_velocity_i,
                                      double crystal_length) {
    return std::abs((inverse_group_velocity_s - inverse_group_velocity_i) * crystal_length) / 4.0;
}

} // namespace etpa::physics
