#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

namespace etpa::physics {

/// Speed of light in nm/fs.
inline constexpr double speed_of_light = 299.792458;

/// Angular frequency (rad/fs) of light with the given vacuum wavelength (nm).
double angular_frequency(double wavelength_nm);

/// Continuous-wave pumped SPDC photon pair.
///
/// The final-state energy is always pinned to the sum of the two central
/// frequencies, so the pair is exactly two-photon resonant with g -> f.
struct PhotonSource {
    double lambda_s0 = 810.0;        // signal center, nm
    double lambda_i0 = 810.0;        // idler center, nm
    double entanglement_time = 63.0; // fs
    double interaction_area = 10.0;  // um^2, only enters the dropped absolute prefactor

    static PhotonSource degenerate(double lambda0_nm, double entanglement_time_fs);

    double omega_s0() const { return angular_frequency(lambda_s0); }
    double omega_i0() const { return angular_frequency(lambda_i0); }
    double final_energy() const { return omega_s0() + omega_i0(); }

    /// Throws ValidationError unless every field is finite and positive.
    void validate() const;

    bool operator==(const PhotonSource&) const = default;
};

/// Absorber with ground state at zero energy and k intermediate levels.
struct MolecularSystem {
    std::vector<double> level_wavelengths; // nm
    std::vector<double> dipole_products;   // <f|d|j><j|d|g>, one per level

    static MolecularSystem with_unit_dipoles(std::vector<double> level_wavelengths_nm);

    std::size_t level_count() const { return level_wavelengths.size(); }
    std::vector<double> level_energies() const;

    void validate() const;

    bool operator==(const MolecularSystem&) const = default;
};

struct SignalTrace {
    std::vector<double> tau;    // fs, uniform and strictly increasing
    std::vector<double> values; // arbitrary units, or peak-normalized
    bool normalized = false;
    // Set when normalization was requested and every value is zero.
    bool degenerate = false;
};

struct TauWindow {
    double start = -100.0;
    double end = 100.0;

    bool operator==(const TauWindow&) const = default;
};

/// Uniform grid of n points over [start, end], endpoints included.
/// Symmetric windows give exactly antisymmetric grids.
std::vector<double> tau_grid(TauWindow window, std::size_t n_samples);

/// (1 - exp(-i x T)) / x, continued to i T at x = 0.
std::complex<double> resonance_term(double detuning, double duration);

/// Two-photon excitation probability at delay tau (fs), arbitrary units.
///
/// Evaluates (w_i w_s / T_e) |sum_j D_j [f(e_j - w_i, 2T_e - tau) + f(e_j - w_s, 2T_e + tau)]|^2.
/// The absolute CW prefactor (containing |delta(Delta_+)|^2 and the area) is dropped.
double etpa_probability(const MolecularSystem& system, const PhotonSource& source, double tau);

/// Samples etpa_probability on a uniform delay grid, optionally dividing by the peak.
SignalTrace signal_trace(const MolecularSystem& system, const PhotonSource& source,
                         TauWindow window = {}, std::size_t n_samples = 500,
                         bool normalize = true);

/// FWHM (nm) of the pair spectrum sinc^2(T_e * (w_i - w_s)) mapped to wavelength at the center.
double fwhm_bandwidth(double entanglement_time_fs, double center_wavelength_nm);

/// |N_s - N_i| L / 4. The sign of (N_s - N_i) only labels which photon is faster,
/// so the magnitude is returned.
double entanglement_time_from_crystal(double inverse_group_velocity_s,
                                      double inverse_group_velocity_i,
                                      double crystal_length);

/// Half-max point of sinc^2, i.e. the positive root of sin(x)/x = 1/sqrt(2).
double sinc_squared_half_max();

} // namespace etpa::physics
