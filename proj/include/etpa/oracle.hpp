#pragma once

#include <span>

#include "etpa/physics.hpp"

namespace etpa::physics {

struct OracleOptions {
    // Trapezoid step in the arrival-time difference (fs). Zero picks
    // points_per_period samples per period of the fastest detuning.
    double step_fs = 0.0;
    double points_per_period = 200.0;
};

/// Minimum number of quadrature points per period of the fastest detuning.
inline constexpr double oracle_min_points_per_period = 50.0;

/// Brute-force reference for the delay-scan signal.
///
/// Integrates the time-ordered second-order amplitude directly. The CW pair
/// has a flat correlation window |t_i - t_s - tau| <= 2 T_e (Fourier transform
/// of the sinc spectrum), and the integral over the mean absorption time only
/// produces the dropped energy-conserving delta, leaving a 1-D trapezoid
/// integral over the arrival-time difference for each ordering of the photons.
/// Positive tau delays the idler.
///
/// Agrees with the closed form for |tau| <= 2 T_e. Beyond that the window no
/// longer touches zero separation and the closed form is an extrapolation.
///
/// Returns a peak-normalized trace; an all-zero amplitude returns zeros with
/// the degenerate flag set. Throws ResolutionError if the step is coarser than
/// 1/50 of the fastest oscillation period.
SignalTrace oracle_trace(const MolecularSystem& system, const PhotonSource& source,
                         std::span<const double> tau_grid, OracleOptions options = {});

} // namespace etpa::physics
