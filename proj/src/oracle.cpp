#include "etpa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "etpa/errors.hpp"

namespace etpa::physics {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double max_step_fs = 0.5;

// Medium response for one photon ordering: sum_j D_j exp(-i (e_j - w_first) u),
// where w_first is the central frequency of the photon absorbed first.
std::complex<double> medium_response(std::span<const double> energies,
                                     std::span<const double> dipoles, double w_first, double u) {
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t j = 0; j < energies.size(); ++j)
        sum += dipoles[j] * std::polar(1.0, -(energies[j] - w_first) * u);
    return sum;
}

std::complex<double> trapezoid(std::span<const double> energies, std::span<const double> dipoles,
                               double w_first, double lo, double hi, double max_step) {
    if (!(hi > lo))
        return {0.0, 0.0};
    const auto intervals = static_cast<std::size_t>(std::ceil((hi - lo) / max_step));
    const double h = (hi - lo) / static_cast<double>(intervals);
    std::complex<double> acc = 0.5 * (medium_response(energies, dipoles, w_first, lo) +
                                      medium_response(energies, dipoles, w_first, hi));
    for (std::size_t m = 1; m < intervals; ++m)
        acc += medium_response(energies, dipoles, w_first, lo + h * static_cast<double>(m));
    return acc * h;
}

} // namespace

SignalTrace oracle_trace(const MolecularSystem& system, const PhotonSource& source,
                         std::span<const double> tau_grid, OracleOptions options) {
    system.validate();
    source.validate();

    const double w_s = two_pi * speed_of_light / source.lambda_s0;
    const double w_i = two_pi * speed_of_light / source.lambda_i0;
    std::vector<double> energies;
    for (double lambda : system.level_wavelengths)
        energies.push_back(two_pi * speed_of_light / lambda);

    double fastest = 0.0;
    for (double e : energies)
        fastest = std::max({fastest, std::abs(e - w_s), std::abs(e - w_i)});

    double step = options.step_fs;
    if (fastest > 0.0) {
        const double period = two_pi / fastest;
        const double coarsest = period / oracle_min_points_per_period;
        if (step <= 0.0) {
            if (!(options.points_per_period >= oracle_min_points_per_period))
                throw ResolutionError("oracle: points_per_period must be at least 50");
            step = std::min(period / options.points_per_period, max_step_fs);
        }
        if (step > coarsest)
            throw ResolutionError("oracle: quadrature step " + std::to_string(step) +
                                  " fs does not resolve the fastest oscillation (need <= " +
                                  std::to_string(coarsest) + " fs)");
    } else if (step <= 0.0) {
        step = max_step_fs;
    }

    const double window = 2.0 * source.entanglement_time;
    SignalTrace trace;
    trace.tau.assign(tau_grid.begin(), tau_grid.end());
    trace.values.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        // signal first, u = t_i - t_s in [max(0, tau - 2Te), tau + 2Te]
        const auto signal_first = trapezoid(energies, system.dipole_products, w_s,
                                            std::max(0.0, tau - window), tau + window, step);
        // idler first, u = t_s - t_i in [max(0, -tau - 2Te), 2Te - tau]
        const auto idler_first = trapezoid(energies, system.dipole_products, w_i,
                                           std::max(0.0, -tau - window), window - tau, step);
        trace.values.push_back(std::norm(signal_first + idler_first));
    }

    trace.normalized = true;
    const double peak = trace.values.empty()
                            ? 0.0
                            : *std::max_element(trace.values.begin(), trace.values.end());
    if (peak > 0.0) {
        for (double& v : trace.values)
            v /= peak;
    } else {
        std::fill(trace.values.begin(), trace.values.end(), 0.0);
        trace.degenerate = true;
    }
    return trace;
}

} // namespace etpa::physics
