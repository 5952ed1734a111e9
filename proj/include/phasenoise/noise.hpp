#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "phasenoise/core.hpp"
#include "phasenoise/rng.hpp"

namespace phasenoise {

/// Per-step noise inputs for one cavity trajectory.
struct NoisePath {
    double dt = 0.0;
    std::vector<double> phase_increments;                  // delta phi per step, rad
    std::vector<std::complex<double>> vacuum_increments;   // E|w|^2 = dt

    std::size_t steps() const { return phase_increments.size(); }
};

/// Complex Gaussian increments, mean 0, E|w|^2 = dt, E[w^2] = 0.
std::vector<std::complex<double>> gen_vacuum(std::size_t steps, double dt, RandomStream& rng);

/// I.i.d. Gaussian delta phi with variance 2 gamma_l dt (Wiener phase).
std::vector<double> gen_phase_white(std::size_t steps, double dt, double gamma_l, RandomStream& rng);

/// Phase increments whose derivative has PSD S(omega) given by a colored
/// noise spec. Lorentzian spectra are produced by an exactly-updated OU
/// filter; tabulated spectra by circulant-embedding FFT synthesis, which
/// requires the table to cover [2 pi/(2 N dt), pi/dt].
std::vector<double> gen_phase_colored(std::size_t steps, double dt, const NoiseSpec& noise, RandomStream& rng);

/// Dispatch on noise.kind (none gives zeros).
std::vector<double> gen_phase(std::size_t steps, double dt, const NoiseSpec& noise, RandomStream& rng);

/// Streaming source for the Lorentzian pair spectrum. The state z obeys
///   dz = (-W + i w0) z dt + sigma dB,  sigma^2 = 4 W P,
/// and d(phi)/dt = Re z. Each call samples (z(t+dt), integral of Re z)
/// jointly from their exact conditional Gaussian law.
class LorentzianPhaseFilter {
public:
    LorentzianPhaseFilter(const LorentzianSpectrum& spectrum, double dt);

    /// Draws z from the stationary law.
    void reset(RandomStream& rng);
    /// Next delta phi.
    double next(RandomStream& rng);

    std::complex<double> state() const { return z_; }

private:
    std::complex<double> decay_;        // e^{rho dt}
    std::complex<double> mean_gain_;    // (e^{rho dt} - 1)/rho
    // Cholesky factor of the 2x2 Hermitian noise covariance of (xi, eta).
    double l11_ = 0.0;
    std::complex<double> l21_;
    double l22_ = 0.0;
    double stationary_sd_ = 0.0;
    std::complex<double> z_;
};

struct PsdEstimate {
    std::vector<double> omega;    // rad/s, 0 .. pi/dt
    std::vector<double> density;  // two-sided PSD, rad^2/s for phase-rate input
    std::vector<double> std_error;
    std::size_t segments = 0;
};

/// Welch estimate with a Hann window. A white sequence x_k with
/// var(x) dt = q gives density q in every bin.
PsdEstimate estimate_psd(std::span<const double> samples, double dt, std::size_t segment_length,
                         double overlap_fraction);

/// Two-column CSV "omega_rad_per_s,S" with a header row.
std::vector<SpectrumPoint> read_spectrum_csv(std::istream& in);
std::vector<SpectrumPoint> read_spectrum_csv(const std::string& path);
void write_spectrum_csv(std::ostream& out, const PsdEstimate& psd);

}  // namespace phasenoise
