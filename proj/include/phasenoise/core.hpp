#pragma once

// Physical parameter types shared by every module.
//
// All rates (kappa, delta, gamma_l, pump_rate, spectral frequencies) are
// angular rates in rad/s. Conversion from ordinary frequency happens once,
// on config ingest.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasenoise {

struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;  // J s
    static constexpr double k_B = 1.380649e-23;      // J/K
    static constexpr double c = 299792458.0;         // m/s
};

/// Thrown for non-positive physical inputs and similar domain violations.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Divergence, instability, failed convergence. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SystemParams {
    double kappa = 0.0;  // cavity amplitude decay rate
    double delta = 0.0;  // detuning, sign free
    std::optional<double> pump_rate;         // E, 1/s; derived from power when absent
    std::optional<double> laser_power;       // W
    std::optional<double> laser_wavelength;  // m

    /// Pump amplitude; throws if neither given nor derived yet.
    double pump() const;

    bool operator==(const SystemParams&) const = default;
};

enum class NoiseKind { none, white, lorentzian, tabulated };

const char* to_string(NoiseKind kind);
std::optional<NoiseKind> parse_noise_kind(std::string_view text);

/// Frequency-noise Lorentzian pair, symmetric about zero:
///   S(w) = P W [1/((w-w0)^2+W^2) + 1/((w+w0)^2+W^2)]
/// with P = total_strength the variance of d(phi)/dt, i.e. the integral of
/// S dw/2pi over the whole line.
struct LorentzianSpectrum {
    double total_strength = 0.0;    // rad^2/s^2
    double center_frequency = 0.0;  // w0 >= 0
    double half_width = 0.0;        // W > 0

    bool operator==(const LorentzianSpectrum&) const = default;
};

struct SpectrumPoint {
    double omega = 0.0;    // rad/s, >= 0
    double density = 0.0;  // rad^2/s (two-sided PSD of d(phi)/dt)

    bool operator==(const SpectrumPoint&) const = default;
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    /// Phase diffusion rate. Required for white noise; for colored kinds an
    /// explicit value overrides the S(0)/2 default used for damping.
    std::optional<double> gamma_l;
    LorentzianSpectrum lorentzian;
    std::vector<SpectrumPoint> table;

    static NoiseSpec white(double gamma_l);
    static NoiseSpec lorentzian_spectrum(double total_strength, double center, double half_width);
    static NoiseSpec tabulated(std::vector<SpectrumPoint> table);

    bool operator==(const NoiseSpec&) const = default;
};

/// Two-sided frequency-noise PSD S(|omega|). Tabulated spectra are linearly
/// interpolated and held constant beyond their end points.
double evaluate_spectrum(const NoiseSpec& noise, double omega);

/// Linewidth entering the mean-field damping kappa + Gamma_l. White noise
/// uses gamma_l; colored kinds use gamma_l if given, otherwise S(0)/2, the
/// long-time phase diffusion rate of the spectrum.
double damping_linewidth(const NoiseSpec& noise);

enum class Frame { lab, displaced };

const char* to_string(Frame frame);

struct SimConfig {
    double dt = 0.0;
    double duration = 0.0;
    double burn_in = 0.0;
    std::uint64_t n_trajectories = 1;
    std::uint64_t seed = 0;
    Frame frame = Frame::displaced;
    bool vacuum_noise = true;
    std::uint64_t n_batches = 16;  // per trajectory, for error bars

    std::uint64_t steps() const;
    std::uint64_t burn_in_steps() const;

    bool operator==(const SimConfig&) const = default;
};

/// Defaults scaled to the system: dt = 0.01/max(kappa', |delta|),
/// duration 100/kappa, burn-in 10/kappa.
SimConfig default_sim_config(const SystemParams& params, const NoiseSpec& noise);

/// E = sqrt(2 kappa P / (hbar omega_L)), omega_L = 2 pi c / lambda.
/// This is the usual input-coupling convention with a single total loss
/// rate; specify pump_rate directly to use a different one.
double pump_rate_from_power(double power, double wavelength, double kappa);

struct Violation {
    std::string field;
    std::string message;
};

struct Bundle {
    SystemParams system;
    NoiseSpec noise;
    SimConfig sim;
};

struct ValidationOutcome {
    std::optional<Bundle> bundle;
    std::vector<Violation> violations;
    std::vector<std::string> warnings;

    bool ok() const { return bundle.has_value(); }
    std::string describe() const;
};

std::vector<Violation> check_system(const SystemParams& params);
std::vector<Violation> check_noise(const NoiseSpec& noise);

/// Returns a copy with pump_rate filled in, or the list of violations.
ValidationOutcome validate(const SystemParams& params, const NoiseSpec& noise, const SimConfig& cfg);

/// Same checks without the simulation block (analytic/coupled paths).
ValidationOutcome validate(const SystemParams& params, const NoiseSpec& noise);

}  // namespace phasenoise
