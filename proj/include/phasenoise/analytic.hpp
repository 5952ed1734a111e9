#pragma once

// Closed-form steady-state results for the pumped cavity with laser phase
// noise, in the displaced (co-rotating) frame
//
//   da/dt = -(kappa + Gamma_l + i delta) a + i alpha dphi/dt + sqrt(2 kappa) a_in,
//   alpha = E / (kappa + Gamma_l + i delta).
//
// The phase-noise occupation is the exact stationary second moment of that
// linear equation, n Gamma_l / (kappa + Gamma_l) for white frequency noise,
// which is n Gamma_l / kappa to leading order in Gamma_l / kappa.

#include <complex>

#include "phasenoise/core.hpp"

namespace phasenoise {

std::complex<double> mean_amplitude(const SystemParams& params, double gamma_l);

double phase_noise_occupation_white(double n, double kappa, double gamma_l);

struct QuadratureConfig {
    double rel_tol = 1e-10;
    /// Tabulated spectra are integrated over delta +- band_factor * kappa'
    /// and the remainder is added analytically with S frozen at the band
    /// edges. The neglected tail is bounded by
    ///   n * max|S - S_edge| / (pi * band_factor * kappa').
    double band_factor = 50.0;
    std::size_t max_segments = 200000;
};

/// n * integral dw/2pi S(w) / (kappa'^2 + (delta - w)^2), kappa' = kappa + gamma_l.
double phase_noise_occupation_colored(double n, double kappa, double gamma_l, double delta, const NoiseSpec& noise,
                                      const QuadratureConfig& quad = {});

/// Dispatches on noise.kind; gamma_l is damping_linewidth(noise).
double phase_noise_occupation(const SystemParams& params, const NoiseSpec& noise, const QuadratureConfig& quad = {});

/// T = hbar delta n_add / k_B. Throws DomainError for delta <= 0.
double effective_temperature(double n_add, double delta);

struct ConditionReport {
    double threshold = 0.01;
    double margin_1 = 0.0;  // gamma_l / kappa
    double margin_2 = 0.0;  // n S(delta) / (2 kappa); n gamma_l / kappa for white noise
    bool pass_1 = true;
    bool pass_2 = true;
    double max_gamma_l_condition_1 = 0.0;  // threshold * kappa
    double max_gamma_l = 0.0;              // threshold * kappa / n
    double max_s_at_delta = 0.0;           // 2 threshold * kappa / n
};

/// The "much less than" verdicts are margin < threshold.
ConditionReport check_conditions(const SystemParams& params, const NoiseSpec& noise, double n,
                                 double threshold = 0.01);

/// Comparative figure of merit only; no absolute calibration.
double sqrt_T_gamma_figure(double temperature, double gamma_l);

struct AnalyticOptions {
    double threshold = 0.01;
    double target_n_add = 1.0;

    bool operator==(const AnalyticOptions&) const = default;
};

struct SteadyStateReport {
    std::complex<double> alpha;
    double n = 0.0;
    double gamma_l = 0.0;       // damping linewidth used
    double s_at_delta = 0.0;
    double n_add = 0.0;
    std::optional<double> t_eff;  // absent when delta <= 0
    ConditionReport conditions;
    double target_n_add = 1.0;
    /// Largest flat S near delta keeping n_add at the target: 2 kappa' target / n.
    double max_tolerable_s_at_delta = 0.0;
};

SteadyStateReport steady_state_report(const SystemParams& params, const NoiseSpec& noise,
                                      const AnalyticOptions& options = {}, const QuadratureConfig& quad = {});

}  // namespace phasenoise
