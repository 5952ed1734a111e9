#include "phasenoise/langevin.hpp"

#include <cmath>
#include <numbers>

#include "phasenoise/analytic.hpp"

namespace phasenoise {

double noise_gain(double rate, double dt) {
    const double x = 2.0 * rate * dt;
    if (x < 1e-12) return 1.0;
    return std::sqrt(-std::expm1(-x) / x);
}

namespace {

// sqrt(2 kappa) times the symmetrized-vacuum amplitude 1/sqrt(2).
double vacuum_scale(double kappa) {
    return std::sqrt(kappa);
}

}  // namespace

DisplacedStepper::DisplacedStepper(const SystemParams& params, double gamma_l, double dt) {
    const double kp = params.kappa + gamma_l;
    const Amplitude lambda{kp, params.delta};
    alpha_ = mean_amplitude(params, gamma_l);
    decay_ = std::exp(-lambda * dt);
    const double g = noise_gain(kp, dt);
    phase_gain_ = Amplitude{0.0, 1.0} * alpha_ * g;
    vacuum_gain_ = vacuum_scale(params.kappa) * g;
}

LabStepper::LabStepper(const SystemParams& params, double dt) {
    const Amplitude mu{params.kappa, params.delta};
    decay_ = std::exp(-mu * dt);
    pump_gain_ = params.pump() * (1.0 - decay_) / mu;
    fixed_point_ = params.pump() / mu;
    vacuum_gain_ = vacuum_scale(params.kappa) * noise_gain(params.kappa, dt);
}

TwinStepper::TwinStepper(const SystemParams& params, double gamma_l, double dt) {
    const double kp = params.kappa + gamma_l;
    decay_ = std::exp(-Amplitude{kp, params.delta} * dt);
    vacuum_gain_ = vacuum_scale(params.kappa) * noise_gain(kp, dt);
}

}  // namespace phasenoise
