#pragma once

// One-step propagators for the cavity Langevin equations.
//
// Every stepper integrates the linear drift exactly. Additive noise over a
// step of length dt is injected as (per-step increment) * gain with
//   gain = sqrt((1 - exp(-2 r dt)) / (2 r dt)),
// r the real damping rate, so that the per-step covariance of the
// discretised process equals the continuous one. With white phase noise the
// displaced and twin updates are exact in distribution for any dt.
//
// Vacuum increments w carry E|w|^2 = dt; the symmetrized vacuum input has
// strength 1/2, so a vacuum-only cavity settles at <|a|^2> = 1/2.

#include <complex>

#include "phasenoise/core.hpp"

namespace phasenoise {

using Amplitude = std::complex<double>;

/// Fluctuation around alpha in the laser-co-rotating frame:
///   da = -(kappa' + i delta) a dt + i alpha dphi + sqrt(2 kappa) a_in dt
class DisplacedStepper {
public:
    DisplacedStepper(const SystemParams& params, double gamma_l, double dt);

    Amplitude step(Amplitude a, double dphi, Amplitude w_vac) const {
        return decay_ * a + phase_gain_ * dphi + vacuum_gain_ * w_vac;
    }

    Amplitude alpha() const { return alpha_; }

private:
    Amplitude alpha_;
    Amplitude decay_;
    Amplitude phase_gain_;
    double vacuum_gain_;
};

struct LabState {
    Amplitude a;
    double phi = 0.0;
};

/// Lab-frame field driven by E exp(-i phi):
///   da = -(kappa + i delta) a dt + E exp(-i phi) dt + sqrt(2 kappa) a_in dt
/// The pump is integrated exactly with phi frozen at the step midpoint.
class LabStepper {
public:
    LabStepper(const SystemParams& params, double dt);

    LabState step(LabState s, double dphi, Amplitude w_vac) const {
        const double mid = s.phi + 0.5 * dphi;
        LabState out;
        out.a = decay_ * s.a + pump_gain_ * std::polar(1.0, -mid) + vacuum_gain_ * w_vac;
        out.phi = s.phi + dphi;
        return out;
    }

    /// Co-rotating amplitude a exp(i phi), comparable with alpha.
    static Amplitude co_rotating(const LabState& s) { return s.a * std::polar(1.0, s.phi); }

    Amplitude fixed_point() const { return fixed_point_; }

private:
    Amplitude decay_;
    Amplitude pump_gain_;
    Amplitude fixed_point_;
    double vacuum_gain_;
};

/// Differential mode of two identical cavities sharing one laser:
///   da = -(kappa' + i delta) a dt + i a dphi + sqrt(2 kappa) a_in dt
/// The multiplicative phase term is applied as the exact rotation
/// exp(i dphi) after the linear update.
class TwinStepper {
public:
    TwinStepper(const SystemParams& params, double gamma_l, double dt);

    Amplitude step(Amplitude a, double dphi, Amplitude w_vac) const {
        return std::polar(1.0, dphi) * (decay_ * a + vacuum_gain_ * w_vac);
    }

private:
    Amplitude decay_;
    double vacuum_gain_;
};

/// sqrt((1 - exp(-2 r dt)) / (2 r dt)); 1 when r dt -> 0.
double noise_gain(double rate, double dt);

}  // namespace phasenoise
