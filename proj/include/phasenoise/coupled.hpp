#pragma once

// Linearized cavity-mirror system with laser phase noise.
//
// State (X, Y, x, p) with X = (a + a*)/sqrt2, Y = (a - a*)/(i sqrt2) for the
// cavity fluctuation and x, p the dimensionless mirror quadratures. Drift:
//
//   dX/dt = -k' X + delta Y                 + wX phidot + noise
//   dY/dt = -delta X - k' Y + 2g x          + wY phidot + noise
//   dx/dt =  omega_m p
//   dp/dt = -omega_m x - gamma_m p + 2g X   + noise
//
// with k' = kappa + Gamma_l, coupling Hamiltonian -hbar g (a + a*)(b + b*)
// and (wX, wY) = (-sqrt2 Im alpha, sqrt2 Re alpha) from the i alpha phidot
// term. Symmetrized diffusion: kappa on X and Y, gamma_m (2 n_th + 1) on p.
// White phase noise adds 2 Gamma_l w w^T; a Lorentzian spectrum is realised
// by appending its OU filter (one state for w0 = 0, two otherwise) whose
// first component is phidot.

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>

#include "phasenoise/core.hpp"

namespace phasenoise {

struct MechanicalParams {
    double omega_m = 0.0;
    double gamma_m = 0.0;
    double n_th = 0.0;
    double g = 0.0;

    bool operator==(const MechanicalParams&) const = default;
};

std::vector<Violation> check_mechanics(const MechanicalParams& mech);

class InstabilityError : public NumericalError {
public:
    InstabilityError(const std::string& what, Eigen::VectorXcd eigenvalues)
        : NumericalError(what), eigenvalues_(std::move(eigenvalues)) {}
    const Eigen::VectorXcd& eigenvalues() const { return eigenvalues_; }

private:
    Eigen::VectorXcd eigenvalues_;
};

struct CoupledModel {
    Eigen::MatrixXd drift;            // 4x4, 5x5 or 6x6
    Eigen::MatrixXd diffusion;        // total
    Eigen::MatrixXd phase_diffusion;  // phase-noise channel only
    std::complex<double> alpha;
    double kappa = 0.0;
    double delta = 0.0;
    double gamma_l = 0.0;  // damping linewidth
    MechanicalParams mech;
    Eigen::Vector4d phase_weights;
    std::size_t filter_states = 0;
    bool tabulated = false;  // colored spectrum without a finite-state filter

    /// Injection rates into |a|^2 in the amplitude normalization of the
    /// vacuum correlator <a_in a_in^dagger> = delta(t - s): |alpha|^2 S(delta)
    /// (2 |alpha|^2 Gamma_l for white noise) against 2 kappa.
    double phase_noise_rate = 0.0;
    double vacuum_rate() const { return 2.0 * kappa; }
};

/// Throws InstabilityError when the drift is not Hurwitz.
CoupledModel build_model(const SystemParams& params, const MechanicalParams& mech, const NoiseSpec& noise);

struct CoolingReport {
    Eigen::MatrixXd covariance;  // physical 4x4 block
    double n_cav = 0.0;          // (V_XX + V_YY - 1)/2
    double n_m = 0.0;            // (V_xx + V_pp - 1)/2
    double phase_noise_share = 0.0;  // n_m minus n_m with the phase channel off
    double phase_noise_share_cav = 0.0;
    double residual = 0.0;           // relative Frobenius residual (Lyapunov route)
    double condition_estimate = 0.0;
    double min_physical_eigenvalue = 0.0;  // of V + i Omega/2
    bool physical = true;
    std::optional<double> t_eff_delta;  // hbar delta n_cav / k_B
    double t_eff_mech = 0.0;             // hbar omega_m n_m / k_B
};

/// Direct dense solve of A V + V A^T + D = 0.
CoolingReport solve_steady(const CoupledModel& model);

struct SpectralGrid {
    double rel_tol = 1e-9;
    std::size_t max_segments = 200000;
};

/// Integrates H(w) D(w) H(w)^dagger dw/2pi with H = (-i w - A)^{-1} on the
/// physical 4x4 system, using S(w) from `noise` for the phase channel.
CoolingReport solve_spectral(const CoupledModel& model, const NoiseSpec& noise, const SpectralGrid& grid = {});

/// Stationary covariance by Kronecker vectorisation; exposed for tests.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& drift, const Eigen::MatrixXd& diffusion,
                               double* condition_estimate = nullptr);

}  // namespace phasenoise
