#include "phasenoise/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gk15.hpp"
#include "phasenoise/analytic.hpp"

namespace phasenoise {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<Violation> check_mechanics(const MechanicalParams& m) {
    std::vector<Violation> out;
    if (!(m.omega_m > 0.0) || !std::isfinite(m.omega_m)) out.push_back({"mechanics.omega_m", "must be > 0"});
    if (!(m.gamma_m > 0.0) || !std::isfinite(m.gamma_m)) out.push_back({"mechanics.gamma_m", "must be > 0"});
    if (!(m.n_th >= 0.0) || !std::isfinite(m.n_th)) out.push_back({"mechanics.n_th", "must be >= 0"});
    if (!std::isfinite(m.g)) out.push_back({"mechanics.g", "must be finite"});
    return out;
}

namespace {

void require_hurwitz(const MatrixXd& drift) {
    Eigen::EigenSolver<MatrixXd> es(drift, false);
    const Eigen::VectorXcd ev = es.eigenvalues();
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) worst = std::max(worst, ev[i].real());
    if (!(worst < 0.0)) {
        std::ostringstream os;
        os.precision(6);
        os << "linearized system is unstable (drift not Hurwitz); eigenvalues:";
        for (Eigen::Index i = 0; i < ev.size(); ++i) os << ' ' << ev[i].real() << (ev[i].imag() < 0 ? "" : "+") << ev[i].imag() << 'i';
        throw InstabilityError(os.str(), ev);
    }
}

}  // namespace

CoupledModel build_model(const SystemParams& params, const MechanicalParams& mech, const NoiseSpec& noise) {
    auto v = check_system(params);
    auto nv = check_noise(noise);
    auto mv = check_mechanics(mech);
    v.insert(v.end(), nv.begin(), nv.end());
    v.insert(v.end(), mv.begin(), mv.end());
    if (!v.empty()) throw std::invalid_argument(v.front().field + ": " + v.front().message);

    CoupledModel m;
    m.kappa = params.kappa;
    m.delta = params.delta;
    m.gamma_l = damping_linewidth(noise);
    m.mech = mech;
    m.alpha = mean_amplitude(params, m.gamma_l);
    m.phase_noise_rate = std::norm(m.alpha) * evaluate_spectrum(noise, params.delta);
    m.phase_weights = Eigen::Vector4d(-std::numbers::sqrt2 * m.alpha.imag(), std::numbers::sqrt2 * m.alpha.real(), 0, 0);
    m.tabulated = noise.kind == NoiseKind::tabulated;

    const bool lorentz = noise.kind == NoiseKind::lorentzian;
    if (lorentz) m.filter_states = noise.lorentzian.center_frequency > 0.0 ? 2 : 1;
    const Eigen::Index dim = 4 + static_cast<Eigen::Index>(m.filter_states);

    const double kp = params.kappa + m.gamma_l;
    const double coupling = 2.0 * mech.g;
    m.drift = MatrixXd::Zero(dim, dim);
    m.drift(0, 0) = -kp;
    m.drift(0, 1) = params.delta;
    m.drift(1, 0) = -params.delta;
    m.drift(1, 1) = -kp;
    m.drift(1, 2) = coupling;
    m.drift(2, 3) = mech.omega_m;
    m.drift(3, 2) = -mech.omega_m;
    m.drift(3, 3) = -mech.gamma_m;
    m.drift(3, 0) = coupling;

    m.diffusion = MatrixXd::Zero(dim, dim);
    m.diffusion(0, 0) = params.kappa;
    m.diffusion(1, 1) = params.kappa;
    m.diffusion(3, 3) = mech.gamma_m * (2.0 * mech.n_th + 1.0);
    m.phase_diffusion = MatrixXd::Zero(dim, dim);

    if (noise.kind == NoiseKind::white) {
        m.phase_diffusion.topLeftCorner(4, 4) = 2.0 * m.gamma_l * m.phase_weights * m.phase_weights.transpose();
    } else if (lorentz) {
        const auto& l = noise.lorentzian;
        const Eigen::Index u = 4;
        m.drift(u, u) = -l.half_width;
        m.drift(0, u) = m.phase_weights[0];
        m.drift(1, u) = m.phase_weights[1];
        m.phase_diffusion(u, u) = 2.0 * l.half_width * l.total_strength;
        if (m.filter_states == 2) {
            m.drift(u, u + 1) = -l.center_frequency;
            m.drift(u + 1, u) = l.center_frequency;
            m.drift(u + 1, u + 1) = -l.half_width;
            m.phase_diffusion(u + 1, u + 1) = 2.0 * l.half_width * l.total_strength;
        }
    }
    m.diffusion += m.phase_diffusion;

    require_hurwitz(m.drift);
    return m;
}

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& d, double* condition_estimate) {
    const Eigen::Index n = a.rows();
    const MatrixXd id = MatrixXd::Identity(n, n);
    MatrixXd k(n * n, n * n);
    // vec(A V) = (I kron A) vec V, vec(V A^T) = (A kron I) vec V
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            k.block(i * n, j * n, n, n) = id(i, j) * a + a(i, j) * id;
        }
    }
    const Eigen::FullPivLU<MatrixXd> lu(k);
    const VectorXd rhs = -Eigen::Map<const VectorXd>(d.data(), n * n);
    VectorXd x = lu.solve(rhs);
    for (int iter = 0; iter < 3; ++iter) {
        const VectorXd r = rhs - k * x;
        x += lu.solve(r);
    }
    if (condition_estimate) *condition_estimate = 1.0 / lu.rcond();
    MatrixXd v = Eigen::Map<MatrixXd>(x.data(), n, n);
    return 0.5 * (v + v.transpose());
}

namespace {

void fill_report(CoolingReport& r, const MatrixXd& v4, const MatrixXd& phase_v4, const CoupledModel& m) {
    r.covariance = v4;
    r.n_cav = 0.5 * (v4(0, 0) + v4(1, 1) - 1.0);
    r.n_m = 0.5 * (v4(2, 2) + v4(3, 3) - 1.0);
    r.phase_noise_share_cav = 0.5 * (phase_v4(0, 0) + phase_v4(1, 1));
    r.phase_noise_share = 0.5 * (phase_v4(2, 2) + phase_v4(3, 3));

    Eigen::Matrix4cd h = v4.cast<std::complex<double>>();
    const std::complex<double> half_i{0.0, 0.5};
    for (int blk : {0, 2}) {
        h(blk, blk + 1) += half_i;
        h(blk + 1, blk) -= half_i;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h, Eigen::EigenvaluesOnly);
    r.min_physical_eigenvalue = es.eigenvalues().minCoeff();
    r.physical = r.min_physical_eigenvalue >= -1e-9 * std::max(1.0, v4.norm());

    if (m.delta > 0.0) r.t_eff_delta = effective_temperature(r.n_cav, m.delta);
    r.t_eff_mech = PhysicalConstants::hbar * m.mech.omega_m * r.n_m / PhysicalConstants::k_B;
}

}  // namespace

CoolingReport solve_steady(const CoupledModel& model) {
    if (model.tabulated) {
        throw std::invalid_argument("tabulated spectra have no finite-state filter; use the spectral method");
    }
    require_hurwitz(model.drift);
    CoolingReport r;
    const MatrixXd v = solve_lyapunov(model.drift, model.diffusion, &r.condition_estimate);
    const MatrixXd base = model.diffusion - model.phase_diffusion;
    const MatrixXd v0 = solve_lyapunov(model.drift, base);

    const double dnorm = model.diffusion.norm();
    r.residual = (model.drift * v + v * model.drift.transpose() + model.diffusion).norm() / dnorm;
    const double base_residual =
        (model.drift * v0 + v0 * model.drift.transpose() + base).norm() / std::max(base.norm(), 1e-300);
    if (!(r.residual <= 1e-10) || !(base_residual <= 1e-10)) {
        std::ostringstream os;
        os << "Lyapunov solve inaccurate: relative residual " << std::max(r.residual, base_residual)
           << ", condition estimate " << r.condition_estimate;
        throw NumericalError(os.str());
    }
    fill_report(r, v.topLeftCorner(4, 4), (v - v0).topLeftCorner(4, 4), model);
    return r;
}

namespace {

std::vector<double> spectral_breakpoints(const MatrixXd& a4, const NoiseSpec& noise) {
    std::vector<double> pts{0.0};
    auto feature = [&](double center, double width) {
        if (!(width > 0.0)) return;
        for (double c : {center, -center}) {
            pts.push_back(c);
            double k = 1.0;
            for (int i = 0; i < 12; ++i, k *= 4.0) {
                pts.push_back(c - k * width);
                pts.push_back(c + k * width);
            }
        }
    };
    Eigen::EigenSolver<MatrixXd> es(a4, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const auto ev = es.eigenvalues()[i];
        feature(ev.imag(), -ev.real());
    }
    if (noise.kind == NoiseKind::lorentzian) {
        feature(noise.lorentzian.center_frequency, noise.lorentzian.half_width);
    } else if (noise.kind == NoiseKind::tabulated) {
        const std::size_t stride = std::max<std::size_t>(1, noise.table.size() / 2000);
        for (std::size_t i = 0; i < noise.table.size(); i += stride) {
            pts.push_back(noise.table[i].omega);
            pts.push_back(-noise.table[i].omega);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// Entries (i, j), i <= j, of the base and phase-channel integrands.
constexpr int kEntries = 10;
using Sample = Eigen::Matrix<double, 2 * kEntries, 1>;

using Segment = detail::GkSegment<Sample>;

template <class F>
Segment gk15(const F& f, double a, double b) {
    return detail::gk15<Sample>(f, a, b);
}

}  // namespace

CoolingReport solve_spectral(const CoupledModel& model, const NoiseSpec& noise, const SpectralGrid& grid) {
    const MatrixXd a4 = model.drift.topLeftCorner(4, 4);
    const MatrixXd base = (model.diffusion - model.phase_diffusion).topLeftCorner(4, 4);
    const Eigen::Vector4d w = model.phase_weights;
    const auto pts = spectral_breakpoints(a4, noise);

    int idx[kEntries][2];
    for (int i = 0, k = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j, ++k) {
            idx[k][0] = i;
            idx[k][1] = j;
        }
    }

    // H D H^dagger / 2pi with H = (-i w I - A)^{-1}.
    auto integrand = [&](double omega) {
        Eigen::Matrix4cd m = -a4.cast<std::complex<double>>();
        for (int i = 0; i < 4; ++i) m(i, i) += std::complex<double>(0.0, -omega);
        const Eigen::Matrix4cd h = m.inverse();
        const Eigen::Matrix4cd hb = h * base * h.adjoint();
        const double s = evaluate_spectrum(noise, omega);
        const Eigen::Vector4cd hw = h * w;
        Sample out;
        for (int k = 0; k < kEntries; ++k) {
            const int i = idx[k][0], j = idx[k][1];
            out[k] = hb(i, j).real();
            out[kEntries + k] = s * std::real(hw[i] * std::conj(hw[j]));
        }
        return Sample(out / (2.0 * std::numbers::pi));
    };

    // Tails are mapped onto [0, 1) by omega = p +- L t/(1 - t).
    const double length = std::max({std::abs(pts.front()), std::abs(pts.back()), 1.0});
    auto tail = [&](double p, double sign) {
        return [&, p, sign](double t) {
            const double u = 1.0 - t;
            return Sample(integrand(p + sign * length * t / u) * (length / (u * u)));
        };
    };
    const auto left = tail(pts.front(), -1.0);
    const auto right = tail(pts.back(), 1.0);
    enum class Piece { left, middle, right };
    auto eval = [&](Piece piece, double a, double b) {
        switch (piece) {
            case Piece::left: return gk15(left, a, b);
            case Piece::right: return gk15(right, a, b);
            default: return gk15(integrand, a, b);
        }
    };

    std::vector<std::pair<Segment, Piece>> initial;
    initial.emplace_back(eval(Piece::left, 0.0, 1.0), Piece::left);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        initial.emplace_back(eval(Piece::middle, pts[k], pts[k + 1]), Piece::middle);
    }
    initial.emplace_back(eval(Piece::right, 0.0, 1.0), Piece::right);

    Sample total = Sample::Zero(), total_err = Sample::Zero();
    for (const auto& [seg, piece] : initial) {
        total += seg.value;
        total_err += seg.error;
    }
    auto scales = [&]() {
        Sample sc;
        for (int k = 0; k < kEntries; ++k) {
            const int i = idx[k][0], j = idx[k][1];
            auto v = [&](int r, int c) {
                for (int q = 0; q < kEntries; ++q) {
                    if (idx[q][0] == std::min(r, c) && idx[q][1] == std::max(r, c)) return total[q] + total[kEntries + q];
                }
                return 0.0;
            };
            sc[k] = sc[kEntries + k] = std::abs(v(i, j)) + std::sqrt(std::abs(v(i, i) * v(j, j))) +
                                       std::numeric_limits<double>::min();
        }
        return sc;
    };
    Sample scale = scales();
    auto priority = [&](const Segment& s) { return s.error.cwiseQuotient(scale).maxCoeff(); };

    std::priority_queue<std::pair<Segment, Piece>, std::vector<std::pair<Segment, Piece>>,
                        std::function<bool(const std::pair<Segment, Piece>&, const std::pair<Segment, Piece>&)>>
        queue([](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [seg, piece] : initial) {
        seg.priority = priority(seg);
        queue.emplace(seg, piece);
    }

    std::size_t segments = initial.size();
    while (!(total_err.array() <= grid.rel_tol * scale.array()).all()) {
        if (segments >= grid.max_segments) {
            std::ostringstream os;
            os << "spectral integration did not converge within " << grid.max_segments
               << " segments; worst relative error " << total_err.cwiseQuotient(scale).maxCoeff();
            throw NumericalError(os.str());
        }
        auto [seg, piece] = queue.top();
        queue.pop();
        const double mid = 0.5 * (seg.a + seg.b);
        auto lo = eval(piece, seg.a, mid);
        auto hi = eval(piece, mid, seg.b);
        total += lo.value + hi.value - seg.value;
        total_err += lo.error + hi.error - seg.error;
        if (++segments % 64 == 0) scale = scales();
        lo.priority = priority(lo);
        hi.priority = priority(hi);
        queue.emplace(lo, piece);
        queue.emplace(hi, piece);
    }

    MatrixXd v_base(4, 4), v_phase(4, 4);
    for (int k = 0; k < kEntries; ++k) {
        const int i = idx[k][0], j = idx[k][1];
        v_base(i, j) = v_base(j, i) = total[k];
        v_phase(i, j) = v_phase(j, i) = total[kEntries + k];
    }

    const MatrixXd v = v_base + v_phase;
    CoolingReport r;
    if (noise.kind == NoiseKind::white || noise.kind == NoiseKind::none) {
        const MatrixXd d = base + model.phase_diffusion.topLeftCorner(4, 4);
        r.residual = (a4 * v + v * a4.transpose() + d).norm() / d.norm();
    } else {
        // Colored noise has no constant-D Lyapunov equation to check against.
        r.residual = std::numeric_limits<double>::quiet_NaN();
    }
    fill_report(r, v, v_phase, model);
    return r;
}

}  // namespace phasenoise
