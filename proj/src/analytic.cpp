#include "phasenoise/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gk15.hpp"

namespace phasenoise {

std::complex<double> mean_amplitude(const SystemParams& params, double gamma_l) {
    return params.pump() / std::complex<double>(params.kappa + gamma_l, params.delta);
}

double phase_noise_occupation_white(double n, double kappa, double gamma_l) {
    if (gamma_l == 0.0) return 0.0;
    return n * gamma_l / (kappa + gamma_l);
}

namespace {

// Globally adaptive GK15: always bisect the segment with the largest error
// until the summed error estimate meets the tolerance. Infinite ends are
// mapped onto [0, 1) by w = p +- L t/(1 - t).
template <class F>
double integrate_line(F f, std::vector<double> points, bool infinite_ends, const QuadratureConfig& quad) {
    using Segment = detail::GkSegment<double>;
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    const double length = std::max({std::abs(points.front()), std::abs(points.back()), 1.0});
    const double left_end = points.front(), right_end = points.back();
    auto left = [&](double t) {
        const double u = 1.0 - t;
        return f(left_end - length * t / u) * length / (u * u);
    };
    auto right = [&](double t) {
        const double u = 1.0 - t;
        return f(right_end + length * t / u) * length / (u * u);
    };
    enum class Piece { left, middle, right };
    auto eval = [&](Piece piece, double a, double b) {
        switch (piece) {
            case Piece::left: return detail::gk15<double>(left, a, b);
            case Piece::right: return detail::gk15<double>(right, a, b);
            default: return detail::gk15<double>(f, a, b);
        }
    };

    using Item = std::pair<Segment, Piece>;
    auto by_error = [](const Item& x, const Item& y) { return x.first.error < y.first.error; };
    std::priority_queue<Item, std::vector<Item>, decltype(by_error)> queue(by_error);
    double total = 0.0, err = 0.0;
    auto push = [&](Piece piece, double a, double b) {
        const auto s = eval(piece, a, b);
        total += s.value;
        err += s.error;
        queue.emplace(s, piece);
    };
    if (infinite_ends) push(Piece::left, 0.0, 1.0);
    for (std::size_t i = 0; i + 1 < points.size(); ++i) push(Piece::middle, points[i], points[i + 1]);
    if (infinite_ends) push(Piece::right, 0.0, 1.0);

    std::size_t segments = queue.size();
    while (!(err <= quad.rel_tol * std::abs(total) + std::numeric_limits<double>::min())) {
        if (segments >= quad.max_segments) {
            std::ostringstream os;
            os << "quadrature did not converge: error estimate " << err << " for value " << total;
            throw NumericalError(os.str());
        }
        const auto [s, piece] = queue.top();
        queue.pop();
        total -= s.value;
        err -= s.error;
        const double mid = 0.5 * (s.a + s.b);
        push(piece, s.a, mid);
        push(piece, mid, s.b);
        ++segments;
    }
    return total;
}

void add_feature(std::vector<double>& pts, double center, double width) {
    for (double k : {0.0, 1.0, 5.0, 25.0}) {
        pts.push_back(center - k * width);
        if (k > 0.0) pts.push_back(center + k * width);
    }
}

}  // namespace

double phase_noise_occupation_colored(double n, double kappa, double gamma_l, double delta, const NoiseSpec& noise,
                                      const QuadratureConfig& quad) {
    for (const auto& v : check_noise(noise)) {
        throw std::invalid_argument(v.field + ": " + v.message);
    }
    if (!(kappa > 0.0)) throw DomainError("kappa must be > 0");
    if (n == 0.0 || noise.kind == NoiseKind::none) return 0.0;

    const double kp = kappa + gamma_l;
    const double kp2 = kp * kp;
    auto integrand = [&](double w) {
        const double d = delta - w;
        return evaluate_spectrum(noise, w) / (kp2 + d * d) / (2.0 * std::numbers::pi);
    };

    if (noise.kind != NoiseKind::tabulated) {
        std::vector<double> pts;
        add_feature(pts, delta, kp);
        if (noise.kind == NoiseKind::lorentzian) {
            const auto& l = noise.lorentzian;
            add_feature(pts, l.center_frequency, l.half_width);
            add_feature(pts, -l.center_frequency, l.half_width);
        }
        return n * integrate_line(integrand, std::move(pts), true, quad);
    }

    const double lo = delta - quad.band_factor * kp;
    const double hi = delta + quad.band_factor * kp;
    const double abs_hi = std::max(std::abs(lo), std::abs(hi));
    const double abs_lo = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
    const auto& t = noise.table;
    const double slack = 1e-12 * abs_hi;
    if (t.front().omega > abs_lo + slack || t.back().omega < abs_hi - slack) {
        std::ostringstream os;
        os << "tabulated spectrum must cover |omega| in [" << abs_lo << ", " << abs_hi
           << "] (delta +- " << quad.band_factor << " kappa'); table spans [" << t.front().omega << ", "
           << t.back().omega << "]";
        throw std::invalid_argument(os.str());
    }

    std::vector<double> pts{lo, hi};
    for (double k : {0.0, 1.0, 5.0}) {
        pts.push_back(delta - k * kp);
        pts.push_back(delta + k * kp);
    }
    for (const auto& p : t) {
        for (double w : {p.omega, -p.omega}) {
            if (w > lo && w < hi) pts.push_back(w);
        }
    }
    const double band = integrate_line(integrand, std::move(pts), false, quad);
    // Lorentzian tails beyond the band with S frozen at the edges.
    const double tail_weight = (std::numbers::pi / 2.0 - std::atan(quad.band_factor)) / (2.0 * std::numbers::pi * kp);
    const double tails = tail_weight * (evaluate_spectrum(noise, lo) + evaluate_spectrum(noise, hi));
    return n * (band + tails);
}

double phase_noise_occupation(const SystemParams& params, const NoiseSpec& noise, const QuadratureConfig& quad) {
    const double gamma = damping_linewidth(noise);
    const double n = std::norm(mean_amplitude(params, gamma));
    switch (noise.kind) {
        case NoiseKind::none:
            return 0.0;
        case NoiseKind::white:
            return phase_noise_occupation_white(n, params.kappa, gamma);
        default:
            return phase_noise_occupation_colored(n, params.kappa, gamma, params.delta, noise, quad);
    }
}

double effective_temperature(double n_add, double delta) {
    if (!(delta > 0.0)) throw DomainError("effective_temperature: delta must be > 0");
    return PhysicalConstants::hbar * delta * n_add / PhysicalConstants::k_B;
}

ConditionReport check_conditions(const SystemParams& params, const NoiseSpec& noise, double n, double threshold) {
    ConditionReport r;
    r.threshold = threshold;
    const double gamma = damping_linewidth(noise);
    r.margin_1 = gamma / params.kappa;
    r.margin_2 = n * evaluate_spectrum(noise, params.delta) / (2.0 * params.kappa);
    r.pass_1 = r.margin_1 < threshold;
    r.pass_2 = r.margin_2 < threshold;
    r.max_gamma_l_condition_1 = threshold * params.kappa;
    const double inf = std::numeric_limits<double>::infinity();
    r.max_gamma_l = n > 0.0 ? threshold * params.kappa / n : inf;
    r.max_s_at_delta = n > 0.0 ? 2.0 * threshold * params.kappa / n : inf;
    return r;
}

double sqrt_T_gamma_figure(double temperature, double gamma_l) {
    if (!(temperature >= 0.0) || !(gamma_l >= 0.0)) throw DomainError("sqrt_T_gamma_figure: inputs must be >= 0");
    return std::sqrt(temperature * gamma_l);
}

SteadyStateReport steady_state_report(const SystemParams& params, const NoiseSpec& noise,
                                      const AnalyticOptions& options, const QuadratureConfig& quad) {
    SteadyStateReport r;
    r.gamma_l = damping_linewidth(noise);
    r.alpha = mean_amplitude(params, r.gamma_l);
    r.n = std::norm(r.alpha);
    r.s_at_delta = evaluate_spectrum(noise, params.delta);
    r.n_add = phase_noise_occupation(params, noise, quad);
    if (params.delta > 0.0) r.t_eff = effective_temperature(r.n_add, params.delta);
    r.conditions = check_conditions(params, noise, r.n, options.threshold);
    r.target_n_add = options.target_n_add;
    const double kp = params.kappa + r.gamma_l;
    r.max_tolerable_s_at_delta =
        r.n > 0.0 ? 2.0 * kp * options.target_n_add / r.n : std::numeric_limits<double>::infinity();
    return r;
}

}  // namespace phasenoise
