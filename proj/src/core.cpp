#include "phasenoise/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace phasenoise {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

double SystemParams::pump() const {
    if (!pump_rate) {
        throw DomainError("pump_rate is neither given nor derived from laser_power/laser_wavelength");
    }
    return *pump_rate;
}

const char* to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::white: return "white";
        case NoiseKind::lorentzian: return "lorentzian";
        case NoiseKind::tabulated: return "tabulated";
    }
    return "none";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view text) {
    if (text == "none") return NoiseKind::none;
    if (text == "white") return NoiseKind::white;
    if (text == "lorentzian") return NoiseKind::lorentzian;
    if (text == "tabulated") return NoiseKind::tabulated;
    return std::nullopt;
}

const char* to_string(Frame frame) {
    return frame == Frame::lab ? "lab" : "displaced";
}

NoiseSpec NoiseSpec::white(double gamma_l) {
    NoiseSpec n;
    n.kind = NoiseKind::white;
    n.gamma_l = gamma_l;
    return n;
}

NoiseSpec NoiseSpec::lorentzian_spectrum(double total_strength, double center, double half_width) {
    NoiseSpec n;
    n.kind = NoiseKind::lorentzian;
    n.lorentzian = {total_strength, center, half_width};
    return n;
}

NoiseSpec NoiseSpec::tabulated(std::vector<SpectrumPoint> table) {
    NoiseSpec n;
    n.kind = NoiseKind::tabulated;
    n.table = std::move(table);
    return n;
}

double evaluate_spectrum(const NoiseSpec& noise, double omega) {
    const double w = std::abs(omega);
    switch (noise.kind) {
        case NoiseKind::none:
            return 0.0;
        case NoiseKind::white:
            return 2.0 * noise.gamma_l.value_or(0.0);
        case NoiseKind::lorentzian: {
            const auto& l = noise.lorentzian;
            if (l.total_strength == 0.0) return 0.0;
            const double hw2 = l.half_width * l.half_width;
            const double lo = w - l.center_frequency;
            const double hi = w + l.center_frequency;
            return l.total_strength * l.half_width * (1.0 / (lo * lo + hw2) + 1.0 / (hi * hi + hw2));
        }
        case NoiseKind::tabulated: {
            const auto& t = noise.table;
            if (t.empty()) return 0.0;
            if (w <= t.front().omega) return t.front().density;
            if (w >= t.back().omega) return t.back().density;
            auto it = std::upper_bound(t.begin(), t.end(), w,
                                       [](double x, const SpectrumPoint& p) { return x < p.omega; });
            const auto& right = *it;
            const auto& left = *(it - 1);
            const double f = (w - left.omega) / (right.omega - left.omega);
            return left.density + f * (right.density - left.density);
        }
    }
    return 0.0;
}

double damping_linewidth(const NoiseSpec& noise) {
    switch (noise.kind) {
        case NoiseKind::none:
            return noise.gamma_l.value_or(0.0);
        case NoiseKind::white:
            return noise.gamma_l.value_or(0.0);
        case NoiseKind::lorentzian:
        case NoiseKind::tabulated:
            return noise.gamma_l ? *noise.gamma_l : 0.5 * evaluate_spectrum(noise, 0.0);
    }
    return 0.0;
}

std::uint64_t SimConfig::steps() const {
    return static_cast<std::uint64_t>(std::llround(duration / dt));
}

std::uint64_t SimConfig::burn_in_steps() const {
    // Tolerate burn_in being an exact multiple of dt up to rounding.
    return static_cast<std::uint64_t>(std::ceil(burn_in / dt - 1e-9));
}

SimConfig default_sim_config(const SystemParams& params, const NoiseSpec& noise) {
    SimConfig cfg;
    const double kappa_eff = params.kappa + damping_linewidth(noise);
    const double fastest = std::max(kappa_eff, std::abs(params.delta));
    cfg.dt = fastest > 0.0 ? 0.01 / fastest : 1e-3;
    cfg.duration = params.kappa > 0.0 ? 100.0 / params.kappa : 1.0;
    cfg.burn_in = params.kappa > 0.0 ? 10.0 / params.kappa : 0.1;
    cfg.n_trajectories = 100;
    cfg.seed = 1;
    return cfg;
}

double pump_rate_from_power(double power, double wavelength, double kappa) {
    if (!(power > 0.0) || !(wavelength > 0.0) || !(kappa > 0.0)) {
        throw DomainError("pump_rate_from_power: power, wavelength and kappa must be > 0");
    }
    const double omega_l = 2.0 * std::numbers::pi * PhysicalConstants::c / wavelength;
    return std::sqrt(2.0 * kappa * power / (PhysicalConstants::hbar * omega_l));
}

std::string ValidationOutcome::describe() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << v.field << ": " << v.message << '\n';
    }
    return os.str();
}

std::vector<Violation> check_system(const SystemParams& p) {
    std::vector<Violation> out;
    if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) {
        out.push_back({"system.kappa", "must be finite and > 0, got " + num(p.kappa)});
    }
    if (!std::isfinite(p.delta)) {
        out.push_back({"system.delta", "must be finite"});
    }
    if (p.pump_rate && (!(*p.pump_rate >= 0.0) || !std::isfinite(*p.pump_rate))) {
        out.push_back({"system.pump_rate", "must be finite and >= 0, got " + num(*p.pump_rate)});
    }
    if (p.laser_power && !(*p.laser_power >= 0.0)) {
        out.push_back({"system.laser_power", "must be >= 0, got " + num(*p.laser_power)});
    }
    if (p.laser_wavelength && !(*p.laser_wavelength > 0.0)) {
        out.push_back({"system.laser_wavelength", "must be > 0, got " + num(*p.laser_wavelength)});
    }
    if (p.laser_power.has_value() != p.laser_wavelength.has_value()) {
        out.push_back({"system.laser_power", "laser_power and laser_wavelength must be given together"});
    }
    if (!p.pump_rate && !p.laser_power) {
        out.push_back({"system.pump_rate", "required unless laser_power and laser_wavelength are given"});
    }
    if (!p.pump_rate && p.laser_power && *p.laser_power == 0.0) {
        out.push_back({"system.laser_power", "must be > 0 to derive pump_rate"});
    }
    return out;
}

std::vector<Violation> check_noise(const NoiseSpec& n) {
    std::vector<Violation> out;
    if (n.gamma_l && (!(*n.gamma_l >= 0.0) || !std::isfinite(*n.gamma_l))) {
        out.push_back({"noise.gamma_l", "must be finite and >= 0, got " + num(*n.gamma_l)});
    }
    switch (n.kind) {
        case NoiseKind::none:
            break;
        case NoiseKind::white:
            if (!n.gamma_l) out.push_back({"noise.gamma_l", "required for kind = white"});
            break;
        case NoiseKind::lorentzian: {
            const auto& l = n.lorentzian;
            if (!(l.total_strength >= 0.0)) {
                out.push_back({"noise.total_strength", "must be >= 0, got " + num(l.total_strength)});
            }
            if (!(l.center_frequency >= 0.0)) {
                out.push_back({"noise.center_frequency", "must be >= 0, got " + num(l.center_frequency)});
            }
            if (!(l.half_width > 0.0)) {
                out.push_back({"noise.half_width", "must be > 0, got " + num(l.half_width)});
            }
            break;
        }
        case NoiseKind::tabulated: {
            if (n.table.empty()) {
                out.push_back({"noise.spectrum", "tabulated spectrum is empty"});
            }
            for (std::size_t i = 0; i < n.table.size(); ++i) {
                const auto& pt = n.table[i];
                if (!(pt.omega >= 0.0) || !std::isfinite(pt.omega)) {
                    out.push_back({"noise.spectrum", "row " + std::to_string(i) + ": omega must be >= 0"});
                }
                if (!(pt.density >= 0.0) || !std::isfinite(pt.density)) {
                    out.push_back({"noise.spectrum", "row " + std::to_string(i) + ": S must be >= 0"});
                }
                if (i > 0 && !(pt.omega > n.table[i - 1].omega)) {
                    out.push_back({"noise.spectrum",
                                   "row " + std::to_string(i) + ": omega grid must be strictly increasing"});
                }
            }
            break;
        }
    }
    return out;
}

namespace {

ValidationOutcome finish(const SystemParams& params, const NoiseSpec& noise, const SimConfig& cfg,
                         std::vector<Violation> violations, std::vector<std::string> warnings) {
    ValidationOutcome res;
    if (violations.empty()) {
        Bundle b{params, noise, cfg};
        if (params.laser_power && params.laser_wavelength && *params.laser_power > 0.0) {
            const double derived = pump_rate_from_power(*params.laser_power, *params.laser_wavelength, params.kappa);
            if (!params.pump_rate) {
                b.system.pump_rate = derived;
            } else if (std::abs(*params.pump_rate - derived) > 1e-12 * derived) {
                violations.push_back({"system.pump_rate", "given " + num(*params.pump_rate) +
                                                              " disagrees with value derived from laser power " +
                                                              num(derived)});
            }
        }
        if (violations.empty()) res.bundle = std::move(b);
    }
    res.violations = std::move(violations);
    res.warnings = std::move(warnings);
    return res;
}

}  // namespace

ValidationOutcome validate(const SystemParams& params, const NoiseSpec& noise) {
    auto v = check_system(params);
    auto nv = check_noise(noise);
    v.insert(v.end(), nv.begin(), nv.end());
    SimConfig cfg = v.empty() ? default_sim_config(params, noise) : SimConfig{};
    return finish(params, noise, cfg, std::move(v), {});
}

ValidationOutcome validate(const SystemParams& params, const NoiseSpec& noise, const SimConfig& cfg) {
    auto v = check_system(params);
    auto nv = check_noise(noise);
    v.insert(v.end(), nv.begin(), nv.end());
    std::vector<std::string> warnings;

    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
        v.push_back({"sim.dt", "must be > 0, got " + num(cfg.dt)});
    }
    if (!(cfg.duration > 0.0) || !std::isfinite(cfg.duration)) {
        v.push_back({"sim.duration", "must be > 0, got " + num(cfg.duration)});
    }
    if (!(cfg.burn_in >= 0.0) || !(cfg.burn_in < cfg.duration)) {
        v.push_back({"sim.burn_in", "must satisfy 0 <= burn_in < duration, got " + num(cfg.burn_in)});
    }
    if (cfg.n_trajectories < 1) {
        v.push_back({"sim.n_trajectories", "must be >= 1"});
    }
    if (cfg.n_batches < 1) {
        v.push_back({"sim.n_batches", "must be >= 1"});
    }

    if (v.empty()) {
        const double kappa_eff = params.kappa + damping_linewidth(noise);
        const double rate = std::max(kappa_eff, std::abs(params.delta));
        const double guard = cfg.dt * rate;
        if (guard > 0.1 * (1.0 + 1e-12)) {
            v.push_back({"sim.dt", "dt*max(kappa+gamma_l, |delta|) = " + num(guard) + " exceeds 0.1"});
        }
        const auto kept = cfg.steps() - std::min(cfg.steps(), cfg.burn_in_steps());
        if (kept < cfg.n_batches) {
            v.push_back({"sim.duration", "only " + std::to_string(kept) + " samples after burn-in, need >= n_batches = " +
                                             std::to_string(cfg.n_batches)});
        }
        if (cfg.burn_in < 5.0 / params.kappa) {
            warnings.push_back("sim.burn_in = " + num(cfg.burn_in) + " is shorter than the recommended 5/kappa = " +
                               num(5.0 / params.kappa));
        }
    }
    return finish(params, noise, cfg, std::move(v), std::move(warnings));
}

}  // namespace phasenoise
