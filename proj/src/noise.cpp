#include "phasenoise/noise.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "phasenoise/numfmt.hpp"

namespace phasenoise {

namespace {

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

using cplx = std::complex<double>;

// Sum_{k>=0} x^k/(k+1)!, i.e. (e^x - 1)/x, accurate for small |x|.
cplx expm1_over_x(cplx x) {
    if (std::abs(x) > 0.1) return (std::exp(x) - 1.0) / x;
    cplx term = 1.0, sum = 1.0;
    for (int k = 1; k < 14; ++k) {
        term *= x / static_cast<double>(k + 1);
        sum += term;
    }
    return sum;
}

}  // namespace

std::vector<cplx> gen_vacuum(std::size_t steps, double dt, RandomStream& rng) {
    if (steps < 1 || !(dt > 0.0)) throw std::invalid_argument("gen_vacuum: need steps >= 1 and dt > 0");
    std::vector<cplx> out(steps);
    const double scale = std::sqrt(dt);
    for (auto& w : out) w = scale * rng.complex_normal();
    return out;
}

std::vector<double> gen_phase_white(std::size_t steps, double dt, double gamma_l, RandomStream& rng) {
    if (!(gamma_l >= 0.0)) throw std::invalid_argument("gen_phase_white: gamma_l must be >= 0");
    std::vector<double> out(steps, 0.0);
    if (gamma_l == 0.0) return out;
    const double sd = std::sqrt(2.0 * gamma_l * dt);
    for (auto& d : out) d = sd * rng.normal();
    return out;
}

LorentzianPhaseFilter::LorentzianPhaseFilter(const LorentzianSpectrum& spectrum, double dt) {
    const double w = spectrum.half_width;
    const double h = dt;
    const cplx rho{-w, spectrum.center_frequency};
    const double sigma2 = 4.0 * w * spectrum.total_strength;

    decay_ = std::exp(rho * h);
    mean_gain_ = h * expm1_over_x(rho * h);
    stationary_sd_ = std::sqrt(spectrum.total_strength * 2.0);

    // Noise covariance of xi = z' - E[z'|z] and eta = I - E[I|z].
    const double c11 = sigma2 * (-std::expm1(-2.0 * w * h) / (2.0 * w));
    double c22 = 0.0;
    cplx c21 = 0.0;
    if (std::abs(rho) * h < 0.1) {
        // Power series in u for (e^{rho u}-1)/rho = sum_{k>=1} rho^{k-1} u^k / k!
        constexpr int order = 14;
        std::array<cplx, order + 1> c{};
        cplx fact = 1.0;
        for (int k = 1; k <= order; ++k) {
            fact /= static_cast<double>(k);
            c[k] = std::pow(rho, k - 1) * fact;
        }
        std::array<cplx, order + 1> e{};  // e^{conj(rho) u} coefficients
        cplx ef = 1.0;
        for (int m = 0; m <= order; ++m) {
            if (m > 0) ef *= std::conj(rho) / static_cast<double>(m);
            e[m] = ef;
        }
        for (int j = 1; j <= order; ++j) {
            for (int k = 1; k <= order; ++k) {
                c22 += std::real(c[j] * std::conj(c[k])) * std::pow(h, j + k + 1) / (j + k + 1);
            }
            for (int m = 0; m + j <= order + 1; ++m) {
                c21 += c[j] * e[m] * std::pow(h, j + m + 1) / static_cast<double>(j + m + 1);
            }
        }
        c22 *= sigma2;
        c21 *= sigma2;
    } else {
        const double a = -std::expm1(-2.0 * w * h) / (2.0 * w);
        const cplx g = (decay_ - 1.0) / rho;
        c22 = sigma2 / std::norm(rho) * (a - 2.0 * g.real() + h);
        c21 = sigma2 / rho * (a - std::conj(g));
    }

    l11_ = std::sqrt(std::max(c11, 0.0));
    l21_ = l11_ > 0.0 ? c21 / l11_ : cplx{};
    l22_ = std::sqrt(std::max(c22 - std::norm(l21_), 0.0));
}

void LorentzianPhaseFilter::reset(RandomStream& rng) {
    z_ = stationary_sd_ * rng.complex_normal();
}

double LorentzianPhaseFilter::next(RandomStream& rng) {
    const cplx g1 = rng.complex_normal();
    const cplx g2 = rng.complex_normal();
    const cplx xi = l11_ * g1;
    const cplx eta = l21_ * g1 + l22_ * g2;
    const double dphi = std::real(z_ * mean_gain_ + eta);
    z_ = decay_ * z_ + xi;
    return dphi;
}

namespace {

std::vector<double> synthesize_tabulated(std::size_t steps, double dt, const NoiseSpec& noise, RandomStream& rng) {
    const auto& table = noise.table;
    const double duration = static_cast<double>(steps) * dt;
    const double lo = 2.0 * std::numbers::pi / duration;
    const double hi = std::numbers::pi / dt;
    if (table.empty() || table.front().omega > lo * (1.0 + 1e-12) || table.back().omega < hi * (1.0 - 1e-12)) {
        std::ostringstream os;
        os.precision(6);
        os << "tabulated spectrum must cover the resolvable band [" << lo << ", " << hi << "] rad/s";
        if (!table.empty()) os << ", table spans [" << table.front().omega << ", " << table.back().omega << "]";
        throw std::invalid_argument(os.str());
    }

    // Circulant embedding on twice the requested length.
    const std::size_t m = 2 * steps;
    const std::size_t bins = m / 2 + 1;
    std::vector<cplx> spec(bins);
    std::vector<double> series(m);
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(m) * dt);
    for (std::size_t j = 0; j < bins; ++j) {
        const double amp = std::sqrt(evaluate_spectrum(noise, dw * static_cast<double>(j)) / (static_cast<double>(m) * dt));
        if (j == 0 || 2 * j == m) {
            spec[j] = amp * rng.normal();
        } else {
            spec[j] = amp * rng.complex_normal();
        }
    }

    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(spec.data()), series.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }

    std::vector<double> out(steps);
    for (std::size_t k = 0; k < steps; ++k) out[k] = series[k] * dt;
    return out;
}

}  // namespace

std::vector<double> gen_phase_colored(std::size_t steps, double dt, const NoiseSpec& noise, RandomStream& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("gen_phase_colored: dt must be > 0");
    switch (noise.kind) {
        case NoiseKind::lorentzian: {
            std::vector<double> out(steps, 0.0);
            if (noise.lorentzian.total_strength == 0.0) return out;
            LorentzianPhaseFilter filter(noise.lorentzian, dt);
            filter.reset(rng);
            for (auto& d : out) d = filter.next(rng);
            return out;
        }
        case NoiseKind::tabulated:
            return synthesize_tabulated(steps, dt, noise, rng);
        default:
            throw std::invalid_argument("gen_phase_colored: noise kind must be lorentzian or tabulated");
    }
}

std::vector<double> gen_phase(std::size_t steps, double dt, const NoiseSpec& noise, RandomStream& rng) {
    switch (noise.kind) {
        case NoiseKind::none:
            return std::vector<double>(steps, 0.0);
        case NoiseKind::white:
            return gen_phase_white(steps, dt, noise.gamma_l.value_or(0.0), rng);
        default:
            return gen_phase_colored(steps, dt, noise, rng);
    }
}

PsdEstimate estimate_psd(std::span<const double> samples, double dt, std::size_t segment_length,
                         double overlap_fraction) {
    if (segment_length < 2 || segment_length > samples.size()) {
        throw std::invalid_argument("estimate_psd: need 2 <= segment_length <= number of samples (" +
                                    std::to_string(samples.size()) + ")");
    }
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
        throw std::invalid_argument("estimate_psd: overlap must be in [0, 1)");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("estimate_psd: dt must be > 0");

    const std::size_t len = segment_length;
    const auto overlap = static_cast<std::size_t>(std::llround(overlap_fraction * static_cast<double>(len)));
    const std::size_t hop = std::max<std::size_t>(1, len - std::min(overlap, len - 1));
    const std::size_t segments = 1 + (samples.size() - len) / hop;
    const std::size_t bins = len / 2 + 1;

    std::vector<double> window(len);
    double window_power = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        window[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len)));
        window_power += window[k] * window[k];
    }

    std::vector<double> buf(len);
    std::vector<cplx> out(bins);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE);
    }

    PsdEstimate psd;
    psd.segments = segments;
    psd.omega.resize(bins);
    psd.density.assign(bins, 0.0);
    psd.std_error.resize(bins);
    for (std::size_t s = 0; s < segments; ++s) {
        const std::size_t off = s * hop;
        for (std::size_t k = 0; k < len; ++k) buf[k] = window[k] * samples[off + k];
        fftw_execute(plan);
        for (std::size_t j = 0; j < bins; ++j) psd.density[j] += std::norm(out[j]);
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }

    const double norm = dt / (window_power * static_cast<double>(segments));
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(len) * dt);
    for (std::size_t j = 0; j < bins; ++j) {
        psd.omega[j] = dw * static_cast<double>(j);
        psd.density[j] *= norm;
        psd.std_error[j] = psd.density[j] / std::sqrt(static_cast<double>(segments));
    }
    return psd;
}

std::vector<SpectrumPoint> read_spectrum_csv(std::istream& in) {
    std::vector<SpectrumPoint> table;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("spectrum CSV line " + std::to_string(lineno) + ": expected two columns");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        SpectrumPoint pt;
        if (!parse_double(trim(line.substr(0, comma)), pt.omega) ||
            !parse_double(trim(line.substr(comma + 1)), pt.density)) {
            throw std::invalid_argument("spectrum CSV line " + std::to_string(lineno) + ": not a number pair");
        }
        table.push_back(pt);
    }
    return table;
}

std::vector<SpectrumPoint> read_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spectrum file " + path);
    return read_spectrum_csv(in);
}

void write_spectrum_csv(std::ostream& out, const PsdEstimate& psd) {
    out << "omega_rad_per_s,S\n";
    for (std::size_t j = 0; j < psd.omega.size(); ++j) {
        out << format_double(psd.omega[j]) << ',' << format_double(psd.density[j]) << '\n';
    }
}

}  // namespace phasenoise
