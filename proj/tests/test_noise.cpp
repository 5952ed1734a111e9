#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "phasenoise/noise.hpp"

using namespace phasenoise;

namespace {

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

std::vector<double> rates(const std::vector<double>& dphi, double dt) {
    std::vector<double> out(dphi.size());
    std::transform(dphi.begin(), dphi.end(), out.begin(), [dt](double x) { return x / dt; });
    return out;
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("vacuum increments") {
    RandomStream rng(5, 1);
    const double dt = 1e-3;
    const std::size_t n = 1000000;
    const auto w = gen_vacuum(n, dt, rng);
    double s = 0, s2 = 0;
    std::complex<double> unconj;
    for (auto z : w) {
        const double r = std::norm(z) / dt;
        s += r;
        s2 += r * r;
        unconj += z * z / dt;
    }
    const double m = s / n;
    const double se = std::sqrt((s2 / n - m * m) / n);
    CHECK(std::abs(m - 1.0) < 5.0 * se);
    // E[w^2] = 0; each term has E|z^2/dt|^2 = 2.
    CHECK(std::abs(unconj / static_cast<double>(n)) < 5.0 * std::sqrt(2.0 / n));

    RandomStream again(5, 1);
    CHECK(gen_vacuum(n, dt, again) == w);
    CHECK_THROWS_AS(gen_vacuum(0, dt, again), std::invalid_argument);
}

TEST_CASE("white phase increments") {
    RandomStream rng(9, 0);
    const double dt = 0.01;
    const auto still = gen_phase_white(1000, dt, 0.0, rng);
    CHECK(std::all_of(still.begin(), still.end(), [](double x) { return x == 0.0; }));
    const std::size_t n = 1000000;
    const auto d = gen_phase_white(n, dt, 1.0, rng);
    const double rate = variance(d) / dt;
    CHECK(std::abs(rate - 2.0) < 5.0 * 2.0 * std::sqrt(2.0 / n));
}

TEST_CASE("white phase rate has flat spectrum 2 gamma") {
    RandomStream rng(10, 0);
    const double dt = 1e-3, gamma = 2.0;
    const auto x = rates(gen_phase_white(1 << 18, dt, gamma, rng), dt);
    const auto psd = estimate_psd(x, dt, 1024, 0.5);
    CHECK(psd.segments == (x.size() - 1024) / 512 + 1);
    double avg = 0;
    int bad = 0;
    for (std::size_t j = 1; j + 1 < psd.density.size(); ++j) {
        avg += psd.density[j];
        // Overlapped Hann segments are nearly independent; allow a generous band per bin.
        if (std::abs(psd.density[j] - 2.0 * gamma) > 5.0 * psd.std_error[j]) ++bad;
    }
    avg /= static_cast<double>(psd.density.size() - 2);
    CHECK(bad <= 2);
    CHECK(avg == doctest::Approx(2.0 * gamma).epsilon(0.01));
    CHECK(psd.omega.back() == doctest::Approx(std::numbers::pi / dt));
}

TEST_CASE("welch estimator basics") {
    const double dt = 0.01, w0 = 2.0 * std::numbers::pi * 10.0;
    std::vector<double> x(8192);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 3.0 * std::cos(w0 * static_cast<double>(k) * dt);
    const auto psd = estimate_psd(x, dt, 1000, 0.5);
    const double bin = 2.0 * std::numbers::pi / (1000 * dt);
    CHECK(std::abs(psd.omega[argmax(psd.density)] - w0) <= bin);

    const std::vector<double> zero(4096, 0.0);
    const auto z = estimate_psd(zero, dt, 512, 0.25);
    CHECK(std::all_of(z.density.begin(), z.density.end(), [](double v) { return v == 0.0; }));

    CHECK_THROWS_AS(estimate_psd(zero, dt, 8192, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(estimate_psd(zero, dt, 512, 1.0), std::invalid_argument);
}

TEST_CASE("lorentzian filter spectrum") {
    const double dt = 0.01, p = 4.0, w0 = 60.0, width = 2.0;
    const auto noise = NoiseSpec::lorentzian_spectrum(p, w0, width);
    RandomStream rng(77, 0);
    const std::size_t n = 1 << 19;
    const auto x = rates(gen_phase_colored(n, dt, noise, rng), dt);
    const auto psd = estimate_psd(x, dt, 4096, 0.5);
    const double bin = 2.0 * std::numbers::pi / (4096 * dt);
    // The top is flat to within a few percent across one half-width.
    CHECK(std::abs(psd.omega[argmax(psd.density)] - w0) <= width);
    // Power of the step-averaged rate: P times the sinc^2 filter at the peak.
    const double sinc = std::sin(0.5 * w0 * dt) / (0.5 * w0 * dt);
    CHECK(variance(x) == doctest::Approx(p * sinc * sinc).epsilon(0.03));
    // Shape near the peak against the closed form.
    for (double w : {w0 - width, w0, w0 + width}) {
        const auto j = static_cast<std::size_t>(std::lround(w / bin));
        const double expect = oracle::lorentzian_density(psd.omega[j], p, w0, width) * sinc * sinc;
        CHECK(psd.density[j] == doctest::Approx(expect).epsilon(0.2));
    }

    // Stationary from the first step.
    LorentzianPhaseFilter f(noise.lorentzian, dt);
    double s2 = 0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
        RandomStream r(1, static_cast<std::uint64_t>(i));
        f.reset(r);
        s2 += std::real(f.state()) * std::real(f.state());
    }
    CHECK(s2 / reps == doctest::Approx(p).epsilon(0.05));
}

TEST_CASE("tabulated synthesis") {
    const double dt = 0.01, gamma = 0.5;
    const std::size_t n = 1 << 17;
    const auto flat = NoiseSpec::tabulated({{0.0, 2.0 * gamma}, {1000.0, 2.0 * gamma}});
    RandomStream rng(3, 0);
    const auto d = gen_phase_colored(n, dt, flat, rng);
    const double rate = variance(d) / dt;
    CHECK(std::abs(rate - 2.0 * gamma) < 5.0 * 2.0 * gamma * std::sqrt(2.0 / n));

    const auto zero = NoiseSpec::tabulated({{0.0, 0.0}, {1000.0, 0.0}});
    const auto z = gen_phase_colored(4096, dt, zero, rng);
    CHECK(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
    const auto zl = gen_phase_colored(4096, dt, NoiseSpec::lorentzian_spectrum(0.0, 1.0, 1.0), rng);
    CHECK(std::all_of(zl.begin(), zl.end(), [](double v) { return v == 0.0; }));

    // Band-limited table: synthesized spectrum follows it.
    std::vector<SpectrumPoint> table;
    for (int i = 0; i <= 400; ++i) {
        const double w = i * 1.0;
        table.push_back({w, 1.0 + 4.0 * std::exp(-(w - 150.0) * (w - 150.0) / 200.0)});
    }
    const auto shaped = NoiseSpec::tabulated(table);
    const auto x = rates(gen_phase_colored(n, dt, shaped, rng), dt);
    const auto psd = estimate_psd(x, dt, 2048, 0.5);
    for (double w : {50.0, 150.0, 250.0}) {
        const auto j = static_cast<std::size_t>(std::lround(w / (2.0 * std::numbers::pi / (2048 * dt))));
        const double ratio = psd.density[j] / evaluate_spectrum(shaped, psd.omega[j]);
        CHECK(ratio == doctest::Approx(1.0).epsilon(0.2));
    }

    const auto narrow = NoiseSpec::tabulated({{1.0, 1.0}, {10.0, 1.0}});
    try {
        gen_phase_colored(n, dt, narrow, rng);
        FAIL("expected a coverage error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("band") != std::string::npos);
    }
}

TEST_CASE("spectrum csv") {
    std::istringstream in("omega_rad_per_s,S\n0,1.5\n10,2.5\n\n20,3\n");
    const auto t = read_spectrum_csv(in);
    REQUIRE(t.size() == 3);
    CHECK(t[1].omega == 10.0);
    CHECK(t[1].density == 2.5);

    std::istringstream bad("omega,S\n0,1\n1,x\n");
    try {
        read_spectrum_csv(bad);
        FAIL("expected a parse error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    PsdEstimate psd;
    psd.omega = {0.0, 0.1};
    psd.density = {1.0 / 3.0, 2.0};
    psd.std_error = {0.0, 0.0};
    std::ostringstream out;
    write_spectrum_csv(out, psd);
    std::istringstream back(out.str());
    const auto r = read_spectrum_csv(back);
    REQUIRE(r.size() == 2);
    CHECK(r[0].density == 1.0 / 3.0);
    CHECK(r[1].omega == 0.1);
}
