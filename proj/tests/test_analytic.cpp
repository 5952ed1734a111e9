#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "phasenoise/analytic.hpp"

using namespace phasenoise;

namespace {

SystemParams sys(double kappa, double delta, double pump) {
    SystemParams p;
    p.kappa = kappa;
    p.delta = delta;
    p.pump_rate = pump;
    return p;
}

}  // namespace

TEST_CASE("mean amplitude") {
    const auto a = mean_amplitude(sys(1.0, 1.0, 1.0), 0.0);
    CHECK(a.real() == doctest::Approx(0.5));
    CHECK(a.imag() == doctest::Approx(-0.5));
    CHECK(std::norm(mean_amplitude(sys(1e7, 1e7, 1e13), 1e-9)) == doctest::Approx(5e11).epsilon(1e-12));
    CHECK(std::abs(mean_amplitude(sys(1.0, 1e12, 1.0), 0.0)) < 1e-11);
    // Linewidth enters the damping.
    CHECK(mean_amplitude(sys(1.0, 0.0, 3.0), 0.5).real() == doctest::Approx(2.0));
}

TEST_CASE("white phase-noise occupation") {
    CHECK(phase_noise_occupation_white(1e10, 1e7, 1e-3) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(phase_noise_occupation_white(1e10, 1e7, 0.0) == 0.0);
    CHECK(phase_noise_occupation_white(4.0, 2.0, 2.0) == 2.0);

    // Oracle: stationary variance of the displaced OU equation by direct
    // integration of its impulse response, n * 2 Gamma * int_0^inf e^{-2 k' t} dt.
    const double n = 1e4, kappa = 3.0, gamma = 0.2;
    const double kp = kappa + gamma;
    const double direct =
        n * 2.0 * gamma * oracle::simpson([&](double t) { return std::exp(-2.0 * kp * t); }, 0.0, 40.0 / kp, 20000);
    CHECK(phase_noise_occupation_white(n, kappa, gamma) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("colored occupation: white limit") {
    oracle::Gen gen(3);
    for (int i = 0; i < 25; ++i) {
        const double kappa = gen.log_uniform(1e-2, 1e7);
        const double gamma = kappa * gen.log_uniform(1e-8, 1.0);
        const double delta = kappa * gen.uniform(-20.0, 20.0);
        const double n = gen.log_uniform(1.0, 1e11);
        const double span = std::abs(delta) + 60.0 * (kappa + gamma);
        const auto flat = NoiseSpec::tabulated({{0.0, 2.0 * gamma}, {span, 2.0 * gamma}});
        const double expect = phase_noise_occupation_white(n, kappa, gamma);
        CHECK(phase_noise_occupation_colored(n, kappa, gamma, delta, flat) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("colored occupation: lorentzian closed form") {
    oracle::Gen gen(17);
    for (int i = 0; i < 40; ++i) {
        const double kappa = gen.log_uniform(1e-1, 1e7);
        const double width = kappa * gen.log_uniform(1e-3, 1e3);
        const double w0 = gen.coin() ? 0.0 : kappa * gen.log_uniform(1e-2, 1e3);
        const double delta = (gen.coin() ? w0 : 0.0) + kappa * gen.uniform(-10.0, 10.0);
        const double p = gen.log_uniform(1e-6, 1e6);
        const double n = gen.log_uniform(1.0, 1e12);
        const auto noise = NoiseSpec::lorentzian_spectrum(p, w0, width);
        const double gamma = damping_linewidth(noise);
        const double expect = oracle::lorentzian_occupation(n, kappa + gamma, delta, p, w0, width);
        INFO("kappa=" << kappa << " W=" << width << " w0=" << w0 << " delta=" << delta);
        CHECK(phase_noise_occupation_colored(n, kappa, gamma, delta, noise) ==
              doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("colored occupation: narrow spike") {
    // Weight q = int S dw/2pi concentrated at delta: n_add -> n q / kappa'^2.
    const double kappa = 1.0, delta = 5.0, n = 1e6, q = 1e-4;
    const double width = 1e-4;
    std::vector<SpectrumPoint> table;
    // Gaussian bump of area 2 pi q, sampled well inside the quadrature band.
    const double sigma = width;
    for (int i = -400; i <= 400; ++i) {
        const double w = delta + sigma * i * 0.02;
        table.push_back({w, q * std::sqrt(2.0 * std::numbers::pi) / sigma *
                                std::exp(-0.5 * (w - delta) * (w - delta) / (sigma * sigma))});
    }
    table.insert(table.begin(), {0.0, 0.0});
    table.push_back({delta + 100.0, 0.0});
    const auto noise = NoiseSpec::tabulated(table);
    const double got = phase_noise_occupation_colored(n, kappa, 0.0, delta, noise);
    // Dense fixed-grid oracle over the bump and its mirror image at -delta.
    auto f = [&](double w) {
        const double d = delta - w;
        return evaluate_spectrum(noise, w) / (kappa * kappa + d * d) / (2.0 * std::numbers::pi);
    };
    double dense = 0.0;
    for (double c : {delta, -delta}) dense += n * oracle::simpson(f, c - 10 * sigma, c + 10 * sigma, 200000);
    CHECK(got == doctest::Approx(dense).epsilon(1e-6));
    const double spike = n * q * (1.0 / (kappa * kappa) + 1.0 / (kappa * kappa + 4.0 * delta * delta));
    CHECK(got == doctest::Approx(spike).epsilon(1e-4));
}

TEST_CASE("colored occupation: errors") {
    const auto small = NoiseSpec::tabulated({{0.0, 1.0}, {10.0, 1.0}});
    CHECK_THROWS_AS(phase_noise_occupation_colored(1.0, 1.0, 0.0, 5.0, small), std::invalid_argument);
    const auto neg = NoiseSpec::tabulated({{0.0, 1.0}, {1000.0, -1.0}});
    CHECK_THROWS_AS(phase_noise_occupation_colored(1.0, 1.0, 0.0, 5.0, neg), std::invalid_argument);
    CHECK(phase_noise_occupation_colored(0.0, 1.0, 0.0, 5.0, NoiseSpec::lorentzian_spectrum(1, 1, 1)) == 0.0);
}

TEST_CASE("effective temperature") {
    CHECK(effective_temperature(1.0, 1e7) == doctest::Approx(7.6382e-5).epsilon(1e-4));
    CHECK(effective_temperature(0.0, 1e7) == 0.0);
    CHECK_THROWS_AS(effective_temperature(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(effective_temperature(1.0, -1.0), DomainError);
}

TEST_CASE("condition checks") {
    const auto p = sys(1e7, 1e7, 1e13);
    const auto c = check_conditions(p, NoiseSpec::white(1e-4), 1e11, 1.0);
    CHECK(c.max_gamma_l == doctest::Approx(1e-4));
    CHECK(c.max_gamma_l_condition_1 == doctest::Approx(1e7));
    CHECK(c.margin_1 == doctest::Approx(1e-11));
    CHECK(c.margin_2 == doctest::Approx(1.0));

    const auto one = check_conditions(p, NoiseSpec::white(5e4), 1.0);
    CHECK(one.margin_1 == doctest::Approx(one.margin_2));
    CHECK(one.pass_1 == one.pass_2);

    const auto zero = check_conditions(p, NoiseSpec::white(0.0), 1e11);
    CHECK(zero.margin_1 == 0.0);
    CHECK(zero.margin_2 == 0.0);
    CHECK(zero.pass_1);
    CHECK(zero.pass_2);

    // Colored: margin 2 uses S(delta) / 2 in place of Gamma_l.
    const auto lor = NoiseSpec::lorentzian_spectrum(1.0, 1e7, 1e3);
    const auto cc = check_conditions(p, lor, 1e10);
    CHECK(cc.margin_2 == doctest::Approx(1e10 * evaluate_spectrum(lor, 1e7) / 2e7));
    CHECK(cc.max_s_at_delta == doctest::Approx(2.0 * 0.01 * 1e7 / 1e10));
}

TEST_CASE("sqrt(T Gamma) figure") {
    CHECK(sqrt_T_gamma_figure(2.0, 3.0) == doctest::Approx(sqrt_T_gamma_figure(8.0, 0.75)));
    CHECK(sqrt_T_gamma_figure(2.0, 0.0) == 0.0);
    CHECK(sqrt_T_gamma_figure(1.0, 1.0) / sqrt_T_gamma_figure(1.0, 1e-5) == doctest::Approx(std::sqrt(1e5)));
}

TEST_CASE("steady-state report") {
    auto p = sys(1e7, 1e7, 1e13);
    const auto r = steady_state_report(p, NoiseSpec::white(1e-3), {1.0, 1.0});
    CHECK(r.n == doctest::Approx(5e11).epsilon(1e-9));
    CHECK(r.n_add == doctest::Approx(r.n * 1e-3 / (1e7 + 1e-3)));
    REQUIRE(r.t_eff.has_value());
    CHECK(*r.t_eff == doctest::Approx(effective_temperature(r.n_add, 1e7)));
    CHECK(r.conditions.max_gamma_l == doctest::Approx(2e-5).epsilon(1e-6));
    CHECK(r.max_tolerable_s_at_delta == doctest::Approx(2.0 * (1e7 + 1e-3) / r.n));

    p.pump_rate = 0.0;
    const auto z = steady_state_report(p, NoiseSpec::white(1e-3));
    CHECK(z.n == 0.0);
    CHECK(z.n_add == 0.0);
    CHECK(z.conditions.pass_1);
    CHECK(z.conditions.pass_2);

    p.pump_rate = 1e13;
    p.delta = -1e7;
    CHECK_FALSE(steady_state_report(p, NoiseSpec::white(1e-3)).t_eff.has_value());
}
