#include <doctest.h>

#include <cmath>

#include "phasenoise/analytic.hpp"
#include "phasenoise/ensemble.hpp"
#include "phasenoise/langevin.hpp"

using namespace phasenoise;

namespace {

SystemParams sys(double kappa, double delta, double pump) {
    SystemParams p;
    p.kappa = kappa;
    p.delta = delta;
    p.pump_rate = pump;
    return p;
}

Bundle bundle(const SystemParams& p, const NoiseSpec& noise, std::uint64_t trajectories, double duration_over_kappa,
              double dt_factor = 0.02, std::uint64_t seed = 1) {
    auto cfg = default_sim_config(p, noise);
    cfg.dt = dt_factor / std::max(p.kappa + damping_linewidth(noise), std::abs(p.delta));
    cfg.duration = duration_over_kappa / p.kappa;
    cfg.n_trajectories = trajectories;
    cfg.seed = seed;
    const auto out = validate(p, noise, cfg);
    REQUIRE_MESSAGE(out.ok(), out.describe());
    return *out.bundle;
}

bool within(double got, double expect, double se, double k = 3.0) { return std::abs(got - expect) <= k * se; }

}  // namespace

TEST_CASE("noise gain") {
    CHECK(noise_gain(1.0, 1e-12) == doctest::Approx(1.0));
    CHECK(noise_gain(0.0, 0.1) == 1.0);
    CHECK(noise_gain(2.0, 0.5) == doctest::Approx(std::sqrt((1.0 - std::exp(-2.0)) / 2.0)));
}

TEST_CASE("noise-free decay") {
    const auto p = sys(1.0, 0.0, 0.0);
    const double dt = 1e-3;
    const DisplacedStepper s(p, 0.0, dt);
    std::complex<double> a = 1.0;
    for (int k = 0; k < 1000; ++k) a = s.step(a, 0.0, 0.0);
    CHECK(a.real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(a.imag() == doctest::Approx(0.0));

    // Detuned rotation composes exactly.
    const DisplacedStepper r(sys(1.0, 2.0, 0.0), 0.0, 0.5);
    std::complex<double> b = 1.0;
    for (int k = 0; k < 4; ++k) b = r.step(b, 0.0, 0.0);
    CHECK(std::abs(b - std::exp(std::complex<double>(-2.0, -4.0))) < 1e-14);
}

TEST_CASE("lab fixed point") {
    const auto p = sys(2.0, 3.0, 5.0);
    const LabStepper s(p, 0.01);
    const auto fp = p.pump() / std::complex<double>(2.0, 3.0);
    CHECK(std::abs(s.fixed_point() - fp) < 1e-14);
    LabState st{0.0, 0.0};
    for (int k = 0; k < 5000; ++k) st = s.step(st, 0.0, 0.0);
    CHECK(std::abs(st.a - fp) < 1e-12);
    const auto once = s.step(LabState{fp, 0.0}, 0.0, 0.0);
    CHECK(std::abs(once.a - fp) < 1e-14);
}

TEST_CASE("twin stepper reduces to displaced without the alpha term") {
    const auto p = sys(1.0, 0.7, 0.0);
    const DisplacedStepper d(p, 0.0, 0.01);
    const TwinStepper t(p, 0.0, 0.01);
    RandomStream rng(4, 1);
    std::complex<double> a = 0.3, b = 0.3;
    for (int k = 0; k < 1000; ++k) {
        const auto w = 0.1 * rng.complex_normal();
        a = d.step(a, 0.0, w);
        b = t.step(b, 0.0, w);
    }
    CHECK(a == b);
}

TEST_CASE("vacuum-only ensemble settles at one half") {
    const auto p = sys(1.0, 0.5, 0.0);
    const auto b = bundle(p, NoiseSpec::white(0.0), 64, 60.0, 0.05, 2);
    const auto r = run_ensemble(b, Mode::displaced);
    CHECK(within(r.stats.a.second_moment, 0.5, r.stats.a.second_moment_stderr));
    CHECK(within(r.stats.a.occupation, 0.0, r.stats.a.occupation_stderr));
}

TEST_CASE("error bars are calibrated across seeds") {
    const auto p = sys(1.0, 0.5, 0.0);
    double sum_z2 = 0.0;
    const int seeds = 40;
    for (int seed = 1; seed <= seeds; ++seed) {
        const auto r = run_ensemble(bundle(p, NoiseSpec::white(0.0), 32, 60.0, 0.05, seed), Mode::displaced);
        const double z = (r.stats.a.second_moment - 0.5) / r.stats.a.second_moment_stderr;
        sum_z2 += z * z;
    }
    const double rms = std::sqrt(sum_z2 / seeds);
    CHECK(rms > 0.75);
    CHECK(rms < 1.3);
}

TEST_CASE("phase-noise-only ensemble matches the analytic occupation") {
    // |alpha|^2 = 1e4, Gamma = 1e-3 kappa.
    const double kappa = 1.0, gamma = 1e-3;
    auto p = sys(kappa, 0.0, 100.0 * (kappa + gamma));
    const auto noise = NoiseSpec::white(gamma);
    auto b = bundle(p, noise, 64, 100.0, 0.05);
    b.sim.vacuum_noise = false;
    const auto r = run_ensemble(b, Mode::displaced);
    const double expect = phase_noise_occupation(p, noise);
    CHECK(expect == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(r.stats.vacuum_offset == 0.0);
    CHECK(within(r.stats.a.occupation, expect, r.stats.a.occupation_stderr));
}

TEST_CASE("lab frame: mean amplitude carries the linewidth shift") {
    const double kappa = 1.0, gamma = 0.05;
    const auto p = sys(kappa, 0.5, 30.0);
    const auto noise = NoiseSpec::white(gamma);
    const auto b = bundle(p, noise, 64, 80.0, 0.02);
    const auto r = run_ensemble(b, Mode::lab);
    const auto alpha = mean_amplitude(p, gamma);
    CHECK(within(r.stats.a.mean.real(), alpha.real(), r.stats.a.mean_stderr));
    CHECK(within(r.stats.a.mean.imag(), alpha.imag(), r.stats.a.mean_stderr));
    // Without the shift the mean would sit at E/(kappa + i delta), far outside the error bar.
    const auto bare = mean_amplitude(p, 0.0);
    CHECK(std::abs(r.stats.a.mean - bare) > 10.0 * r.stats.a.mean_stderr);
}

TEST_CASE("frames agree") {
    // Exact lab-frame heating is n Gamma / kappa; the displaced frame gives
    // n Gamma / kappa', so compare at Gamma << kappa.
    const double kappa = 1.0, gamma = 2e-3;
    const auto p = sys(kappa, 1.0, 40.0);
    const auto noise = NoiseSpec::white(gamma);
    const auto b = bundle(p, noise, 64, 100.0, 0.02);
    const auto lab = run_ensemble(b, Mode::lab).stats.a;
    const auto disp = run_ensemble(b, Mode::displaced).stats.a;
    const double se = std::hypot(lab.occupation_stderr, disp.occupation_stderr);
    CHECK(within(lab.occupation, disp.occupation, se));

    // E = 0, vacuum only: identical noise gives identical statistics.
    const auto p0 = sys(kappa, 1.0, 0.0);
    const auto b0 = bundle(p0, NoiseSpec::white(0.0), 8, 20.0);
    const auto l0 = run_ensemble(b0, Mode::lab).stats.a;
    const auto d0 = run_ensemble(b0, Mode::displaced).stats.a;
    CHECK(l0.occupation == doctest::Approx(d0.occupation).epsilon(1e-10));
    CHECK(l0.second_moment == doctest::Approx(d0.second_moment).epsilon(1e-10));
}

TEST_CASE("heating scales with alpha squared") {
    const double kappa = 1.0, gamma = 1e-2;
    const auto noise = NoiseSpec::white(gamma);
    auto b1 = bundle(sys(kappa, 0.3, 20.0), noise, 32, 60.0, 0.05);
    auto b2 = b1;
    b2.system.pump_rate = 40.0;
    b1.sim.vacuum_noise = b2.sim.vacuum_noise = false;
    const auto r1 = run_ensemble(b1, Mode::displaced).stats.a;
    const auto r2 = run_ensemble(b2, Mode::displaced).stats.a;
    // Common random numbers make the ratio exact up to rounding.
    CHECK(r2.occupation / r1.occupation == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("ensemble bookkeeping") {
    const auto p = sys(1.0, 0.2, 10.0);
    const auto noise = NoiseSpec::white(0.01);
    auto b = bundle(p, noise, 1, 30.0, 0.05, 99);

    // One trajectory equals a direct integration.
    const auto single = run_ensemble(b, Mode::displaced, {1, 1});
    const auto noise0 = draw_noise(b, Mode::displaced, 0);
    Trajectory t;
    const auto direct = run_trajectory(b, Mode::displaced, noise0, &t);
    REQUIRE(single.stored.size() == 1);
    CHECK(single.stored[0].a == t.a);
    CHECK(combine(Mode::displaced, {direct}, 0.5).a.occupation == single.stats.a.occupation);

    // Thread count does not change results.
    b.sim.n_trajectories = 24;
    const auto serial = run_ensemble(b, Mode::two_cavity_lab, {0, 1}).stats;
    const auto parallel = run_ensemble(b, Mode::two_cavity_lab, {0, 4}).stats;
    CHECK(serial.a.occupation == parallel.a.occupation);
    CHECK(serial.diff->occupation == parallel.diff->occupation);
    CHECK(serial.sum->mean == parallel.sum->mean);

    // Doubling the ensemble shrinks the error bar by sqrt 2.
    b.sim.n_trajectories = 64;
    b.sim.vacuum_noise = false;
    const auto small = run_ensemble(b, Mode::displaced).stats.a;
    b.sim.n_trajectories = 128;
    const auto large = run_ensemble(b, Mode::displaced).stats.a;
    CHECK(small.occupation_stderr / large.occupation_stderr == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("divergence is detected and excluded") {
    const auto p = sys(1.0, 0.0, 1.0);
    const auto b = bundle(p, NoiseSpec::white(0.01), 1, 20.0);
    auto bad = draw_noise(b, Mode::displaced, 0);
    bad.path.vacuum_increments[100] = {1e300, 0.0};
    const auto r = run_trajectory(b, Mode::displaced, bad);
    CHECK(r.diverged);
    CHECK(r.diagnostic.find("step 100") != std::string::npos);
    const auto good = run_trajectory(b, Mode::displaced, draw_noise(b, Mode::displaced, 1));
    const auto stats = combine(Mode::displaced, {good, r}, 0.5);
    CHECK(stats.divergent == 1);
    CHECK(stats.trajectories == 1);
    CHECK(stats.diagnostics.front().find("trajectory 1") != std::string::npos);
}

TEST_CASE("two cavities share the laser") {
    // Twin cancellation at |alpha|^2 = 1e4: the difference mode keeps at most
    // single / (|alpha|^2 / 10).
    const double kappa = 1.0, gamma = 1e-2;
    const auto p = sys(kappa, 0.5, 100.0 * std::abs(std::complex<double>(kappa + gamma, 0.5)));
    const auto noise = NoiseSpec::white(gamma);
    const auto b = bundle(p, noise, 32, 60.0, 0.05);
    const auto r = run_ensemble(b, Mode::two_cavity_lab).stats;
    REQUIRE(r.b.has_value());
    REQUIRE(r.sum.has_value());
    REQUIRE(r.diff.has_value());
    const double n = std::norm(mean_amplitude(p, gamma));
    CHECK(n == doctest::Approx(1e4).epsilon(1e-9));
    const double single = r.a.occupation;
    CHECK(std::abs(r.diff->occupation) + 3.0 * r.diff->occupation_stderr <= single / (n / 10.0));

    const auto twin = run_ensemble(b, Mode::twin).stats.a;
    CHECK(std::abs(twin.occupation) + 3.0 * twin.occupation_stderr <= single / (n / 10.0));

    // Mode names round-trip.
    for (auto m : {Mode::displaced, Mode::lab, Mode::twin, Mode::two_cavity_lab}) CHECK(parse_mode(to_string(m)) == m);
}

TEST_CASE("resonance: heating peaks where the spectrum sits") {
    const double kappa = 1.0, w0 = 8.0;
    const auto noise = NoiseSpec::lorentzian_spectrum(1e-3, w0, 0.3);
    std::vector<double> deltas{5.0, 6.5, 8.0, 9.5, 11.0};
    std::vector<double> heat;
    for (double d : deltas) {
        auto p = sys(kappa, d, 0.0);
        p.pump_rate = 30.0 * std::abs(std::complex<double>(kappa + damping_linewidth(noise), d));
        auto b = bundle(p, noise, 16, 40.0, 0.05);
        b.sim.vacuum_noise = false;
        heat.push_back(run_ensemble(b, Mode::displaced).stats.a.occupation);
    }
    const auto peak = std::max_element(heat.begin(), heat.end()) - heat.begin();
    CHECK(deltas[static_cast<std::size_t>(peak)] == w0);
}
