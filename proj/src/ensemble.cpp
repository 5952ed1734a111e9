#include "phasenoise/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <thread>

#include "phasenoise/analytic.hpp"
#include "phasenoise/langevin.hpp"

namespace phasenoise {

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::displaced: return "displaced";
        case Mode::lab: return "lab";
        case Mode::twin: return "twin";
        case Mode::two_cavity_lab: return "two-cavity";
    }
    return "displaced";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "displaced") return Mode::displaced;
    if (text == "lab") return Mode::lab;
    if (text == "twin") return Mode::twin;
    if (text == "two-cavity" || text == "two_cavity" || text == "two_cavity_lab") return Mode::two_cavity_lab;
    return std::nullopt;
}

MomentStats summarize(const std::vector<BatchSums>& batches, double vacuum_offset, std::size_t group) {
    MomentStats s;
    std::complex<double> total_a;
    double total_norm = 0.0;
    std::uint64_t total = 0;
    for (const auto& b : batches) {
        total_a += b.sum_a;
        total_norm += b.sum_norm;
        total += b.count;
    }
    if (total == 0) return s;
    const double n = static_cast<double>(total);
    s.mean = total_a / n;
    s.second_moment = total_norm / n;
    s.occupation = s.second_moment - std::norm(s.mean) - vacuum_offset;

    const double k = static_cast<double>(batches.size());
    if (batches.size() < 2) {
        const double inf = std::numeric_limits<double>::infinity();
        s.mean_stderr = s.second_moment_stderr = s.occupation_stderr = inf;
        return s;
    }
    // Deviations of each batch from the pooled estimates.
    std::vector<std::complex<double>> dm(batches.size());
    std::vector<double> d2(batches.size()), dy(batches.size());
    const double occ_center = s.second_moment - std::norm(s.mean);
    for (std::size_t i = 0; i < batches.size(); ++i) {
        const auto& b = batches[i];
        const double c = static_cast<double>(b.count);
        const std::complex<double> m = b.sum_a / c;
        const double m2 = b.sum_norm / c;
        // Sample mean of |a - <a>|^2 within the batch.
        const double y = m2 - 2.0 * std::real(std::conj(s.mean) * m) + std::norm(s.mean);
        dm[i] = m - s.mean;
        d2[i] = m2 - s.second_moment;
        dy[i] = y - occ_center;
    }
    // Adjacent batches of one trajectory overlap in correlation time; add
    // their lag-1 covariance, never letting it shrink the error bar.
    auto variance = [&](auto&& prod) {
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            v0 += prod(i, i);
            if (group > 1 && (i + 1) % group != 0 && i + 1 < batches.size()) v1 += prod(i, i + 1);
        }
        return std::max(v0, v0 + 2.0 * v1);
    };
    const double var_mean = variance([&](std::size_t i, std::size_t j) { return std::real(std::conj(dm[i]) * dm[j]); });
    const double var_m2 = variance([&](std::size_t i, std::size_t j) { return d2[i] * d2[j]; });
    const double var_occ = variance([&](std::size_t i, std::size_t j) { return dy[i] * dy[j]; });
    s.mean_stderr = std::sqrt(var_mean / (k - 1.0) / k);
    s.second_moment_stderr = std::sqrt(var_m2 / (k - 1.0) / k);
    s.occupation_stderr = std::sqrt(var_occ / (k - 1.0) / k);
    return s;
}

TrajectoryNoise draw_noise(const Bundle& bundle, Mode mode, std::uint64_t index) {
    const auto& cfg = bundle.sim;
    const std::size_t steps = cfg.steps();
    TrajectoryNoise out;
    out.path.dt = cfg.dt;
    RandomStream phase_rng(cfg.seed, stream_id(index, NoiseChannel::phase));
    out.path.phase_increments = gen_phase(steps, cfg.dt, bundle.noise, phase_rng);
    if (cfg.vacuum_noise) {
        RandomStream vac_rng(cfg.seed, stream_id(index, NoiseChannel::vacuum_a));
        out.path.vacuum_increments = gen_vacuum(steps, cfg.dt, vac_rng);
        if (mode == Mode::two_cavity_lab) {
            RandomStream vac_b(cfg.seed, stream_id(index, NoiseChannel::vacuum_b));
            out.vacuum_b = gen_vacuum(steps, cfg.dt, vac_b);
        }
    } else {
        out.path.vacuum_increments.assign(steps, {});
        if (mode == Mode::two_cavity_lab) out.vacuum_b.assign(steps, {});
    }
    return out;
}

namespace {

class BatchRecorder {
public:
    BatchRecorder(std::size_t channels, std::uint64_t steps, std::uint64_t burn_in, std::uint64_t n_batches)
        : burn_in_(burn_in), kept_(steps - std::min(steps, burn_in)), n_batches_(n_batches),
          batches_(channels, std::vector<BatchSums>(n_batches)) {}

    void record(std::uint64_t step, std::size_t channel, std::complex<double> a) {
        if (step < burn_in_) return;
        const std::uint64_t k = (step - burn_in_) * n_batches_ / kept_;
        batches_[channel][k].add(a);
    }

    std::vector<std::vector<BatchSums>> take() { return std::move(batches_); }

private:
    std::uint64_t burn_in_;
    std::uint64_t kept_;
    std::uint64_t n_batches_;
    std::vector<std::vector<BatchSums>> batches_;
};

bool diverged(std::complex<double> a, double guard) {
    return !std::isfinite(a.real()) || !std::isfinite(a.imag()) || std::abs(a) > guard;
}

}  // namespace

TrajectoryResult run_trajectory(const Bundle& bundle, Mode mode, const TrajectoryNoise& noise, Trajectory* store) {
    const auto& cfg = bundle.sim;
    const auto& params = bundle.system;
    const std::uint64_t steps = noise.path.steps();
    const double dt = noise.path.dt;
    const double gamma = damping_linewidth(bundle.noise);
    const auto alpha = mean_amplitude(params, gamma);
    const double guard = 1e6 * std::max(std::abs(alpha), 1.0);
    const std::size_t channels = mode == Mode::two_cavity_lab ? 4 : 1;

    BatchRecorder rec(channels, steps, cfg.burn_in_steps(), cfg.n_batches);
    TrajectoryResult res;
    if (store) {
        store->dt = dt;
        store->mode = mode;
        store->times.resize(steps);
        store->a.resize(steps);
        if (mode == Mode::two_cavity_lab) store->b.resize(steps);
        for (std::uint64_t k = 0; k < steps; ++k) store->times[k] = static_cast<double>(k + 1) * dt;
    }

    const auto& dphi = noise.path.phase_increments;
    const auto& wa = noise.path.vacuum_increments;
    auto fail = [&](std::uint64_t k) {
        res.diverged = true;
        res.diagnostic = std::string("amplitude diverged at step ") + std::to_string(k) + " (t = " +
                         std::to_string(static_cast<double>(k + 1) * dt) + " s)";
        return res;
    };

    switch (mode) {
        case Mode::displaced: {
            const DisplacedStepper stepper(params, gamma, dt);
            std::complex<double> a{};
            for (std::uint64_t k = 0; k < steps; ++k) {
                a = stepper.step(a, dphi[k], wa[k]);
                if (diverged(a, guard)) return fail(k);
                rec.record(k, 0, a);
                if (store) store->a[k] = a;
            }
            break;
        }
        case Mode::twin: {
            const TwinStepper stepper(params, gamma, dt);
            std::complex<double> a{};
            for (std::uint64_t k = 0; k < steps; ++k) {
                a = stepper.step(a, dphi[k], wa[k]);
                if (diverged(a, guard)) return fail(k);
                rec.record(k, 0, a);
                if (store) store->a[k] = a;
            }
            break;
        }
        case Mode::lab: {
            const LabStepper stepper(params, dt);
            LabState s{alpha, 0.0};
            for (std::uint64_t k = 0; k < steps; ++k) {
                s = stepper.step(s, dphi[k], wa[k]);
                if (diverged(s.a, guard)) return fail(k);
                rec.record(k, 0, LabStepper::co_rotating(s));
                if (store) store->a[k] = s.a;
            }
            break;
        }
        case Mode::two_cavity_lab: {
            const LabStepper stepper(params, dt);
            const auto& wb = noise.vacuum_b;
            LabState sa{alpha, 0.0};
            LabState sb{alpha, 0.0};
            const double r = std::numbers::sqrt2 / 2.0;
            for (std::uint64_t k = 0; k < steps; ++k) {
                sa = stepper.step(sa, dphi[k], wa[k]);
                sb = stepper.step(sb, dphi[k], wb[k]);
                if (diverged(sa.a, guard) || diverged(sb.a, guard)) return fail(k);
                const auto a = LabStepper::co_rotating(sa);
                const auto b = LabStepper::co_rotating(sb);
                rec.record(k, 0, a);
                rec.record(k, 1, b);
                rec.record(k, 2, r * (a + b));
                rec.record(k, 3, r * (a - b));
                if (store) {
                    store->a[k] = sa.a;
                    store->b[k] = sb.a;
                }
            }
            break;
        }
    }
    res.batches = rec.take();
    return res;
}

EnsembleStats combine(Mode mode, const std::vector<TrajectoryResult>& results, double vacuum_offset) {
    EnsembleStats stats;
    stats.mode = mode;
    stats.vacuum_offset = vacuum_offset;
    const std::size_t channels = mode == Mode::two_cavity_lab ? 4 : 1;
    std::vector<std::vector<BatchSums>> pooled(channels);
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (r.diverged) {
            ++stats.divergent;
            stats.diagnostics.push_back("trajectory " + std::to_string(i) + ": " + r.diagnostic);
            continue;
        }
        ++stats.trajectories;
        for (std::size_t c = 0; c < channels; ++c) {
            pooled[c].insert(pooled[c].end(), r.batches[c].begin(), r.batches[c].end());
        }
    }
    std::size_t group = 0;
    for (const auto& r : results) {
        if (!r.diverged) group = r.batches[0].size();
    }
    stats.a = summarize(pooled[0], vacuum_offset, group);
    if (mode == Mode::two_cavity_lab) {
        stats.b = summarize(pooled[1], vacuum_offset, group);
        stats.sum = summarize(pooled[2], vacuum_offset, group);
        stats.diff = summarize(pooled[3], vacuum_offset, group);
    }
    return stats;
}

unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PHASENOISE_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

EnsembleResult run_ensemble(const Bundle& bundle, Mode mode, const EnsembleOptions& options) {
    const std::uint64_t n = bundle.sim.n_trajectories;
    std::vector<TrajectoryResult> results(n);
    EnsembleResult out;
    out.stored.resize(std::min(options.store_trajectories, n));

    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t i = next++; i < n; i = next++) {
            const auto noise = draw_noise(bundle, mode, i);
            Trajectory* store = i < out.stored.size() ? &out.stored[i] : nullptr;
            results[i] = run_trajectory(bundle, mode, noise, store);
        }
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(worker_count(options.threads), n));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    out.stats = combine(mode, results, bundle.sim.vacuum_noise ? 0.5 : 0.0);
    if (out.stats.divergent * 100 > n) {
        std::string msg = std::to_string(out.stats.divergent) + " of " + std::to_string(n) +
                          " trajectories diverged (limit 1%)";
        if (!out.stats.diagnostics.empty()) msg += "; first: " + out.stats.diagnostics.front();
        throw NumericalError(msg);
    }
    return out;
}

}  // namespace phasenoise
