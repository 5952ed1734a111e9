#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phasenoise/core.hpp"
#include "phasenoise/noise.hpp"

namespace phasenoise {

enum class Mode { displaced, lab, twin, two_cavity_lab };

const char* to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

/// Running sums over one batch of samples.
struct BatchSums {
    std::complex<double> sum_a;
    double sum_norm = 0.0;
    std::uint64_t count = 0;

    void add(std::complex<double> a) {
        sum_a += a;
        sum_norm += std::norm(a);
        ++count;
    }
};

struct MomentStats {
    std::complex<double> mean;
    double mean_stderr = 0.0;
    double second_moment = 0.0;  // <|a|^2>
    double second_moment_stderr = 0.0;
    double occupation = 0.0;     // <|a - <a>|^2> - offset
    double occupation_stderr = 0.0;
};

/// Moments from batch sums. Batches come in runs of `group` per trajectory
/// (0: all independent); the error bars include the covariance of adjacent
/// batches within a run and assume longer-range correlations are negligible.
MomentStats summarize(const std::vector<BatchSums>& batches, double vacuum_offset, std::size_t group = 0);

/// Amplitude channels: a; for two-cavity runs also b, (a+b)/sqrt2, (a-b)/sqrt2.
enum class Channel { a = 0, b = 1, sum = 2, diff = 3 };

struct Trajectory {
    double dt = 0.0;
    Mode mode = Mode::displaced;
    std::vector<double> times;
    std::vector<std::complex<double>> a;
    std::vector<std::complex<double>> b;  // two-cavity runs only
};

struct TrajectoryNoise {
    NoisePath path;                                  // phase + vacuum for a
    std::vector<std::complex<double>> vacuum_b;      // two-cavity runs only
};

struct TrajectoryResult {
    bool diverged = false;
    std::string diagnostic;
    /// batches[channel][k]
    std::vector<std::vector<BatchSums>> batches;
};

/// Draws the noise of trajectory `index` from its own streams.
TrajectoryNoise draw_noise(const Bundle& bundle, Mode mode, std::uint64_t index);

/// Integrates one trajectory over the given noise. Lab and two-cavity modes
/// record the co-rotating amplitude a exp(i phi).
TrajectoryResult run_trajectory(const Bundle& bundle, Mode mode, const TrajectoryNoise& noise,
                                Trajectory* store = nullptr);

struct EnsembleStats {
    Mode mode = Mode::displaced;
    std::uint64_t trajectories = 0;  // contributing
    std::uint64_t divergent = 0;
    std::vector<std::string> diagnostics;
    double vacuum_offset = 0.5;
    MomentStats a;
    std::optional<MomentStats> b, sum, diff;
};

/// Pools trajectory results; divergent ones are excluded and counted.
EnsembleStats combine(Mode mode, const std::vector<TrajectoryResult>& results, double vacuum_offset);

struct EnsembleOptions {
    std::uint64_t store_trajectories = 0;
    unsigned threads = 0;  // 0: PHASENOISE_THREADS or hardware concurrency
};

struct EnsembleResult {
    EnsembleStats stats;
    std::vector<Trajectory> stored;
};

/// Runs bundle.sim.n_trajectories independent trajectories. Results are
/// independent of the thread count. Throws NumericalError when more than 1%
/// of trajectories diverge.
EnsembleResult run_ensemble(const Bundle& bundle, Mode mode, const EnsembleOptions& options = {});

unsigned worker_count(unsigned requested);

}  // namespace phasenoise
