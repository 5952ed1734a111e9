#pragma once

// Counter-based random streams.
//
// Philox4x32-10 (Salmon et al., SC'11) keyed by the 64-bit seed. The 128-bit
// counter is split into a 64-bit block index and a 64-bit stream id, so any
// (seed, stream) pair owns an independent, reproducible sequence and streams
// can be handed to different threads without coordination.

#include <array>
#include <complex>
#include <cstdint>
#include <string_view>

namespace phasenoise {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxBlock philox4x32_10(PhiloxBlock counter, PhiloxKey key);

class RandomStream {
public:
    static constexpr std::string_view algorithm = "philox4x32-10";

    RandomStream(std::uint64_t seed, std::uint64_t stream);

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal (Box-Muller).
    double normal();
    /// Circular complex Gaussian with E|z|^2 = 1.
    std::complex<double> complex_normal();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint32_t next_word();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxBlock buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Channels within one trajectory. Stream id = trajectory * 16 + channel.
enum class NoiseChannel : std::uint64_t { phase = 0, vacuum_a = 1, vacuum_b = 2 };

constexpr std::uint64_t stream_id(std::uint64_t trajectory, NoiseChannel channel) {
    return trajectory * 16 + static_cast<std::uint64_t>(channel);
}

}  // namespace phasenoise
