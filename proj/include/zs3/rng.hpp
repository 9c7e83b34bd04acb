#pragma once

#include <cstdint>
#include <string_view>

namespace zs3 {

/// Counter-based deterministic random stream. The same seed yields the same
/// draw sequence on every platform; copies continue independently from the
/// point of the copy.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    /// Derives an independent stream from a root seed and a stream name.
    static RngStream named(std::uint64_t root_seed, std::string_view name);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();

    /// Uniform integer in [0, n), rejection-sampled. n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    /// Standard normal via Box-Muller; the paired draw is cached.
    double gaussian();

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace zs3
