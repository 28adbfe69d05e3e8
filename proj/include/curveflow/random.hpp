#pragma once

#include <cstdint>

namespace curveflow {

/// Counter-based generator: output k of stream s is a pure hash of (seed, s, k).
/// Streams derived with split() never share state, so generators can be
/// created per purpose (or per index) without any global RNG.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform in (0, 1).
    double uniform_open();
    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();
    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream); }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace curveflow
