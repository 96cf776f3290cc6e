// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <array>
#include <cstdint>

namespace tfd {

/// xoshiro256** seeded through splitmix64. Same seed, same stream on every
/// platform; Gaussian draws use Box-Muller over the uniform stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double gaussian();

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `index` under `master`; used for per-image generators.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace tfd
