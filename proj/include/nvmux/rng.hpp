#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace nvmux::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The 64-bit
// seed is the key; the upper half of the counter selects a substream, the
// lower half counts blocks within it. Substreams of one seed are independent
// and can be consumed in any order or on any thread.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t substream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    // One bijective 10-round block.
    static Counter block(Counter counter, Key key);

private:
    Key key_;
    Counter counter_;
    Counter buffer_{};
    unsigned used_ = 4;
};

// 53-bit uniform in the open interval (0, 1).
double uniform_open(Philox4x32& g);

// Standard normal via the Box-Muller cosine branch.
double standard_normal(Philox4x32& g);

// Uniform integer in [0, n) by rejection, n > 0.
std::uint64_t uniform_index(Philox4x32& g, std::uint64_t n);

}  // namespace nvmux::rng
