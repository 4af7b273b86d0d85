#include "nvmux/rng.hpp"

#include <cmath>
#include <numbers>

namespace nvmux::rng {

namespace {

constexpr std::uint32_t mult0 = 0xD2511F53u;
constexpr std::uint32_t mult1 = 0xCD9E8D57u;
constexpr std::uint32_t weyl0 = 0x9E3779B9u;
constexpr std::uint32_t weyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::uint64_t next_u64(Philox4x32& g) {
    const std::uint64_t hi = g();
    const std::uint64_t lo = g();
    return (hi << 32) | lo;
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t substream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, 0u, static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)} {}

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += weyl0;
            k[1] += weyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(mult0, c[0], hi0, lo0);
        mulhilo(mult1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

Philox4x32::result_type Philox4x32::operator()() {
    if (used_ == 4) {
        buffer_ = block(counter_, key_);
        if (++counter_[0] == 0) ++counter_[1];
        used_ = 0;
    }
    return buffer_[used_++];
}

double uniform_open(Philox4x32& g) {
    const std::uint64_t bits = next_u64(g) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double standard_normal(Philox4x32& g) {
    const double u1 = uniform_open(g);
    const double u2 = uniform_open(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t uniform_index(Philox4x32& g, std::uint64_t n) {
    // reject draws at or above the largest multiple of n
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = next_u64(g);
    } while (v >= limit);
    return v % n;
}

}  // namespace nvmux::rng
