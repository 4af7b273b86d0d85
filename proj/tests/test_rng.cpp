#include <doctest.h>

#include <cmath>
#include <set>

#include "nvmux/rng.hpp"

using nvmux::rng::Philox4x32;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    // Random123 kat_vectors, philox4x32 10 rounds
    CHECK(Philox4x32::block({0u, 0u, 0u, 0u}, {0u, 0u}) ==
          Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
    Philox4x32 a(42, 3);
    Philox4x32 b(42, 3);
    Philox4x32 c(42, 4);
    Philox4x32 d(43, 3);
    int same_c = 0;
    int same_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        CHECK(x == b());
        same_c += x == c();
        same_d += x == d();
    }
    CHECK(same_c < 3);
    CHECK(same_d < 3);
}

TEST_CASE("uniform and normal moments") {
    Philox4x32 g(2024, 0);
    const int n = 200000;
    double su = 0.0;
    double sn = 0.0;
    double sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = nvmux::rng::uniform_open(g);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = nvmux::rng::standard_normal(g);
        sn += z;
        sn2 += z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform_index covers its range") {
    Philox4x32 g(1, 1);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto k = nvmux::rng::uniform_index(g, 7);
        REQUIRE(k < 7);
        seen.insert(k);
    }
    CHECK(seen.size() == 7);
}
