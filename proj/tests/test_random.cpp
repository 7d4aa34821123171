#include "orbitkernel/random.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace orbitkernel;

// Reference blocks from numpy's Philox (4x64, 10 rounds).
TEST_CASE("philox4x64 known answers")
{
    CHECK(philox4x64({1, 0, 0, 0}, {0, 0})
          == PhiloxCounter{0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
                           0x907d7a052fd5b4dcULL});
    CHECK(philox4x64({2, 0, 0, 0}, {0, 0})
          == PhiloxCounter{0x809bf322883987c3ULL, 0x471128b9e807f7ddULL, 0xf250ba0dbec065b7ULL,
                           0xfc6ed66767a457bcULL});
    CHECK(philox4x64({0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL, 0x452821e638d01377ULL,
                      0xbe5466cf34e90c6cULL},
                     {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL})
          == PhiloxCounter{0xfa09f4b6bf8ef8b6ULL, 0xf97c5ca6aa476cefULL, 0xd9e79e84b97a5616ULL,
                           0x42df281adc0d1bf8ULL});
    CHECK(philox4x64({0, 1, 0, 0}, {7, 11})
          == PhiloxCounter{0x08b0bbbf18af09ffULL, 0xe49dd7afab409ab0ULL, 0x75cb92967510fc60ULL,
                           0xc99df515ba533a5bULL});
}

TEST_CASE("same key reproduces, different keys differ")
{
    NoiseStream a(42, 3);
    NoiseStream b(42, 3);
    NoiseStream c(42, 4);
    NoiseStream d(43, 3);
    int same_c = 0;
    int same_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const double va = a.next_normal();
        CHECK(va == b.next_normal());
        same_c += va == c.next_normal();
        same_d += va == d.next_normal();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
}

TEST_CASE("seek returns to an earlier block")
{
    NoiseStream a(9, 1);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 12; ++i) first.push_back(a.next_u64());
    a.seek(1);
    for (int i = 4; i < 12; ++i) CHECK(a.next_u64() == first[i]);
}

TEST_CASE("uniforms are open-interval and normals have unit moments")
{
    NoiseStream s(1, 0);
    const int n = 400000;
    double sum = 0.0;
    double sum2 = 0.0;
    double sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        const double z = s.next_normal();
        sum += z;
        sum2 += z * z;
        sum4 += z * z * z * z;
    }
    // standard errors: 1/√n, √(2/n), √(96/n)
    CHECK(std::abs(sum / n) < 3.0 / std::sqrt(n));
    CHECK(std::abs(sum2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sum4 / n - 3.0) < 3.0 * std::sqrt(96.0 / n));
}

TEST_CASE("adjacent streams are uncorrelated")
{
    const int n = 200000;
    double sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        NoiseStream a(5, static_cast<std::uint64_t>(i));
        NoiseStream b(5, static_cast<std::uint64_t>(i) + 1);
        sxy += a.next_normal() * b.next_normal();
    }
    CHECK(std::abs(sxy / n) < 3.0 / std::sqrt(n));
}
