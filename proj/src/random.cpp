#include "orbitkernel/random.hpp"

#include <cmath>

namespace orbitkernel {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo)
{
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

} // namespace

PhiloxCounter philox4x64(PhiloxCounter ctr, PhiloxKey key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

void NoiseStream::seek(std::uint64_t block)
{
    block_ = block;
    buffer_pos_ = 4;
    has_spare_ = false;
}

void NoiseStream::refill()
{
    buffer_ = philox4x64({block_, 0, 0, 0}, key_);
    ++block_;
    buffer_pos_ = 0;
}

std::uint64_t NoiseStream::next_u64()
{
    if (buffer_pos_ == 4) {
        refill();
    }
    return buffer_[buffer_pos_++];
}

double NoiseStream::next_uniform()
{
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseStream::next_normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586 * u2;
    spare_normal_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

void NoiseStream::fill_normals(std::span<double> out)
{
    for (double& v : out) {
        v = next_normal();
    }
}

} // namespace orbitkernel
