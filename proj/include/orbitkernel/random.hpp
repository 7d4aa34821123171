#pragma once
//
// Counter-based random numbers: Philox4x64 with 10 rounds.
//
// A NoiseStream is keyed by (seed, stream index); its counter enumerates
// 256-bit blocks. Distinct keys give independent sequences, equal keys give
// bit-identical ones, and no state is shared between streams.

#include <array>
#include <cstdint>
#include <span>

namespace orbitkernel {

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

/// One Philox4x64-10 block.
PhiloxCounter philox4x64(PhiloxCounter ctr, PhiloxKey key);

class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return key_[0]; }
    std::uint64_t stream() const { return key_[1]; }

    /// Next raw 64-bit word.
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double next_uniform();
    /// Standard normal by Box–Muller; normals are produced in pairs.
    double next_normal();
    void fill_normals(std::span<double> out);

    /// Position the stream at an absolute block index.
    void seek(std::uint64_t block);

private:
    void refill();

    PhiloxKey key_;
    std::uint64_t block_ = 0;
    PhiloxCounter buffer_{};
    int buffer_pos_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace orbitkernel
