#pragma once

// Counter-based random streams. Every shot owns an independent substream
// addressed by (master_seed, shot_index), so a draw never depends on which
// worker ran which shot or in what order.

#include <array>
#include <cmath>
#include <cstdint>

namespace sqhhg {

struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t shot_index = 0;
};

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block encrypt(Block ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Block single_round(const Block& c, const Key& k) noexcept
    {
        const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Sequential view of one Philox substream. The key is the master seed, the
/// upper counter half is the stream index, the lower half counts blocks.
class RandomStream {
public:
    explicit RandomStream(SeedSpec seed) noexcept
        : key_{static_cast<std::uint32_t>(seed.master_seed), static_cast<std::uint32_t>(seed.master_seed >> 32)},
          stream_(seed.shot_index)
    {}

    std::uint64_t next_u64() noexcept
    {
        if (cursor_ == 2) refill();
        return buffer_[cursor_++];
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double next_normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - next_uniform();  // (0, 1]
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Uniform integer in [0, n); n > 0.
    std::uint64_t next_below(std::uint64_t n) noexcept
    {
        // Lemire's multiply-shift; the residual bias is below 2^-64 * n.
        const unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(product >> 64);
    }

private:
    void refill() noexcept
    {
        const Philox4x32::Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const auto out = Philox4x32::encrypt(ctr, key_);
        buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
        buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
        ++block_;
        cursor_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int cursor_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sqhhg
