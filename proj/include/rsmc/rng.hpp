#pragma once

#include <array>
#include <cstdint>

namespace rsmc {

// Counter-based random stream (Philox 4x32-10, Salmon et al. 2011).
//
// A stream is fully determined by (master_seed, stream_index): the seed keys
// the cipher, the stream index occupies the high counter words and the block
// counter the low ones.  Streams are cheap value types; replaying a stream
// from the same pair reproduces the exact draw sequence, and distinct pairs
// give statistically independent sequences.  One stream per Monte Carlo
// sample keeps results independent of thread scheduling.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_; }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1).
    double uniform01();

    // Standard normal via Box-Muller (second variate cached).
    double normal();

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

// One application of the Philox 4x32-10 bijection (exposed for known-answer
// tests).
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

// SplitMix64 finalizer; used to derive per-sample stream indices.
std::uint64_t splitmix64(std::uint64_t x);

// Collapse (a, b, c) into a single well-mixed stream index.
std::uint64_t derive_stream_index(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace rsmc
