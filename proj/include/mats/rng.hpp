#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mats {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3", SC'11).
///
/// A generator is identified by a 64-bit key and a 64-bit stream id; the
/// remaining 64 counter bits enumerate blocks within the stream. Two
/// generators with distinct (key, stream) never share output, so every
/// bootstrap replicate or simulation replication can own a stream derived
/// from its index and run on any thread with identical results.
///
/// Satisfies std::uniform_random_bit_generator with 64-bit output.
class Philox {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox(std::uint64_t key, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Advance by `blocks` 128-bit blocks (two outputs each).
    void discard_blocks(std::uint64_t blocks) noexcept;

    /// Raw bijection: ten Philox rounds of `counter` under `key`.
    static Block encrypt(Block counter, Key key) noexcept;

private:
    void refill() noexcept;

    Block counter_{};
    Key key_{};
    Block out_{};
    int next_ = 4;
};

/// SplitMix64 finaliser; used to turn structured ids into well-mixed words.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hashes an ordered tuple of ids into one 64-bit stream id.
[[nodiscard]] std::uint64_t derive_stream(std::initializer_list<std::uint64_t> ids) noexcept;

/// Uniform double in the open interval (0, 1), 53-bit resolution.
[[nodiscard]] double uniform_open01(Philox& rng) noexcept;

}  // namespace mats
