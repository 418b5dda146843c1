#include "mats/rng.hpp"

namespace mats {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr int kRounds = 10;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

Philox::Philox(std::uint64_t key, std::uint64_t stream) noexcept {
    key_ = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    counter_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

Philox::Block Philox::encrypt(Block ctr, Key key) noexcept {
    for (int r = 0; r < kRounds; ++r) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMul0, ctr[0], lo0, hi0);
        mulhilo(kMul1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

void Philox::refill() noexcept {
    out_ = encrypt(counter_, key_);
    // Only the low 64 counter bits move; the high half is the stream id.
    if (++counter_[0] == 0) {
        ++counter_[1];
    }
    next_ = 0;
}

Philox::result_type Philox::operator()() noexcept {
    if (next_ >= 4) {
        refill();
    }
    const auto lo = static_cast<std::uint64_t>(out_[next_]);
    const auto hi = static_cast<std::uint64_t>(out_[next_ + 1]);
    next_ += 2;
    return lo | (hi << 32);
}

void Philox::discard_blocks(std::uint64_t blocks) noexcept {
    const std::uint64_t pos = (static_cast<std::uint64_t>(counter_[1]) << 32 | counter_[0]) + blocks;
    counter_[0] = static_cast<std::uint32_t>(pos);
    counter_[1] = static_cast<std::uint32_t>(pos >> 32);
    next_ = 4;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream(std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t h = 0x6A09E667F3BCC909ull;
    for (std::uint64_t id : ids) {
        h = mix64(h ^ mix64(id));
    }
    return h;
}

double uniform_open01(Philox& rng) noexcept {
    // 53 random bits, shifted by half an ulp so 0 is impossible.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace mats
