#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vaxsim::rng {

// Counter-based randomness: every draw is a pure hash of
// (seed, stream name, entity key [, counter]). Draws are independent of
// evaluation order, so any stage can be parallelized or re-run in
// isolation without perturbing the others.

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

/// A named substream of a run seed. Copies are cheap; a Stream is just a key.
class Stream {
  public:
    Stream(std::uint64_t seed, std::string_view name) : key_(mix(seed, fnv1a(name))) {}

    std::uint64_t key() const { return key_; }

    /// Derive a child stream, e.g. per group within a stage.
    Stream child(std::string_view name) const {
        Stream s;
        s.key_ = mix(key_, fnv1a(name));
        return s;
    }

    std::uint64_t bits(std::uint64_t counter) const { return splitmix64(key_ ^ splitmix64(counter)); }

    std::uint64_t bits(std::string_view entity) const { return splitmix64(key_ ^ splitmix64(fnv1a(entity))); }

    /// Uniform double in [0, 1), 53 mantissa bits, integer-derived.
    double uniform(std::uint64_t counter) const { return to_unit(bits(counter)); }

    double uniform(std::string_view entity) const { return to_unit(bits(entity)); }

    bool bernoulli(std::uint64_t counter, double p) const { return uniform(counter) < p; }

    bool bernoulli(std::string_view entity, double p) const { return uniform(entity) < p; }

  private:
    Stream() = default;

    static double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

    std::uint64_t key_ = 0;
};

/// Sequential convenience wrapper for generation loops.
class Sequence {
  public:
    explicit Sequence(Stream stream) : stream_(stream) {}

    double uniform() { return stream_.uniform(counter_++); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // 64-bit hash bits modulo n; bias is negligible for n << 2^64.
        return stream_.bits(counter_++) % n;
    }

    /// Standard normal via inverse CDF (Acklam's rational approximation).
    double normal();

  private:
    Stream stream_;
    std::uint64_t counter_ = 0;
};

} // namespace vaxsim::rng
