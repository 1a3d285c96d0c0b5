#pragma once

#include <cstdint>
#include <string_view>

namespace aai {

// Counter-based keyed random stream.
//
// Every draw is a pure function of (stream state, key); there is no mutable
// generator state. Identical keys yield identical draws regardless of call
// order or thread schedule, which is what makes the parallel kernels
// bit-reproducible against the serial reference path.
class RandomStream {
 public:
  RandomStream() : state_(0) {}
  explicit RandomStream(std::uint64_t master_seed)
      : state_(finalize(master_seed ^ 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t state() const { return state_; }

  // Reconstructs a stream from a recorded state word (replay).
  static RandomStream from_state(std::uint64_t state) {
    RandomStream s;
    s.state_ = state;
    return s;
  }

  // Derived stream for a nested scope (bootstrap replicate, coverage
  // replication, ...). Children with distinct (tag, a, b) never collide in
  // practice; tags are short compile-time literals.
  RandomStream child(std::string_view tag, std::uint64_t a = 0,
                     std::uint64_t b = 0) const {
    RandomStream s;
    s.state_ = key_hash(tag, a, b, 0);
    return s;
  }

  std::uint64_t bits(std::string_view tag, std::uint64_t a = 0,
                     std::uint64_t b = 0, std::uint64_t c = 0) const {
    return key_hash(tag, a, b, c);
  }

  // Uniform draw in [0, 1) with 53 random bits.
  double u01(std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0,
             std::uint64_t c = 0) const {
    return static_cast<double>(bits(tag, a, b, c) >> 11) * 0x1.0p-53;
  }

  // Standard normal via inverse transform; never returns inf.
  double normal(std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0,
                std::uint64_t c = 0) const;

  static std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t state_;

  static std::uint64_t finalize(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_hash(std::string_view tag, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) const {
    std::uint64_t h = state_;
    h = finalize(h ^ hash_str(tag));
    h = finalize(h ^ a);
    h = finalize(h ^ b);
    h = finalize(h ^ c);
    return h;
  }
};

}  // namespace aai
