#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rfm {

// Mixes a master seed with a stream name. Used to give every concern
// (weight init, data order, augmentation, ...) its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Seeded random stream with portable distributions. The standard library
// distributions are implementation-defined, so everything that has to replay
// bit-exactly (erasing oracles, dataset regeneration) goes through here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  // Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal();

  // Total number of raw 64-bit words consumed so far.
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace rfm
