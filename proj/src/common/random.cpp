#include "rfm/random.hpp"

#include <cmath>
#include <numbers>

namespace rfm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  return splitmix64(splitmix64(master) ^ fnv1a(stream));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) + splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(next_u64());
  // Values below `threshold` are rejected so the accepted span is a multiple
  // of `range`.
  const std::uint64_t threshold = (std::uint64_t{0} - range) % range;
  std::uint64_t x = next_u64();
  while (x < threshold) x = next_u64();
  return lo + static_cast<std::int64_t>(x % range);
}

double Rng::normal() {
  // Box-Muller; one value per call so replay depends only on the call count.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rfm
