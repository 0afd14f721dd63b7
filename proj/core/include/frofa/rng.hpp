#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace frofa {

// Splittable key for the counter-based generator. Keys are derived from
// explicit tuples (seed, step, example, op, ...) so that every random draw
// is a pure function of where it happens, never of evaluation order.
class RngKey {
public:
  constexpr RngKey() = default;
  constexpr explicit RngKey(std::uint64_t value) : value_(value) {}

  // Derive a child key. fold(a).fold(b) != fold(b).fold(a).
  [[nodiscard]] RngKey fold(std::uint64_t data) const;
  [[nodiscard]] RngKey fold(std::string_view tag) const;
  [[nodiscard]] RngKey fold(std::initializer_list<std::uint64_t> data) const;

  [[nodiscard]] constexpr std::uint64_t value() const { return value_; }

  friend constexpr bool operator==(RngKey, RngKey) = default;

private:
  std::uint64_t value_ = 0;
};

// Philox4x32-10 stream over a fixed key. Distributions are implemented here
// rather than via <random> so that draws are bit-identical across standard
// library implementations.
class Rng {
public:
  explicit Rng(RngKey key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  double normal();
  double gamma(double shape);
  double beta(double a, double b);

  // Uniformly random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);
  // Uniformly random ordered sample of k distinct values from 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
  void refill();

  std::uint32_t key_[2];
  std::uint64_t counter_ = 0;
  std::uint32_t block_[4] = {};
  int used_ = 4;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace frofa
