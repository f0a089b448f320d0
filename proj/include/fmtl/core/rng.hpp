#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fmtl {

// Stream identifiers for the counter-based generator. Every random draw in the
// simulator is keyed by (seed, entity, round, purpose) so results never depend
// on thread scheduling or on how many draws another stream consumed.
enum class Purpose : std::uint64_t {
  init = 1,
  init_task = 2,
  dropout = 3,
  shuffle = 4,
  partition = 5,
  masks = 6,
  split = 7,
  topology = 8,
  synthetic = 9,
  estimate = 10,
  test = 11,
};

// 64-bit counter-based generator: output i of a stream is
// splitmix64(key + (i+1) * golden), with key a splitmix chain over the four
// key words. Distributions are implemented here (not via <random>) so the
// stream is reproducible bit-for-bit across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t entity, std::uint64_t round, Purpose purpose,
      std::uint64_t sub = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace fmtl
