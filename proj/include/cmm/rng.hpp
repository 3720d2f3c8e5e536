#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cmm {

// Mixes a base seed with stream tags so that chain i / EM start s / replicate
// r each get an independent, reproducible substream of one user seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag0,
                          std::uint64_t tag1 = 0, std::uint64_t tag2 = 0);

// One pseudo-random stream. All sampling in the project goes through this
// class so a fixed seed yields bitwise-identical runs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform_in(double lo, double hi);
  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  double normal();
  // Gamma(shape, 1), shape > 0 (Marsaglia-Tsang, with the shape<1 boost).
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> alpha);

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  // Index drawn proportionally to exp(log_weights), stabilized internally.
  std::size_t categorical_from_logs(std::span<const double> log_weights);

 private:
  std::mt19937_64 gen_;
};

}  // namespace cmm
