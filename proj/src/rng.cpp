#include "cmm/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "cmm/util.hpp"

namespace cmm {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag0,
                          std::uint64_t tag1, std::uint64_t tag2) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  s ^= tag0 * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  out ^= splitmix64(s);
  s ^= tag1 * 0xda942042e4dd58b5ULL + 0x9e3779b97f4a7c15ULL;
  out ^= splitmix64(s);
  s ^= tag2 * 0x8cb92ba72f3d8dd7ULL + 0xff51afd7ed558ccdULL;
  out ^= splitmix64(s);
  return out;
}

RngStream::RngStream(std::uint64_t seed) : gen_(seed) {}

std::uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_in(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // Rejection to avoid modulo bias.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = gen_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

double RngStream::normal() {
  // Box-Muller; one value per call keeps the stream state simple.
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> RngStream::dirichlet(std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma(alpha[i]);
    total += out[i];
  }
  if (total <= 0.0) {
    // All gammas underflowed; fall back to the largest-shape corner.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < alpha.size(); ++i)
      if (alpha[i] > alpha[imax]) imax = i;
    for (auto& x : out) x = 0.0;
    out[imax] = 1.0;
    return out;
  }
  for (auto& x : out) x /= total;
  return out;
}

std::size_t RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NumericError("categorical: non-positive weight sum");
  double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

std::size_t RngStream::categorical_from_logs(std::span<const double> log_weights) {
  double m = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) m = std::max(m, lw);
  if (!std::isfinite(m)) throw NumericError("categorical_from_logs: all weights zero");
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - m);
  return categorical(w);
}

}  // namespace cmm
