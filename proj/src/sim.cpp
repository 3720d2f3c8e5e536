#include "cmm/sim.hpp"

#include <cmath>
#include <string>

#include "cmm/encode.hpp"
#include "cmm/rng.hpp"
#include "cmm/util.hpp"

namespace cmm {

std::vector<std::uint32_t> gen_modes_multinomial(int n, int s, double r, std::uint64_t seed) {
  if (s <= 3) throw DataError("gen_modes_multinomial: need s > 3");
  const double off = (1.0 - 3.0 * r) / static_cast<double>(s - 3);
  if (!(r > 0.0) || !(off > 0.0))
    throw DataError("gen_modes_multinomial: need 0 < r < 1/3");
  if (!(r > off))
    throw DataError("gen_modes_multinomial: modes not modal (r <= off-mode mass)");
  std::vector<double> probs(s, off);
  probs[0] = probs[1] = probs[2] = r;
  RngStream rng(seed);
  std::vector<std::uint32_t> out(n);
  for (int i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(rng.categorical(probs));
  return out;
}

LabeledDataset gen_cmm(const ModelSpec& spec, const MixtureParams& params,
                       const std::vector<long>& var_mods, int n, std::uint64_t seed) {
  params.validate(spec);
  const int B = static_cast<int>(var_mods.size());
  RngStream rng(seed);

  std::vector<std::vector<std::vector<double>>> alpha(spec.g);
  for (int k = 0; k < spec.g; ++k) {
    alpha[k].resize(spec.num_blocks());
    for (int j = 0; j < spec.num_blocks(); ++j)
      alpha[k][j] = params.block[k][j].expand_alpha(spec.block_cards[j]);
  }

  LabeledDataset out;
  out.labels.resize(n);
  out.data.var_names.resize(B);
  out.data.levels.resize(B);
  for (int b = 0; b < B; ++b) {
    out.data.var_names[b] = "v" + std::to_string(b + 1);
    for (long lv = 0; lv < var_mods[b]; ++lv)
      out.data.levels[b].push_back("m" + std::to_string(lv + 1));
  }
  out.data.cells.assign(n, std::vector<std::uint32_t>(B));
  for (int i = 0; i < n; ++i) {
    const int k = static_cast<int>(rng.categorical(params.pi));
    out.labels[i] = k;
    for (int j = 0; j < spec.num_blocks(); ++j) {
      const auto crossing = static_cast<std::uint32_t>(rng.categorical(alpha[k][j]));
      const auto vals = decode_crossing(crossing, spec.partition.block(j), var_mods);
      const auto& vars = spec.partition.block(j);
      for (std::size_t t = 0; t < vars.size(); ++t) out.data.cells[i][vars[t]] = vals[t];
    }
  }
  return out;
}

BenchmarkCmm benchmark_cmm() {
  std::vector<long> var_mods(6, 3);
  BlockPartition sigma({{0, 1}, {2, 3}, {4, 5}}, 6);
  std::vector<std::vector<int>> modes(2, std::vector<int>(3, 2));
  ModelSpec spec(2, sigma, modes, var_mods);

  MixtureParams params;
  params.pi = {0.5, 0.5};
  params.block.assign(2, std::vector<BlockParams>(3));
  for (int j = 0; j < 3; ++j) {
    params.block[0][j] = BlockParams{{0, 1}, {0.4, 0.4, 0.2}};
    params.block[1][j] = BlockParams{{7, 8}, {0.4, 0.4, 0.2}};
  }
  params.validate(spec);
  return {std::move(spec), std::move(params), std::move(var_mods)};
}

namespace {

constexpr int kMisspecVars = 6;

// Coupled pairs per class (0-based variable indices).
const std::vector<std::pair<int, int>> kClass1Pairs = {{0, 1}, {2, 3}, {4, 5}};
const std::vector<std::pair<int, int>> kClass2Pairs = {{1, 2}, {3, 4}};

}  // namespace

LabeledDataset gen_misspecified(int n, double lambda, std::uint64_t seed) {
  if (!(lambda >= 0.0) || !(lambda <= 1.0))
    throw DataError("gen_misspecified: lambda outside [0,1]");
  RngStream rng(seed);
  LabeledDataset out;
  out.labels.resize(n);
  out.data.var_names.resize(kMisspecVars);
  out.data.levels.resize(kMisspecVars);
  for (int b = 0; b < kMisspecVars; ++b) {
    out.data.var_names[b] = "v" + std::to_string(b + 1);
    out.data.levels[b] = {"m1", "m2", "m3"};
  }
  out.data.cells.assign(n, std::vector<std::uint32_t>(kMisspecVars));
  for (int i = 0; i < n; ++i) {
    const bool class1 = rng.uniform() < 0.5;
    out.labels[i] = class1 ? 0 : 1;
    const auto& pairs = class1 ? kClass1Pairs : kClass2Pairs;
    auto& row = out.data.cells[i];
    for (int b = 0; b < kMisspecVars; ++b) row[b] = static_cast<std::uint32_t>(rng.uniform_index(3));
    for (auto [a, b] : pairs)
      if (rng.uniform() < lambda) row[b] = row[a];
  }
  return out;
}

double misspecified_cell_prob(const std::vector<std::uint32_t>& cell, double lambda) {
  auto pair_prob = [lambda](std::uint32_t x, std::uint32_t y) {
    // p(x) * (lambda 1{x=y} + (1-lambda) p(y)) with uniform ternary marginals.
    return (1.0 / 3.0) * ((x == y ? lambda : 0.0) + (1.0 - lambda) / 3.0);
  };
  double p1 = 1.0;
  for (auto [a, b] : kClass1Pairs) p1 *= pair_prob(cell[a], cell[b]);
  double p2 = (1.0 / 3.0) * (1.0 / 3.0);  // free variables 0 and 5
  for (auto [a, b] : kClass2Pairs) p2 *= pair_prob(cell[a], cell[b]);
  return 0.5 * p1 + 0.5 * p2;
}

}  // namespace cmm
