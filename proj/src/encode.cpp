#include "cmm/encode.hpp"

#include <algorithm>
#include <numeric>

namespace cmm {

std::uint32_t encode_cell(std::span<const std::uint32_t> cells,
                          std::span<const int> block_vars,
                          std::span<const long> var_mods) {
  std::uint64_t crossing = 0;
  std::uint64_t radix = 1;
  for (int b : block_vars) {
    crossing += radix * cells[b];
    radix *= static_cast<std::uint64_t>(var_mods[b]);
  }
  return static_cast<std::uint32_t>(crossing);
}

std::vector<std::uint32_t> decode_crossing(std::uint32_t crossing,
                                           std::span<const int> block_vars,
                                           std::span<const long> var_mods) {
  std::vector<std::uint32_t> out(block_vars.size());
  std::uint64_t rest = crossing;
  for (std::size_t i = 0; i < block_vars.size(); ++i) {
    const auto m = static_cast<std::uint64_t>(var_mods[block_vars[i]]);
    out[i] = static_cast<std::uint32_t>(rest % m);
    rest /= m;
  }
  return out;
}

EncodedDataset encode_blocks(const CategoricalDataset& ds, const BlockPartition& partition) {
  if (partition.num_vars() != ds.num_vars())
    throw DataError("encode: partition variable count does not match dataset");
  const auto mods = var_modalities(ds);
  EncodedDataset enc;
  enc.n = ds.n();
  const int d = partition.num_blocks();
  enc.m.resize(d);
  enc.crossings.resize(d);
  for (int j = 0; j < d; ++j) {
    const auto& vars = partition.block(j);
    long m = 1;
    for (int b : vars) m *= mods[b];
    enc.m[j] = m;
    enc.crossings[j].resize(enc.n);
    for (int i = 0; i < enc.n; ++i)
      enc.crossings[j][i] = encode_cell(ds.cells[i], vars, mods);
  }
  return enc;
}

namespace {

void finish_order(BlockCounts& bc) {
  bc.order.resize(bc.counts.size());
  std::iota(bc.order.begin(), bc.order.end(), 0u);
  std::stable_sort(bc.order.begin(), bc.order.end(),
                   [&](std::uint32_t x, std::uint32_t y) {
                     if (bc.counts[x] != bc.counts[y]) return bc.counts[x] > bc.counts[y];
                     return x < y;
                   });
}

}  // namespace

BlockCounts make_block_counts(std::vector<double> counts) {
  BlockCounts bc;
  bc.counts = std::move(counts);
  finish_order(bc);
  return bc;
}

double SufficientStats::residual(int k, int j, int h) const {
  double r = nk[k];
  for (int t = 0; t < h; ++t) r -= kj[k][j].ordered(t);
  return r;
}

SufficientStats count_stats(const EncodedDataset& enc, const Matrix& resp) {
  if (static_cast<int>(resp.rows()) != enc.n)
    throw DataError("count_stats: responsibility rows != n");
  const int g = static_cast<int>(resp.cols());
  const int d = enc.num_blocks();
  SufficientStats st;
  st.nk.assign(g, 0.0);
  st.kj.assign(g, std::vector<BlockCounts>(d));
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < d; ++j) st.kj[k][j].counts.assign(enc.m[j], 0.0);

  for (int i = 0; i < enc.n; ++i)
    for (int k = 0; k < g; ++k) {
      const double t = resp(i, k);
      st.nk[k] += t;
      for (int j = 0; j < d; ++j) st.kj[k][j].counts[enc.crossings[j][i]] += t;
    }
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < d; ++j) finish_order(st.kj[k][j]);
  return st;
}

SufficientStats count_stats_hard(const EncodedDataset& enc, std::span<const int> labels, int g) {
  if (static_cast<int>(labels.size()) != enc.n)
    throw DataError("count_stats_hard: label count != n");
  const int d = enc.num_blocks();
  SufficientStats st;
  st.nk.assign(g, 0.0);
  st.kj.assign(g, std::vector<BlockCounts>(d));
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < d; ++j) st.kj[k][j].counts.assign(enc.m[j], 0.0);

  for (int i = 0; i < enc.n; ++i) {
    const int k = labels[i];
    if (k < 0 || k >= g) throw DataError("count_stats_hard: label out of range");
    st.nk[k] += 1.0;
    for (int j = 0; j < d; ++j) st.kj[k][j].counts[enc.crossings[j][i]] += 1.0;
  }
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < d; ++j) finish_order(st.kj[k][j]);
  return st;
}

}  // namespace cmm
