#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmm/dataset.hpp"
#include "cmm/model.hpp"
#include "cmm/util.hpp"

namespace cmm {

// Block-coded dataset: one crossing index per (individual, block).
struct EncodedDataset {
  int n = 0;
  std::vector<long> m;                                // per block
  std::vector<std::vector<std::uint32_t>> crossings;  // [j][i]

  int num_blocks() const { return static_cast<int>(m.size()); }
};

// Mixed-radix crossing of one block: variables in ascending index order,
// least-significant first, so m_j = prod m_b and decoding is exact.
std::uint32_t encode_cell(std::span<const std::uint32_t> cells,
                          std::span<const int> block_vars,
                          std::span<const long> var_mods);
std::vector<std::uint32_t> decode_crossing(std::uint32_t crossing,
                                           std::span<const int> block_vars,
                                           std::span<const long> var_mods);

EncodedDataset encode_blocks(const CategoricalDataset& ds, const BlockPartition& partition);

// Counts for one (class, block): responsibility-weighted crossing counts plus
// the decreasing-order view with ties broken by ascending crossing index.
struct BlockCounts {
  std::vector<double> counts;        // by crossing, size m_j
  std::vector<std::uint32_t> order;  // crossing indices, count desc / index asc

  double ordered(int h) const { return counts[order[h]]; }
};

// Builds the ordered view for a raw count vector.
BlockCounts make_block_counts(std::vector<double> counts);

struct SufficientStats {
  std::vector<double> nk;                       // class totals
  std::vector<std::vector<BlockCounts>> kj;     // [k][j]

  // Residual count after removing the top h crossings: n_k - sum_{h'<h} n_kj(h').
  double residual(int k, int j, int h) const;
};

SufficientStats count_stats(const EncodedDataset& enc, const Matrix& responsibilities);
SufficientStats count_stats_hard(const EncodedDataset& enc, std::span<const int> labels, int g);

}  // namespace cmm
