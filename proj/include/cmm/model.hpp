#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmm/dataset.hpp"

namespace cmm {

// Disjoint, nonempty, sorted variable-index sets covering {0..B-1}; kept in
// canonical order (blocks sorted by smallest member) so equality is testable.
class BlockPartition {
 public:
  BlockPartition(std::vector<std::vector<int>> blocks, int num_vars);
  static BlockPartition singletons(int num_vars);

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int num_vars() const { return num_vars_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(int j) const { return blocks_[j]; }

  // e.g. "0,1|2|3,4" -- used as tally key and in trace CSVs.
  std::string to_string() const;

  bool operator==(const BlockPartition& other) const { return blocks_ == other.blocks_; }

 private:
  std::vector<std::vector<int>> blocks_;
  int num_vars_;
};

// omega = (g, sigma, ell) plus the per-block crossing counts m_j derived from
// the dataset's modality counts.
struct ModelSpec {
  int g;
  BlockPartition partition;
  std::vector<std::vector<int>> modes;  // modes[k][j] = ell_kj
  std::vector<long> block_cards;        // m_j = prod of modality counts

  ModelSpec(int g_, BlockPartition partition_, std::vector<std::vector<int>> modes_,
            const std::vector<long>& var_modalities);

  int num_blocks() const { return partition.num_blocks(); }
  // Free-parameter count (g-1) + sum_k sum_j ell_kj.
  long nu() const;

  // CIM baseline: all-singleton partition, ell_kb = m_b - 1.
  static ModelSpec cim(int g, const std::vector<long>& var_modalities);
};

std::vector<long> var_modalities(const CategoricalDataset& ds);

// Mode description of one (class, block) distribution. delta[h] is the
// crossing index of mode h, ordered by decreasing mass; a has ell+1 entries,
// the last being the total non-mode mass.
struct BlockParams {
  std::vector<std::uint32_t> delta;
  std::vector<double> a;

  int num_modes() const { return static_cast<int>(delta.size()); }
  // Full alpha vector over all m crossings.
  std::vector<double> expand_alpha(long m) const;
  std::vector<double> expand_log_alpha(long m) const;
  // Throws NumericError if the truncated-simplex invariants are violated.
  void validate(long m) const;
};

struct MixtureParams {
  std::vector<double> pi;
  std::vector<std::vector<BlockParams>> block;  // [k][j]

  void validate(const ModelSpec& spec) const;
};

}  // namespace cmm
