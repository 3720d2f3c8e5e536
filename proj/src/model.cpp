#include "cmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cmm/util.hpp"

namespace cmm {

BlockPartition::BlockPartition(std::vector<std::vector<int>> blocks, int num_vars)
    : blocks_(std::move(blocks)), num_vars_(num_vars) {
  std::vector<char> seen(num_vars_, 0);
  for (auto& blk : blocks_) {
    if (blk.empty()) throw DataError("partition: empty block");
    std::sort(blk.begin(), blk.end());
    for (int b : blk) {
      if (b < 0 || b >= num_vars_) throw DataError("partition: variable index out of range");
      if (seen[b]) throw DataError("partition: variable appears in two blocks");
      seen[b] = 1;
    }
  }
  for (int b = 0; b < num_vars_; ++b)
    if (!seen[b]) throw DataError("partition: variable missing from all blocks");
  std::sort(blocks_.begin(), blocks_.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
}

BlockPartition BlockPartition::singletons(int num_vars) {
  std::vector<std::vector<int>> blocks(num_vars);
  for (int b = 0; b < num_vars; ++b) blocks[b] = {b};
  return BlockPartition(std::move(blocks), num_vars);
}

std::string BlockPartition::to_string() const {
  std::ostringstream out;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (j) out << '|';
    for (std::size_t i = 0; i < blocks_[j].size(); ++i) {
      if (i) out << ',';
      out << blocks_[j][i];
    }
  }
  return out.str();
}

ModelSpec::ModelSpec(int g_, BlockPartition partition_,
                     std::vector<std::vector<int>> modes_,
                     const std::vector<long>& var_mods)
    : g(g_), partition(std::move(partition_)), modes(std::move(modes_)) {
  if (g < 1) throw DataError("spec: g must be >= 1");
  if (partition.num_vars() != static_cast<int>(var_mods.size()))
    throw DataError("spec: partition does not match variable count");
  const int d = partition.num_blocks();
  block_cards.resize(d);
  for (int j = 0; j < d; ++j) {
    long m = 1;
    for (int b : partition.block(j)) {
      m *= var_mods[b];
      if (m > (1L << 40)) throw DataError("spec: block crossing count overflow");
    }
    block_cards[j] = m;
  }
  if (static_cast<int>(modes.size()) != g) throw DataError("spec: modes rows != g");
  for (const auto& row : modes) {
    if (static_cast<int>(row.size()) != d) throw DataError("spec: modes cols != d");
    for (int j = 0; j < d; ++j)
      if (row[j] <= 0 || row[j] >= block_cards[j])
        throw DataError("spec: mode count must satisfy 0 < ell < m_j");
  }
}

long ModelSpec::nu() const {
  long v = g - 1;
  for (const auto& row : modes)
    for (int l : row) v += l;
  return v;
}

ModelSpec ModelSpec::cim(int g, const std::vector<long>& var_mods) {
  const int B = static_cast<int>(var_mods.size());
  std::vector<std::vector<int>> modes(g, std::vector<int>(B));
  for (int k = 0; k < g; ++k)
    for (int b = 0; b < B; ++b) modes[k][b] = static_cast<int>(var_mods[b]) - 1;
  return ModelSpec(g, BlockPartition::singletons(B), std::move(modes), var_mods);
}

std::vector<long> var_modalities(const CategoricalDataset& ds) {
  std::vector<long> out(ds.num_vars());
  for (int b = 0; b < ds.num_vars(); ++b) out[b] = ds.modality_count(b);
  return out;
}

std::vector<double> BlockParams::expand_alpha(long m) const {
  const int l = num_modes();
  const double off_mode = a[l] / static_cast<double>(m - l);
  std::vector<double> alpha(m, off_mode);
  for (int h = 0; h < l; ++h) alpha[delta[h]] = a[h];
  return alpha;
}

std::vector<double> BlockParams::expand_log_alpha(long m) const {
  auto alpha = expand_alpha(m);
  for (auto& x : alpha) x = std::log(x);
  return alpha;
}

void BlockParams::validate(long m) const {
  const int l = num_modes();
  if (l <= 0 || l >= m) throw NumericError("block params: mode count out of range");
  if (static_cast<int>(a.size()) != l + 1) throw NumericError("block params: a size != ell+1");
  double sum = 0.0;
  for (double x : a) {
    if (!(x > 0.0) || !(x <= 1.0)) throw NumericError("block params: mass outside (0,1]");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw NumericError("block params: masses do not sum to 1");
  const double floor = a[l] / static_cast<double>(m - l);
  for (int h = 0; h < l; ++h) {
    if (h + 1 < l && a[h] < a[h + 1] - 1e-12)
      throw NumericError("block params: mode masses not nonincreasing");
    if (a[h] < floor - 1e-12)
      throw NumericError("block params: truncated-simplex constraint violated");
  }
  std::vector<char> seen(m, 0);
  for (auto dlt : delta) {
    if (dlt >= static_cast<std::uint32_t>(m)) throw NumericError("block params: delta out of range");
    if (seen[dlt]) throw NumericError("block params: duplicate mode location");
    seen[dlt] = 1;
  }
}

void MixtureParams::validate(const ModelSpec& spec) const {
  if (static_cast<int>(pi.size()) != spec.g) throw NumericError("params: pi size != g");
  double sum = 0.0;
  for (double p : pi) {
    if (!(p > 0.0)) throw NumericError("params: non-positive proportion");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw NumericError("params: proportions do not sum to 1");
  if (static_cast<int>(block.size()) != spec.g) throw NumericError("params: block rows != g");
  for (int k = 0; k < spec.g; ++k) {
    if (static_cast<int>(block[k].size()) != spec.num_blocks())
      throw NumericError("params: block cols != d");
    for (int j = 0; j < spec.num_blocks(); ++j) {
      if (block[k][j].num_modes() != spec.modes[k][j])
        throw NumericError("params: mode count mismatch with spec");
      block[k][j].validate(spec.block_cards[j]);
    }
  }
}

}  // namespace cmm
