#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmm/dataset.hpp"
#include "cmm/model.hpp"
#include "cmm/rng.hpp"
#include "cmm/util.hpp"

namespace cmm {

// A distribution over the full joint cell space of the dataset schema;
// the common currency for KL computations between fitted and true models.
class JointDistribution {
 public:
  virtual ~JointDistribution() = default;
  virtual double cell_prob(std::span<const std::uint32_t> cell) const = 0;
  virtual std::vector<std::uint32_t> sample(RngStream& rng) const = 0;
  virtual const std::vector<long>& modalities() const = 0;
};

class CmmDistribution : public JointDistribution {
 public:
  CmmDistribution(ModelSpec spec, MixtureParams params, std::vector<long> var_mods);
  double cell_prob(std::span<const std::uint32_t> cell) const override;
  std::vector<std::uint32_t> sample(RngStream& rng) const override;
  const std::vector<long>& modalities() const override { return var_mods_; }

 private:
  ModelSpec spec_;
  MixtureParams params_;
  std::vector<long> var_mods_;
  std::vector<std::vector<std::vector<double>>> alpha_;  // [k][j][crossing]
};

class MisspecifiedDistribution : public JointDistribution {
 public:
  explicit MisspecifiedDistribution(double lambda, std::uint64_t sample_seed_salt = 0);
  double cell_prob(std::span<const std::uint32_t> cell) const override;
  std::vector<std::uint32_t> sample(RngStream& rng) const override;
  const std::vector<long>& modalities() const override { return var_mods_; }

 private:
  double lambda_;
  std::vector<long> var_mods_;
};

// Adapts a distribution to a different per-variable level indexing:
// to_inner[b][h] is the inner index of outer level h of variable b.
class RelabeledDistribution : public JointDistribution {
 public:
  RelabeledDistribution(std::unique_ptr<JointDistribution> inner,
                        std::vector<std::vector<std::uint32_t>> to_inner);
  double cell_prob(std::span<const std::uint32_t> cell) const override;
  std::vector<std::uint32_t> sample(RngStream& rng) const override;
  const std::vector<long>& modalities() const override { return inner_->modalities(); }

 private:
  std::unique_ptr<JointDistribution> inner_;
  std::vector<std::vector<std::uint32_t>> to_inner_;
  std::vector<std::vector<std::uint32_t>> from_inner_;
};

struct KlResult {
  double value = 0.0;
  double std_error = 0.0;  // zero in exhaustive mode
  bool exhaustive = true;
};

// KL(p || q). Exhaustive over the joint space when it has at most
// `exhaustive_limit` cells, else Monte Carlo with `mc_draws` samples from p.
KlResult kl_divergence(const JointDistribution& p, const JointDistribution& q,
                       long exhaustive_limit = 1000000, long mc_draws = 100000,
                       std::uint64_t seed = 0);

// Raw cross-tabulation, no label alignment.
Matrix confusion(std::span<const int> labels_a, std::span<const int> labels_b);

// Per-class pairwise Cramer's V on the class subsample; diagonal = 1.
std::vector<Matrix> cramers_v_by_class(const CategoricalDataset& ds,
                                       std::span<const int> labels, int g);

// Parametric bootstrap of the global-nullity hypothesis: the statistic is the
// max conditional Cramer's V over classes and variable pairs; the null model
// is the conditional-independence fit to (data, labels).
double bootstrap_independence_test(const CategoricalDataset& ds, std::span<const int> labels,
                                   int g, int reps, std::uint64_t seed,
                                   unsigned threads = 1);

struct IdentifiabilityResult {
  bool identifiable = false;
  std::string message;
  std::vector<std::vector<int>> witness;  // tri-partition of block indices
};

// Sufficient condition via the Kruskal-rank corollary: searches tri-partitions
// of the block set; d < 3 yields "unknown".
IdentifiabilityResult identifiability_check(const ModelSpec& spec);

}  // namespace cmm
