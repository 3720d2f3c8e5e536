#include "cmm/eval.hpp"

#include <algorithm>
#include <cmath>

#include "cmm/encode.hpp"
#include "cmm/sim.hpp"

namespace cmm {

CmmDistribution::CmmDistribution(ModelSpec spec, MixtureParams params,
                                 std::vector<long> var_mods)
    : spec_(std::move(spec)), params_(std::move(params)), var_mods_(std::move(var_mods)) {
  params_.validate(spec_);
  alpha_.resize(spec_.g);
  for (int k = 0; k < spec_.g; ++k) {
    alpha_[k].resize(spec_.num_blocks());
    for (int j = 0; j < spec_.num_blocks(); ++j)
      alpha_[k][j] = params_.block[k][j].expand_alpha(spec_.block_cards[j]);
  }
}

double CmmDistribution::cell_prob(std::span<const std::uint32_t> cell) const {
  double total = 0.0;
  for (int k = 0; k < spec_.g; ++k) {
    double p = params_.pi[k];
    for (int j = 0; j < spec_.num_blocks(); ++j)
      p *= alpha_[k][j][encode_cell(cell, spec_.partition.block(j), var_mods_)];
    total += p;
  }
  return total;
}

std::vector<std::uint32_t> CmmDistribution::sample(RngStream& rng) const {
  std::vector<std::uint32_t> cell(var_mods_.size());
  const int k = static_cast<int>(rng.categorical(params_.pi));
  for (int j = 0; j < spec_.num_blocks(); ++j) {
    const auto crossing = static_cast<std::uint32_t>(rng.categorical(alpha_[k][j]));
    const auto vals = decode_crossing(crossing, spec_.partition.block(j), var_mods_);
    const auto& vars = spec_.partition.block(j);
    for (std::size_t t = 0; t < vars.size(); ++t) cell[vars[t]] = vals[t];
  }
  return cell;
}

MisspecifiedDistribution::MisspecifiedDistribution(double lambda, std::uint64_t)
    : lambda_(lambda), var_mods_(6, 3) {}

double MisspecifiedDistribution::cell_prob(std::span<const std::uint32_t> cell) const {
  return misspecified_cell_prob({cell.begin(), cell.end()}, lambda_);
}

std::vector<std::uint32_t> MisspecifiedDistribution::sample(RngStream& rng) const {
  const auto one = gen_misspecified(1, lambda_, rng.next_u64());
  return one.data.cells[0];
}

RelabeledDistribution::RelabeledDistribution(std::unique_ptr<JointDistribution> inner,
                                             std::vector<std::vector<std::uint32_t>> to_inner)
    : inner_(std::move(inner)), to_inner_(std::move(to_inner)) {
  const auto& mods = inner_->modalities();
  if (to_inner_.size() != mods.size())
    throw DataError("RelabeledDistribution: wrong number of variables");
  from_inner_.resize(to_inner_.size());
  for (std::size_t b = 0; b < to_inner_.size(); ++b) {
    if (to_inner_[b].size() != static_cast<std::size_t>(mods[b]))
      throw DataError("RelabeledDistribution: wrong level count");
    from_inner_[b].assign(to_inner_[b].size(), UINT32_MAX);
    for (std::size_t h = 0; h < to_inner_[b].size(); ++h) {
      if (to_inner_[b][h] >= to_inner_[b].size() ||
          from_inner_[b][to_inner_[b][h]] != UINT32_MAX)
        throw DataError("RelabeledDistribution: mapping is not a permutation");
      from_inner_[b][to_inner_[b][h]] = static_cast<std::uint32_t>(h);
    }
  }
}

double RelabeledDistribution::cell_prob(std::span<const std::uint32_t> cell) const {
  std::vector<std::uint32_t> mapped(cell.size());
  for (std::size_t b = 0; b < cell.size(); ++b) mapped[b] = to_inner_[b][cell[b]];
  return inner_->cell_prob(mapped);
}

std::vector<std::uint32_t> RelabeledDistribution::sample(RngStream& rng) const {
  auto cell = inner_->sample(rng);
  for (std::size_t b = 0; b < cell.size(); ++b) cell[b] = from_inner_[b][cell[b]];
  return cell;
}

KlResult kl_divergence(const JointDistribution& p, const JointDistribution& q,
                       long exhaustive_limit, long mc_draws, std::uint64_t seed) {
  const auto& mods = p.modalities();
  if (mods != q.modalities())
    throw DataError("kl_divergence: distributions defined over different schemas");

  long cells = 1;
  bool overflow = false;
  for (long m : mods) {
    cells *= m;
    if (cells > exhaustive_limit) {
      overflow = true;
      break;
    }
  }

  KlResult res;
  if (!overflow) {
    std::vector<std::uint32_t> cell(mods.size(), 0);
    double kl = 0.0;
    for (;;) {
      const double pp = p.cell_prob(cell);
      if (pp > 0.0) {
        const double qq = q.cell_prob(cell);
        if (!(qq > 0.0)) throw NumericError("kl_divergence: q has a zero-mass cell where p > 0");
        kl += pp * std::log(pp / qq);
      }
      std::size_t b = 0;
      for (; b < cell.size(); ++b) {
        if (++cell[b] < mods[b]) break;
        cell[b] = 0;
      }
      if (b == cell.size()) break;
    }
    res.value = kl;
    return res;
  }

  RngStream rng(seed);
  double sum = 0.0, sum2 = 0.0;
  for (long t = 0; t < mc_draws; ++t) {
    const auto cell = p.sample(rng);
    const double pp = p.cell_prob(cell);
    const double qq = q.cell_prob(cell);
    if (!(qq > 0.0)) throw NumericError("kl_divergence: q has a zero-mass cell where p > 0");
    const double x = std::log(pp / qq);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / static_cast<double>(mc_draws);
  res.value = mean;
  res.std_error =
      std::sqrt(std::max(0.0, sum2 / mc_draws - mean * mean) / static_cast<double>(mc_draws));
  res.exhaustive = false;
  return res;
}

Matrix confusion(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) throw DataError("confusion: length mismatch");
  int ga = 0, gb = 0;
  for (int z : labels_a) ga = std::max(ga, z + 1);
  for (int z : labels_b) gb = std::max(gb, z + 1);
  Matrix table(ga, gb);
  for (std::size_t i = 0; i < labels_a.size(); ++i) table(labels_a[i], labels_b[i]) += 1.0;
  return table;
}

namespace {

double cramers_v_pair(const CategoricalDataset& ds, std::span<const int> labels, int cls,
                      int va, int vb) {
  const long ma = ds.modality_count(va), mb = ds.modality_count(vb);
  Matrix table(ma, mb);
  long nk = 0;
  for (int i = 0; i < ds.n(); ++i)
    if (labels[i] == cls) {
      table(ds.cells[i][va], ds.cells[i][vb]) += 1.0;
      ++nk;
    }
  if (nk == 0) return 0.0;
  std::vector<double> row(ma, 0.0), col(mb, 0.0);
  for (long a = 0; a < ma; ++a)
    for (long b = 0; b < mb; ++b) {
      row[a] += table(a, b);
      col[b] += table(a, b);
    }
  double chi2 = 0.0;
  for (long a = 0; a < ma; ++a)
    for (long b = 0; b < mb; ++b) {
      const double expected = row[a] * col[b] / static_cast<double>(nk);
      if (expected > 0.0) {
        const double diff = table(a, b) - expected;
        chi2 += diff * diff / expected;
      }
    }
  const double denom = static_cast<double>(nk) * static_cast<double>(std::min(ma, mb) - 1);
  return std::sqrt(std::min(1.0, chi2 / denom));
}

}  // namespace

std::vector<Matrix> cramers_v_by_class(const CategoricalDataset& ds,
                                       std::span<const int> labels, int g) {
  const int B = ds.num_vars();
  std::vector<Matrix> out(g, Matrix(B, B));
  for (int k = 0; k < g; ++k)
    for (int a = 0; a < B; ++a) {
      out[k](a, a) = 1.0;
      for (int b = a + 1; b < B; ++b) {
        const double v = cramers_v_pair(ds, labels, k, a, b);
        out[k](a, b) = v;
        out[k](b, a) = v;
      }
    }
  return out;
}

namespace {

double max_conditional_v(const CategoricalDataset& ds, std::span<const int> labels, int g) {
  double best = 0.0;
  for (int k = 0; k < g; ++k)
    for (int a = 0; a < ds.num_vars(); ++a)
      for (int b = a + 1; b < ds.num_vars(); ++b)
        best = std::max(best, cramers_v_pair(ds, labels, k, a, b));
  return best;
}

}  // namespace

double bootstrap_independence_test(const CategoricalDataset& ds, std::span<const int> labels,
                                   int g, int reps, std::uint64_t seed, unsigned threads) {
  if (reps <= 0) throw DataError("bootstrap_independence_test: reps must be positive");
  const double observed = max_conditional_v(ds, labels, g);

  // Conditional-independence null fitted from the hard labels.
  const int B = ds.num_vars();
  std::vector<double> nk(g, 0.0);
  std::vector<std::vector<std::vector<double>>> freq(
      g, std::vector<std::vector<double>>(B));
  for (int k = 0; k < g; ++k)
    for (int b = 0; b < B; ++b) freq[k][b].assign(ds.modality_count(b), 0.0);
  for (int i = 0; i < ds.n(); ++i) {
    const int k = labels[i];
    nk[k] += 1.0;
    for (int b = 0; b < B; ++b) freq[k][b][ds.cells[i][b]] += 1.0;
  }
  std::vector<double> pi(g);
  for (int k = 0; k < g; ++k) {
    if (!(nk[k] > 0.0)) throw EstimationError("bootstrap_independence_test: empty class");
    pi[k] = nk[k] / static_cast<double>(ds.n());
    for (int b = 0; b < B; ++b)
      for (auto& f : freq[k][b]) f /= nk[k];
  }

  std::vector<int> exceed(reps, 0);
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
    RngStream rng(derive_seed(seed, 0x424f4f54 /*BOOT*/, rep));
    CategoricalDataset sample = ds;
    std::vector<int> sample_labels(ds.n());
    for (int i = 0; i < ds.n(); ++i) {
      const int k = static_cast<int>(rng.categorical(pi));
      sample_labels[i] = k;
      for (int b = 0; b < B; ++b)
        sample.cells[i][b] = static_cast<std::uint32_t>(rng.categorical(freq[k][b]));
    }
    exceed[rep] = max_conditional_v(sample, sample_labels, g) >= observed ? 1 : 0;
  });
  long total = 0;
  for (int e : exceed) total += e;
  return static_cast<double>(total) / static_cast<double>(reps);
}

IdentifiabilityResult identifiability_check(const ModelSpec& spec) {
  IdentifiabilityResult res;
  const int d = spec.num_blocks();
  if (d < 3) {
    res.message = "unknown: the Kruskal-rank condition needs at least three blocks (d = " +
                  std::to_string(d) + ")";
    return res;
  }
  std::vector<long> xi(d);
  for (int j = 0; j < d; ++j) {
    int min_l = spec.modes[0][j];
    for (int k = 1; k < spec.g; ++k) min_l = std::min(min_l, spec.modes[k][j]);
    xi[j] = min_l + 1;
  }
  const long g = spec.g;
  // Exhaustive over assignments of blocks to three labeled groups.
  std::vector<int> assign(d, 0);
  for (;;) {
    std::vector<std::vector<int>> groups(3);
    long gamma[3] = {1, 1, 1};
    for (int j = 0; j < d; ++j) {
      groups[assign[j]].push_back(j);
      gamma[assign[j]] = std::min<long>(gamma[assign[j]] * xi[j], g + 1);
    }
    if (!groups[0].empty() && !groups[1].empty() && !groups[2].empty()) {
      long total = 0;
      for (long gm : gamma) total += std::min(g, gm);
      if (total >= 2 * g + 2) {
        res.identifiable = true;
        res.witness = groups;
        res.message = "identifiable-generically (Kruskal-rank condition holds)";
        return res;
      }
    }
    int j = 0;
    for (; j < d; ++j) {
      if (++assign[j] < 3) break;
      assign[j] = 0;
    }
    if (j == d) break;
  }
  res.message = "unknown: no tri-partition satisfies the Kruskal-rank condition "
                "(the condition is sufficient, not necessary)";
  return res;
}

}  // namespace cmm
