#include "cmm/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmm/likelihood.hpp"
#include "cmm/special.hpp"

namespace cmm {

std::vector<double> sample_proportions(std::span<const double> nk, RngStream& rng) {
  std::vector<double> alpha(nk.size());
  for (std::size_t k = 0; k < nk.size(); ++k) alpha[k] = HyperParams::dirichlet_half + nk[k];
  if (nk.size() == 1) return {1.0};
  return rng.dirichlet(alpha);
}

std::vector<std::uint32_t> posterior_mode_locations(const BlockCounts& bc, int ell) {
  return {bc.order.begin(), bc.order.begin() + ell};
}

BlockParams sample_block_probs(const BlockCounts& bc, double nk, int ell, long m,
                               RngStream& rng) {
  if (ell <= 0 || ell >= m) throw std::domain_error("sample_block_probs: ell out of range");
  BlockParams bp;
  bp.delta = posterior_mode_locations(bc, ell);
  bp.a.resize(ell + 1);

  double stick = 1.0;
  double used = 0.0;
  double residual = nk;
  for (int h = 0; h < ell; ++h) {
    const double count = bc.ordered(h);
    residual -= count;
    const double lb = 1.0 / static_cast<double>(m - h);
    double eps = inv_trunc_beta_cdf(rng.uniform(), count + 1.0, residual + 1.0, lb);
    eps = std::clamp(eps, lb, 1.0 - 1e-14);
    bp.a[h] = eps * stick;
    stick *= 1.0 - eps;
    used += bp.a[h];
  }
  bp.a[ell] = 1.0 - used;
  // At large counts the sampled mode masses can round to a full unit mass;
  // keep the residual strictly positive and rescale the modes to compensate.
  const double kMinResidual = 1e-12;
  if (bp.a[ell] < kMinResidual) {
    const double scale = (1.0 - kMinResidual) / used;
    for (int h = 0; h < ell; ++h) bp.a[h] *= scale;
    bp.a[ell] = kMinResidual;
  }

  // The epsilon box coincides with the truncated simplex but does not order
  // the mode masses; restore the canonical decreasing order (the expanded
  // alpha vector is unchanged by this relabeling).
  std::vector<int> idx(ell);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
    if (bp.a[x] != bp.a[y]) return bp.a[x] > bp.a[y];
    return bp.delta[x] < bp.delta[y];
  });
  BlockParams sorted;
  sorted.delta.resize(ell);
  sorted.a.resize(ell + 1);
  for (int h = 0; h < ell; ++h) {
    sorted.delta[h] = bp.delta[idx[h]];
    sorted.a[h] = bp.a[idx[h]];
  }
  sorted.a[ell] = bp.a[ell];
  sorted.validate(m);
  return sorted;
}

std::vector<int> sample_labels(const EncodedDataset& enc, const MixtureParams& params,
                               const ModelSpec& spec, RngStream& rng) {
  LogAlphaTable table(params, spec);
  std::vector<int> labels(enc.n);
  std::vector<double> logs(spec.g);
  for (int i = 0; i < enc.n; ++i) {
    table.weighted_logs(enc, i, logs);
    labels[i] = static_cast<int>(rng.categorical_from_logs(logs));
  }
  return labels;
}

double log_integrated_block(const BlockCounts& bc, double nk, int ell, long m) {
  if (ell <= 0 || ell >= m) throw std::domain_error("log_integrated_block: need 0 < ell < m");
  double residual = nk;
  double logp = 0.0;
  for (int h = 0; h < ell; ++h) {
    const double count = bc.ordered(h);
    residual -= count;
    const double x = 1.0 / static_cast<double>(m - h);
    logp += log_inc_beta_upper(x, count + 1.0, residual + 1.0) -
            std::log(static_cast<double>(m - h - 1));
  }
  logp += residual * std::log(1.0 / static_cast<double>(m - ell));
  return logp;
}

double log_integrated_complete(const SufficientStats& stats, const ModelSpec& spec) {
  double logp = 0.0;
  for (int k = 0; k < spec.g; ++k)
    for (int j = 0; j < spec.num_blocks(); ++j)
      logp += log_integrated_block(stats.kj[k][j], stats.nk[k], spec.modes[k][j],
                                   spec.block_cards[j]);
  return logp;
}

double log_integrated_block_ordered(const BlockCounts& bc, double nk, int ell, long m) {
  if (ell <= 0 || ell >= m)
    throw std::domain_error("log_integrated_block_ordered: need 0 < ell < m");
  const auto lfact = [](double k) { return std::lgamma(k + 1.0); };
  // mode-set prior 1/C(m, ell)
  double logp = lfact(ell) + lfact(m - ell) - lfact(m);
  double residual = nk;
  for (int h = 0; h < ell; ++h) {
    residual -= bc.ordered(h);
    const double x = 1.0 / static_cast<double>(m - h);
    // ell - 1 - h extra (1 - eps) powers: the stick-to-mass Jacobian
    logp += log_inc_beta_upper(x, bc.ordered(h) + 1.0, residual + (ell - 1 - h) + 1.0);
  }
  logp += residual * std::log(1.0 / static_cast<double>(m - ell));
  // minus the log volume of the ordered floor region, (m - ell)/(m ell!^2)
  logp += std::log(static_cast<double>(m - ell)) - std::log(static_cast<double>(m)) -
          2.0 * lfact(ell);
  return logp;
}

int select_mode_count_integrated(const BlockCounts& bc, double nk, long m) {
  int best = 1;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int ell = 1; ell < m; ++ell) {
    const double v = log_integrated_block_ordered(bc, nk, ell, m);
    if (v > best_val) {
      best_val = v;
      best = ell;
    }
  }
  return best;
}

int select_mode_count_bic(const BlockCounts& bc, double nk, long m) {
  int best = 1;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int ell = 1; ell < m; ++ell) {
    double top = 0.0, ll = 0.0;
    for (int h = 0; h < ell; ++h) {
      const double c = bc.ordered(h);
      top += c;
      if (c > 0.0) ll += c * std::log(c / nk);
    }
    const double rest = nk - top;
    if (rest > 0.0) ll += rest * std::log(rest / (nk * static_cast<double>(m - ell)));
    const double v = ll - 0.5 * ell * std::log(nk);
    if (v > best_val) {
      best_val = v;
      best = ell;
    }
  }
  return best;
}

double bic(double loglik, long nu, long n) {
  return loglik - 0.5 * static_cast<double>(nu) * std::log(static_cast<double>(n));
}

}  // namespace cmm
