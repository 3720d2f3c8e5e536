#include "cmm/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmm/rng.hpp"

namespace cmm {

Matrix e_step(const EncodedDataset& enc, const MixtureParams& params, const ModelSpec& spec) {
  LogAlphaTable table(params, spec);
  Matrix resp(enc.n, spec.g);
  std::vector<double> logs(spec.g);
  for (int i = 0; i < enc.n; ++i) {
    table.weighted_logs(enc, i, logs);
    const double norm = log_sum_exp(logs);
    for (int k = 0; k < spec.g; ++k) resp(i, k) = std::exp(logs[k] - norm);
  }
  return resp;
}

MixtureParams m_step(const SufficientStats& stats, const ModelSpec& spec) {
  const int g = spec.g;
  const int d = spec.num_blocks();
  double n_total = 0.0;
  for (double nk : stats.nk) n_total += nk;

  MixtureParams params;
  params.pi.resize(g);
  params.block.assign(g, std::vector<BlockParams>(d));
  for (int k = 0; k < g; ++k) {
    if (!(stats.nk[k] > 0.0)) throw DegenerateFit("m_step: empty class");
    params.pi[k] = stats.nk[k] / n_total;
    for (int j = 0; j < d; ++j) {
      const int l = spec.modes[k][j];
      const auto& bc = stats.kj[k][j];
      BlockParams bp;
      bp.delta.resize(l);
      bp.a.resize(l + 1);
      double mode_mass = 0.0;
      for (int h = 0; h < l; ++h) {
        bp.delta[h] = bc.order[h];
        bp.a[h] = bc.ordered(h) / stats.nk[k];
        mode_mass += bp.a[h];
      }
      bp.a[l] = 1.0 - mode_mass;
      if (!(bp.a[l - 1] > 0.0) || !(bp.a[l] > 0.0))
        throw DegenerateFit("m_step: zero-mass mode or residual");
      params.block[k][j] = std::move(bp);
    }
  }
  return params;
}

namespace {

struct SingleRun {
  MixtureParams params;
  double loglik;
  Matrix resp;
  int iterations;
};

SingleRun run_em_once(const EncodedDataset& enc, const ModelSpec& spec, RngStream& rng,
                      double tol, int max_iter) {
  // Flat Dirichlet soft labels, then an M-step, gives the initial params.
  Matrix resp(enc.n, spec.g);
  std::vector<double> ones(spec.g, 1.0);
  for (int i = 0; i < enc.n; ++i) {
    auto draw = rng.dirichlet(ones);
    for (int k = 0; k < spec.g; ++k) resp(i, k) = draw[k];
  }
  MixtureParams params = m_step(count_stats(enc, resp), spec);

  double prev = -std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    resp = e_step(enc, params, spec);
    try {
      params = m_step(count_stats(enc, resp), spec);
    } catch (const DegenerateFit&) {
      // The sequence is heading to the boundary (some mass shrinking to zero
      // until it cancels to exactly 0). The previous iterate is a valid
      // near-boundary fit, so stop there rather than discard the run.
      if (std::isinf(prev)) prev = observed_loglik(enc, params, spec);
      break;
    }
    const double ll = observed_loglik(enc, params, spec);
    if (ll - prev < tol && iter > 0) {
      prev = ll;
      break;
    }
    prev = ll;
  }
  return {std::move(params), prev, std::move(resp), iter + 1};
}

}  // namespace

EmResult em_fit(const EncodedDataset& enc, const ModelSpec& spec, const EmOptions& opts) {
  if (opts.starts < 1) throw DataError("em_fit: starts must be >= 1");

  struct Slot {
    bool ok = false;
    SingleRun run;
    int redraws = 0;
  };
  std::vector<Slot> slots(opts.starts);
  const int kMaxRedraws = 4;

  parallel_for(static_cast<std::size_t>(opts.starts), opts.threads, [&](std::size_t s) {
    // Each redraw advances the attempt tag so retries stay deterministic.
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
      RngStream rng(derive_seed(opts.seed, 0x454d /*EM*/, s, attempt));
      try {
        slots[s].run = run_em_once(enc, spec, rng, opts.tol, opts.max_iter);
        slots[s].ok = true;
        slots[s].redraws = attempt;
        return;
      } catch (const DegenerateFit&) {
        slots[s].redraws = attempt + 1;
      }
    }
  });

  EmResult best;
  best.loglik = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < opts.starts; ++s) {
    best.degenerate_restarts += slots[s].redraws;
    if (!slots[s].ok) continue;
    if (slots[s].run.loglik > best.loglik) {
      best.params = std::move(slots[s].run.params);
      best.loglik = slots[s].run.loglik;
      best.responsibilities = std::move(slots[s].run.resp);
      best.iterations = slots[s].run.iterations;
      best.best_start = s;
    }
  }
  if (best.best_start < 0)
    throw EstimationError("em_fit: all " + std::to_string(opts.starts) +
                          " starts degenerate after redraws (spec likely asks for more modes "
                          "than the data supports)");
  return best;
}

EmResult cim_em_fit(const CategoricalDataset& ds, int g, const EmOptions& opts) {
  auto spec = ModelSpec::cim(g, var_modalities(ds));
  const auto enc = encode_blocks(ds, spec.partition);
  // A level that never occurs in the sample would force a zero-mass mode or
  // zero residual; cap each variable's mode count one below its observed
  // level count so the fit stays interior.
  for (int j = 0; j < enc.num_blocks(); ++j) {
    std::vector<char> seen(static_cast<std::size_t>(enc.m[j]), 0);
    for (auto c : enc.crossings[j]) seen[c] = 1;
    const int cap = std::max(1, static_cast<int>(std::count(seen.begin(), seen.end(), char(1))) - 1);
    for (auto& row : spec.modes) row[j] = std::min(row[j], cap);
  }
  return em_fit(enc, spec, opts);
}

}  // namespace cmm
