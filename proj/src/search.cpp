#include "cmm/search.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cmm/likelihood.hpp"

namespace cmm {

std::vector<BlockPartition> neighborhood(const BlockPartition& sigma) {
  const int B = sigma.num_vars();
  std::vector<BlockPartition> out;
  std::set<std::string> seen;
  seen.insert(sigma.to_string());
  for (int j = 0; j < sigma.num_blocks(); ++j) {
    for (int b : sigma.block(j)) {
      // Move b into every other existing block, or into a new singleton.
      const int targets = sigma.num_blocks() + 1;
      for (int t = 0; t < targets; ++t) {
        if (t == j) continue;
        if (t == sigma.num_blocks() && sigma.block(j).size() == 1) continue;
        std::vector<std::vector<int>> blocks;
        for (int jj = 0; jj < sigma.num_blocks(); ++jj) {
          std::vector<int> blk = sigma.block(jj);
          if (jj == j) blk.erase(std::find(blk.begin(), blk.end(), b));
          if (jj == t) blk.push_back(b);
          if (!blk.empty()) blocks.push_back(std::move(blk));
        }
        if (t == sigma.num_blocks()) blocks.push_back({b});
        BlockPartition cand(std::move(blocks), B);
        if (seen.insert(cand.to_string()).second) out.push_back(std::move(cand));
      }
    }
  }
  return out;
}

std::string couple_key(const BlockPartition& sigma, const std::vector<std::vector<int>>& modes) {
  std::ostringstream out;
  out << sigma.to_string() << ';';
  for (std::size_t k = 0; k < modes.size(); ++k)
    for (std::size_t j = 0; j < modes[k].size(); ++j) {
      if (k || j) out << ',';
      out << modes[k][j];
    }
  return out.str();
}

namespace {

long block_card(const std::vector<int>& vars, const std::vector<long>& var_mods) {
  long m = 1;
  for (int b : vars) m *= var_mods[b];
  return m;
}

std::set<std::vector<int>> block_set(const BlockPartition& p) {
  return {p.blocks().begin(), p.blocks().end()};
}

}  // namespace

Proposal propose(const BlockPartition& sigma, const std::vector<std::vector<int>>& modes,
                 int g, const std::vector<long>& var_mods, long max_block_crossings,
                 RngStream& rng) {
  const auto neigh = neighborhood(sigma);
  if (neigh.empty()) throw DataError("propose: neighborhood empty (B < 2)");
  const std::size_t pick = rng.uniform_index(neigh.size());
  Proposal prop{neigh[pick], {}, 0.0, false};

  const auto old_blocks = block_set(sigma);
  const auto new_blocks = block_set(prop.sigma);

  // Modified blocks on each side: sets present in one partition only.
  double log_range_new = 0.0, log_range_old = 0.0;
  for (int j = 0; j < prop.sigma.num_blocks(); ++j) {
    const long m = block_card(prop.sigma.block(j), var_mods);
    if (m > max_block_crossings) prop.auto_reject = true;
    if (!old_blocks.count(prop.sigma.block(j))) log_range_new += std::log(static_cast<double>(m - 1));
  }
  for (int j = 0; j < sigma.num_blocks(); ++j)
    if (!new_blocks.count(sigma.block(j)))
      log_range_old += std::log(static_cast<double>(block_card(sigma.block(j), var_mods) - 1));

  // q(old|new)/q(new|old): the reverse move redraws ell over the old blocks'
  // ranges, the forward move over the new blocks' ranges.
  prop.log_q_ratio = std::log(static_cast<double>(neigh.size())) -
                     std::log(static_cast<double>(neighborhood(prop.sigma).size())) +
                     g * (log_range_new - log_range_old);

  // Carry ell for untouched blocks; redraw uniformly for modified ones.
  prop.modes.assign(g, std::vector<int>(prop.sigma.num_blocks()));
  for (int j = 0; j < prop.sigma.num_blocks(); ++j) {
    const auto& blk = prop.sigma.block(j);
    int old_j = -1;
    for (int jj = 0; jj < sigma.num_blocks(); ++jj)
      if (sigma.block(jj) == blk) {
        old_j = jj;
        break;
      }
    if (old_j >= 0) {
      for (int k = 0; k < g; ++k) prop.modes[k][j] = modes[k][old_j];
    } else {
      const long m = block_card(blk, var_mods);
      for (int k = 0; k < g; ++k)
        prop.modes[k][j] = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m - 1)));
    }
  }
  return prop;
}

double mh_log_acceptance(double log_icl_current, double log_icl_candidate,
                         double log_q_ratio) {
  return std::min(0.0, log_icl_candidate - log_icl_current + log_q_ratio);
}

namespace {

// Per-chain mutable state plus the per-block encoding cache.
struct ChainCtx {
  const CategoricalDataset& ds;
  std::vector<long> var_mods;
  int g;
  std::map<std::string, std::vector<std::uint32_t>> block_cache;

  explicit ChainCtx(const CategoricalDataset& d, int g_)
      : ds(d), var_mods(var_modalities(d)), g(g_) {}

  std::string block_key(const std::vector<int>& vars) const {
    std::string key;
    for (int b : vars) key += std::to_string(b) + ",";
    return key;
  }

  EncodedDataset encode(const BlockPartition& sigma) {
    EncodedDataset enc;
    enc.n = ds.n();
    const int d = sigma.num_blocks();
    enc.m.resize(d);
    enc.crossings.resize(d);
    for (int j = 0; j < d; ++j) {
      const auto& vars = sigma.block(j);
      enc.m[j] = block_card(vars, var_mods);
      const auto key = block_key(vars);
      auto it = block_cache.find(key);
      if (it == block_cache.end()) {
        if (block_cache.size() > 8192) block_cache.clear();
        std::vector<std::uint32_t> col(enc.n);
        for (int i = 0; i < enc.n; ++i) col[i] = encode_cell(ds.cells[i], vars, var_mods);
        it = block_cache.emplace(key, std::move(col)).first;
      }
      enc.crossings[j] = it->second;
    }
    return enc;
  }
};

MixtureParams sample_theta(const SufficientStats& stats, const ModelSpec& spec,
                           RngStream& rng) {
  MixtureParams params;
  params.pi = sample_proportions(stats.nk, rng);
  params.block.assign(spec.g, std::vector<BlockParams>(spec.num_blocks()));
  for (int k = 0; k < spec.g; ++k)
    for (int j = 0; j < spec.num_blocks(); ++j)
      params.block[k][j] = sample_block_probs(stats.kj[k][j], stats.nk[k],
                                              spec.modes[k][j], spec.block_cards[j], rng);
  return params;
}

bool has_empty_class(const SufficientStats& stats) {
  for (double nk : stats.nk)
    if (!(nk > 0.0)) return true;
  return false;
}

}  // namespace

ChainResult run_chain(const CategoricalDataset& ds, int g, const ChainOptions& opts) {
  ChainCtx ctx(ds, g);
  RngStream rng(opts.seed);
  ChainResult res;

  BlockPartition sigma = BlockPartition::singletons(ds.num_vars());
  std::vector<std::vector<int>> modes(g, std::vector<int>(ds.num_vars(), 1));
  EncodedDataset enc = ctx.encode(sigma);

  std::vector<int> labels(ds.n());
  for (auto& z : labels) z = static_cast<int>(rng.uniform_index(g));
  SufficientStats stats = count_stats_hard(enc, labels, g);

  auto make_spec = [&](const BlockPartition& s, const std::vector<std::vector<int>>& l) {
    return ModelSpec(g, s, l, ctx.var_mods);
  };
  auto all_block_logs = [&](const SufficientStats& st, const ModelSpec& spec) {
    Matrix logs(g, spec.num_blocks());
    for (int k = 0; k < g; ++k)
      for (int j = 0; j < spec.num_blocks(); ++j)
        logs(k, j) = log_integrated_block(st.kj[k][j], st.nk[k], spec.modes[k][j],
                                          spec.block_cards[j]);
    return logs;
  };

  ModelSpec spec = make_spec(sigma, modes);
  Matrix block_logs = all_block_logs(stats, spec);
  const bool can_move = ds.num_vars() >= 2;

  for (long it = 0; it < opts.iterations; ++it) {
    // 1) theta | Z
    const MixtureParams theta = sample_theta(stats, spec, rng);

    // 2) Z | theta, with one retry on an empty class
    {
      std::vector<int> cand = sample_labels(enc, theta, spec, rng);
      SufficientStats cand_stats = count_stats_hard(enc, cand, g);
      if (has_empty_class(cand_stats)) {
        ++res.empty_class_events;
        cand = sample_labels(enc, theta, spec, rng);
        cand_stats = count_stats_hard(enc, cand, g);
      }
      if (!has_empty_class(cand_stats)) {
        labels = std::move(cand);
        stats = std::move(cand_stats);
        block_logs = all_block_logs(stats, spec);
      }
      // else: keep the last valid labelling.
    }

    // 3) Metropolis-Hastings move on (sigma, ell of modified blocks)
    bool accepted = false;
    if (can_move) {
      Proposal prop = propose(sigma, modes, g, ctx.var_mods, opts.max_block_crossings, rng);
      if (prop.auto_reject) {
        ++res.auto_rejects;
      } else {
        EncodedDataset cand_enc = ctx.encode(prop.sigma);
        SufficientStats cand_stats = count_stats_hard(cand_enc, labels, g);
        ModelSpec cand_spec = make_spec(prop.sigma, prop.modes);
        Matrix cand_logs = all_block_logs(cand_stats, cand_spec);
        double icl_cur = 0.0, icl_cand = 0.0;
        for (int k = 0; k < g; ++k) {
          for (int j = 0; j < spec.num_blocks(); ++j) icl_cur += block_logs(k, j);
          for (int j = 0; j < cand_spec.num_blocks(); ++j) icl_cand += cand_logs(k, j);
        }
        const double log_mu = mh_log_acceptance(icl_cur, icl_cand, prop.log_q_ratio);
        if (std::log(rng.uniform() + 1e-300) < log_mu) {
          accepted = true;
          ++res.accepted_moves;
          sigma = std::move(prop.sigma);
          modes = std::move(prop.modes);
          spec = std::move(cand_spec);
          enc = std::move(cand_enc);
          stats = std::move(cand_stats);
          block_logs = std::move(cand_logs);
        }
      }
    }

    // 4) mode-number sweep, fixed order (k outer, j inner)
    for (int k = 0; k < g; ++k)
      for (int j = 0; j < spec.num_blocks(); ++j) {
        const long m = spec.block_cards[j];
        const int cur = spec.modes[k][j];
        auto window = [&](int center) {
          std::vector<int> w;
          for (int l = center - 1; l <= center + 1; ++l)
            if (l > 0 && l < m) w.push_back(l);
          return w;
        };
        auto block_log = [&](int l) {
          return l == cur ? block_logs(k, j)
                          : log_integrated_block(stats.kj[k][j], stats.nk[k], l, m);
        };
        const auto win = window(cur);
        std::vector<double> logw(win.size());
        for (std::size_t t = 0; t < win.size(); ++t) logw[t] = block_log(win[t]);
        const std::size_t pick = rng.categorical_from_logs(logw);
        const int cand = win[pick];
        bool take = true;
        if (opts.metropolize_sweep && cand != cur) {
          // The +-1 window shifts with the state, so the plain weighted draw
          // is not reversible; accept with min(1, S(cur)/S(cand)).
          const double log_s_cur = log_sum_exp(logw);
          const auto rwin = window(cand);
          std::vector<double> rlogw(rwin.size());
          for (std::size_t t = 0; t < rwin.size(); ++t) rlogw[t] = block_log(rwin[t]);
          const double log_s_cand = log_sum_exp(rlogw);
          take = std::log(rng.uniform() + 1e-300) < std::min(0.0, log_s_cur - log_s_cand);
        }
        if (take && cand != cur) {
          spec.modes[k][j] = cand;
          modes[k][j] = cand;
          block_logs(k, j) = block_log(cand);
        }
      }

    double icl = 0.0;
    for (int k = 0; k < g; ++k)
      for (int j = 0; j < spec.num_blocks(); ++j) icl += block_logs(k, j);

    if (it >= opts.burnin) {
      auto& entry = res.tally[couple_key(sigma, modes)];
      ++entry.visits;
      if (icl > entry.best_log_icl) entry.best_log_icl = icl;
      if (entry.visits == 1) {
        entry.modes = modes;
        entry.sigma_blocks = sigma.blocks();
      }
    }
    if (opts.record_trace)
      res.trace.push_back({it, sigma.to_string(), [&] {
                             std::vector<int> flat;
                             for (const auto& row : modes)
                               flat.insert(flat.end(), row.begin(), row.end());
                             return flat;
                           }(),
                           icl, accepted});
  }

  // Point estimate: most-visited couple, ties by best integrated likelihood.
  const TallyEntry* best = nullptr;
  for (const auto& [key, entry] : res.tally) {
    if (!best || entry.visits > best->visits ||
        (entry.visits == best->visits && entry.best_log_icl > best->best_log_icl))
      best = &entry;
  }
  if (best) {
    res.best_sigma = BlockPartition(best->sigma_blocks, ds.num_vars());
    res.best_modes = best->modes;
    res.best_log_icl = best->best_log_icl;
  } else {
    res.best_sigma = sigma;
    res.best_modes = modes;
  }
  return res;
}

std::map<std::string, TallyEntry> pool_tallies(const std::vector<ChainResult>& chains) {
  std::map<std::string, TallyEntry> pooled;
  for (const auto& chain : chains)
    for (const auto& [key, entry] : chain.tally) {
      auto& dst = pooled[key];
      if (dst.visits == 0) {
        dst.modes = entry.modes;
        dst.sigma_blocks = entry.sigma_blocks;
      }
      dst.visits += entry.visits;
      dst.best_log_icl = std::max(dst.best_log_icl, entry.best_log_icl);
    }
  return pooled;
}

SelectResult select_model(const CategoricalDataset& ds, const SelectOptions& opts) {
  if (opts.g_min < 1 || opts.g_max < opts.g_min)
    throw DataError("select_model: invalid class-count range");
  SelectResult result;
  for (int g = opts.g_min; g <= opts.g_max; ++g) {
    std::vector<ChainResult> chains(opts.chains);
    parallel_for(static_cast<std::size_t>(opts.chains), opts.threads, [&](std::size_t c) {
      ChainOptions copts = opts.chain;
      copts.seed = derive_seed(opts.chain.seed, 0x4348 /*CH*/, g, c);
      chains[c] = run_chain(ds, g, copts);
    });
    const auto pooled = pool_tallies(chains);
    const TallyEntry* best = nullptr;
    for (const auto& [key, entry] : pooled)
      if (!best || entry.visits > best->visits ||
          (entry.visits == best->visits && entry.best_log_icl > best->best_log_icl))
        best = &entry;
    if (!best) throw EstimationError("select_model: no post-burn-in samples");

    GResult gr;
    gr.g = g;
    gr.sigma = BlockPartition(best->sigma_blocks, ds.num_vars());
    gr.modes = best->modes;
    // The sampler can favour couples whose mode counts exceed the number of
    // crossings actually observed; the maximum-likelihood fit is then on the
    // boundary (a zero-mass mode or zero residual). Clamp each ell_kj to one
    // below the occupied crossings of its block so the fit stays interior.
    {
      const auto enc_all = encode_blocks(ds, gr.sigma);
      for (int j = 0; j < enc_all.num_blocks(); ++j) {
        std::vector<char> seen(static_cast<std::size_t>(enc_all.m[j]), 0);
        for (auto c : enc_all.crossings[j]) seen[c] = 1;
        const int occupied = static_cast<int>(std::count(seen.begin(), seen.end(), char(1)));
        const int cap = std::max(1, occupied - 1);
        for (auto& row : gr.modes) row[j] = std::min(row[j], cap);
      }
    }
    const ModelSpec spec(g, gr.sigma, gr.modes, var_modalities(ds));
    EmOptions eopts = opts.em;
    eopts.seed = derive_seed(opts.em.seed, 0x454d46 /*EMF*/, g);
    eopts.threads = opts.threads;
    gr.fit = em_fit(encode_blocks(ds, gr.sigma), spec, eopts);
    gr.nu = spec.nu();
    gr.bic = bic(gr.fit.loglik, gr.nu, ds.n());
    if (opts.chain.record_trace)
      for (auto& ch : chains) gr.traces.push_back(std::move(ch.trace));
    result.per_g.push_back(std::move(gr));
  }
  result.best_index = 0;
  for (std::size_t i = 1; i < result.per_g.size(); ++i)
    if (result.per_g[i].bic > result.per_g[result.best_index].bic)
      result.best_index = static_cast<int>(i);
  return result;
}

}  // namespace cmm
