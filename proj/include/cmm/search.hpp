#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmm/bayes.hpp"
#include "cmm/dataset.hpp"
#include "cmm/em.hpp"
#include "cmm/encode.hpp"
#include "cmm/model.hpp"

namespace cmm {

// All partitions reachable by moving exactly one variable to another existing
// block or to a new singleton; canonicalized and deduplicated.
std::vector<BlockPartition> neighborhood(const BlockPartition& sigma);

struct Proposal {
  BlockPartition sigma;
  std::vector<std::vector<int>> modes;  // candidate ell
  double log_q_ratio = 0.0;             // log q(old|new) - log q(new|old)
  bool auto_reject = false;              // block-size cap exceeded
};

struct ChainOptions {
  long iterations = 3000;
  long burnin = 1000;
  std::uint64_t seed = 0;
  long max_block_crossings = 512;
  bool record_trace = false;
  // The exact windowed Gibbs update on ell (with its Metropolis correction)
  // can be disabled to reproduce the uncorrected sweep.
  bool metropolize_sweep = true;
};

// sigma* uniform on V(sigma); ell resampled uniformly over {1..m-1} for every
// class of each block that changed; log_q_ratio makes the MH acceptance
// ratio exact.
Proposal propose(const BlockPartition& sigma, const std::vector<std::vector<int>>& modes,
                 int g, const std::vector<long>& var_mods, long max_block_crossings,
                 RngStream& rng);

// Acceptance log-probability for a structure move (Metropolis-Hastings): the
// integrated complete-data likelihood difference plus the proposal ratio.
double mh_log_acceptance(double log_icl_current, double log_icl_candidate,
                         double log_q_ratio);

struct TraceRow {
  long iteration;
  std::string sigma;
  std::vector<int> modes_flat;  // k-major
  double log_evidence;
  bool accepted;
};

struct TallyEntry {
  long visits = 0;
  double best_log_icl = -1e308;
  std::vector<std::vector<int>> modes;
  std::vector<std::vector<int>> sigma_blocks;
};

struct ChainResult {
  BlockPartition best_sigma;
  std::vector<std::vector<int>> best_modes;
  double best_log_icl = -1e308;
  std::map<std::string, TallyEntry> tally;  // key: canonical "sigma;ell"
  std::vector<TraceRow> trace;
  long accepted_moves = 0;
  long auto_rejects = 0;
  long empty_class_events = 0;

  ChainResult() : best_sigma({{0}}, 1) {}
};

std::string couple_key(const BlockPartition& sigma, const std::vector<std::vector<int>>& modes);

// One Metropolis-within-Gibbs chain at fixed g over (Z, theta, sigma, ell).
ChainResult run_chain(const CategoricalDataset& ds, int g, const ChainOptions& opts);

// Deterministic merge of per-chain tallies (independent of execution order).
std::map<std::string, TallyEntry> pool_tallies(const std::vector<ChainResult>& chains);

struct SelectOptions {
  int g_min = 1;
  int g_max = 4;
  int chains = 25;
  ChainOptions chain;
  EmOptions em;
  unsigned threads = 1;
};

struct GResult {
  int g;
  BlockPartition sigma;
  std::vector<std::vector<int>> modes;
  EmResult fit;
  double bic;  // observed-data BIC
  long nu;
  std::vector<std::vector<TraceRow>> traces;  // per chain, when recording

  GResult() : g(0), sigma({{0}}, 1) {}
};

struct SelectResult {
  std::vector<GResult> per_g;  // ascending g
  int best_index = -1;         // argmax BIC, ties to smaller g
};

// For each g: run `chains` independent chains, pool tallies, take the most
// visited (sigma, ell) with ties broken by best integrated likelihood, fit it
// by EM, then rank all g by observed-data BIC.
SelectResult select_model(const CategoricalDataset& ds, const SelectOptions& opts);

}  // namespace cmm
