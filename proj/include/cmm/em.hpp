#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cmm/encode.hpp"
#include "cmm/likelihood.hpp"
#include "cmm/model.hpp"

namespace cmm {

// Signals an M-step that cannot produce valid parameters (empty class or a
// mode crossing with zero weight); em_fit discards the run and redraws.
struct DegenerateFit : NumericError {
  using NumericError::NumericError;
};

Matrix e_step(const EncodedDataset& enc, const MixtureParams& params, const ModelSpec& spec);
MixtureParams m_step(const SufficientStats& stats, const ModelSpec& spec);

struct EmOptions {
  int starts = 25;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct EmResult {
  MixtureParams params;
  double loglik = 0.0;
  Matrix responsibilities;
  int iterations = 0;   // of the winning run
  int best_start = -1;  // deterministic tie-break: lowest start index
  int degenerate_restarts = 0;
};

// Best observed-data log-likelihood over random starts; each start draws flat
// Dirichlet responsibilities per individual and begins with an M-step.
EmResult em_fit(const EncodedDataset& enc, const ModelSpec& spec, const EmOptions& opts);

// Latent-class baseline: CMM with singleton blocks and ell = m_b - 1.
EmResult cim_em_fit(const CategoricalDataset& ds, int g, const EmOptions& opts);

}  // namespace cmm
