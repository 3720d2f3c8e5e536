#pragma once

#include <span>
#include <vector>

#include "cmm/encode.hpp"
#include "cmm/model.hpp"
#include "cmm/util.hpp"

namespace cmm {

// Per-(class, block) log-alpha lookup built once per parameter set; the
// per-individual densities are then plain table sums.
class LogAlphaTable {
 public:
  LogAlphaTable(const MixtureParams& params, const ModelSpec& spec);

  double component_logpdf(const EncodedDataset& enc, int i, int k) const;
  double mixture_logpdf(const EncodedDataset& enc, int i) const;
  // Writes the g per-class values log(pi_k) + component_logpdf into `out`.
  void weighted_logs(const EncodedDataset& enc, int i, std::span<double> out) const;

  int g() const { return static_cast<int>(log_pi_.size()); }

 private:
  std::vector<double> log_pi_;
  std::vector<std::vector<std::vector<double>>> log_alpha_;  // [k][j][crossing]
};

double component_logpdf(const EncodedDataset& enc, int i,
                        std::span<const BlockParams> class_blocks, const ModelSpec& spec);
double mixture_logpdf(const EncodedDataset& enc, int i, const MixtureParams& params,
                      const ModelSpec& spec);
double observed_loglik(const EncodedDataset& enc, const MixtureParams& params,
                       const ModelSpec& spec);
double complete_loglik(const EncodedDataset& enc, std::span<const int> labels,
                       const MixtureParams& params, const ModelSpec& spec);

// Interpretability summary: kappa = ell/(m-1), rho = total mode mass.
struct SummaryTable {
  Matrix kappa;  // g x d
  Matrix rho;
};
SummaryTable summaries(const MixtureParams& params, const ModelSpec& spec);

}  // namespace cmm
