#include "cmm/likelihood.hpp"

#include <cmath>

namespace cmm {

LogAlphaTable::LogAlphaTable(const MixtureParams& params, const ModelSpec& spec) {
  log_pi_.resize(spec.g);
  log_alpha_.resize(spec.g);
  for (int k = 0; k < spec.g; ++k) {
    log_pi_[k] = std::log(params.pi[k]);
    log_alpha_[k].resize(spec.num_blocks());
    for (int j = 0; j < spec.num_blocks(); ++j)
      log_alpha_[k][j] = params.block[k][j].expand_log_alpha(spec.block_cards[j]);
  }
}

double LogAlphaTable::component_logpdf(const EncodedDataset& enc, int i, int k) const {
  double lp = 0.0;
  for (std::size_t j = 0; j < log_alpha_[k].size(); ++j)
    lp += log_alpha_[k][j][enc.crossings[j][i]];
  return lp;
}

double LogAlphaTable::mixture_logpdf(const EncodedDataset& enc, int i) const {
  std::vector<double> terms(log_pi_.size());
  weighted_logs(enc, i, terms);
  return log_sum_exp(terms);
}

void LogAlphaTable::weighted_logs(const EncodedDataset& enc, int i,
                                  std::span<double> out) const {
  for (std::size_t k = 0; k < log_pi_.size(); ++k)
    out[k] = log_pi_[k] + component_logpdf(enc, i, static_cast<int>(k));
}

double component_logpdf(const EncodedDataset& enc, int i,
                        std::span<const BlockParams> class_blocks, const ModelSpec& spec) {
  double lp = 0.0;
  for (int j = 0; j < spec.num_blocks(); ++j) {
    const auto alpha = class_blocks[j].expand_alpha(spec.block_cards[j]);
    lp += std::log(alpha[enc.crossings[j][i]]);
  }
  return lp;
}

double mixture_logpdf(const EncodedDataset& enc, int i, const MixtureParams& params,
                      const ModelSpec& spec) {
  LogAlphaTable table(params, spec);
  return table.mixture_logpdf(enc, i);
}

double observed_loglik(const EncodedDataset& enc, const MixtureParams& params,
                       const ModelSpec& spec) {
  LogAlphaTable table(params, spec);
  double ll = 0.0;
  for (int i = 0; i < enc.n; ++i) ll += table.mixture_logpdf(enc, i);
  return ll;
}

double complete_loglik(const EncodedDataset& enc, std::span<const int> labels,
                       const MixtureParams& params, const ModelSpec& spec) {
  LogAlphaTable table(params, spec);
  std::vector<double> terms(spec.g);
  double ll = 0.0;
  for (int i = 0; i < enc.n; ++i) {
    table.weighted_logs(enc, i, terms);
    ll += terms[labels[i]];
  }
  return ll;
}

SummaryTable summaries(const MixtureParams& params, const ModelSpec& spec) {
  SummaryTable table;
  table.kappa = Matrix(spec.g, spec.num_blocks());
  table.rho = Matrix(spec.g, spec.num_blocks());
  for (int k = 0; k < spec.g; ++k)
    for (int j = 0; j < spec.num_blocks(); ++j) {
      const int l = spec.modes[k][j];
      table.kappa(k, j) = static_cast<double>(l) / static_cast<double>(spec.block_cards[j] - 1);
      double rho = 0.0;
      for (int h = 0; h < l; ++h) rho += params.block[k][j].a[h];
      table.rho(k, j) = rho;
    }
  return table;
}

}  // namespace cmm
