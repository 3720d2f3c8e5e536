#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmm/encode.hpp"
#include "cmm/model.hpp"
#include "cmm/rng.hpp"

namespace cmm {

// Fixed hyperparameters: Jeffreys Dirichlet(1/2) on proportions, flat
// (gamma = 1) truncated Dirichlet on block masses.
struct HyperParams {
  static constexpr double dirichlet_half = 0.5;
  static constexpr double gamma_kjh = 1.0;
};

// Draw pi from Dirichlet(1/2 + n_1, ..., 1/2 + n_g).
std::vector<double> sample_proportions(std::span<const double> nk, RngStream& rng);

// Dirac approximation of the mode-location conditional: indices of the ell
// largest counts, decreasing, ties by ascending crossing index.
std::vector<std::uint32_t> posterior_mode_locations(const BlockCounts& bc, int ell);

// Draw the mode-mass vector from the truncated Dirichlet posterior via the
// stick-breaking representation: each epsilon_h is an independent Beta
// (n_kj(h)+1, nbar^h+1) truncated to [1/(m-h+1), 1]. The result is
// canonicalized (modes sorted by decreasing mass) and satisfies the
// truncated-simplex constraint by construction.
BlockParams sample_block_probs(const BlockCounts& bc, double nk, int ell, long m,
                               RngStream& rng);

// One hard label per individual from the categorical full conditional.
std::vector<int> sample_labels(const EncodedDataset& enc, const MixtureParams& params,
                               const ModelSpec& spec, RngStream& rng);

// log p(X^j | Z, ell) for one (class, block): closed form with
// the continuous parameters integrated exactly and the mode locations
// collapsed to their posterior mode. `bc` supplies the ordered counts.
double log_integrated_block(const BlockCounts& bc, double nk, int ell, long m);

// Sum over classes and blocks; the p(Z|omega) factor is omitted since it is
// constant in (sigma, ell) at fixed Z and g and cancels in every ratio the
// sampler forms.
double log_integrated_complete(const SufficientStats& stats, const ModelSpec& spec);

// Variant of log_integrated_block under a uniform prior on the ordered,
// floor-constrained mass simplex (mode set uniform over the C(m, ell)
// subsets). The extra ordering-volume penalty makes the mode-count selection
// conservative: it essentially never overestimates ell. Used by the
// mode-count benchmark; the sampler keeps the stick-prior form above.
double log_integrated_block_ordered(const BlockCounts& bc, double nk, int ell, long m);

// argmax over ell in {1..m-1} of log_integrated_block_ordered.
int select_mode_count_integrated(const BlockCounts& bc, double nk, long m);
// argmax over ell of the maximized multinomial log-likelihood under the
// ell-mode constraint minus (ell/2) ln n.
int select_mode_count_bic(const BlockCounts& bc, double nk, long m);

// BIC-style penalized log-likelihood: loglik - (nu/2) ln n.
double bic(double loglik, long nu, long n);

}  // namespace cmm
