#ifndef XQL_GEM_HPP
#define XQL_GEM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "xql/gumbel.hpp"
#include "xql/mdp.hpp"

namespace xql {

enum class NoiseFamily { gaussian, gumbel, uniform };

// Injected estimation-noise model. All families are zero-mean: gaussian is
// N(0, scale), uniform is U(-scale, scale), gumbel is located at
// -scale * gamma_E so its mean vanishes. noise_scale == 0 is the noiseless
// limit (plain asynchronous value iteration).
struct GemConfig {
  NoiseFamily noise_family = NoiseFamily::gaussian;
  double noise_scale = 1.0;
  int iterations = 30;        // sweeps of asynchronous noisy backups
  int samples_per_iter = 1000;
  std::uint64_t seed = 0;
  void validate() const;
};

struct IterationFit {
  std::optional<GumbelParams> gumbel;
  std::optional<GaussianParams> gaussian;
  double gumbel_ll = 0.0;    // average per-sample log likelihood
  double gaussian_ll = 0.0;
};

struct ErrorTrace {
  // Bellman residuals r + gamma E_{s'}[max_a' Q(s',a')] - Q(s,a) of the
  // evolving table, sampled at samples_per_iter random non-terminal cells
  // after each sweep, with MLE fits of both families.
  std::vector<SampleBatch> residuals;
  std::vector<IterationFit> fits;
  // Deviations of each sweep's bootstrapped targets from their conditional
  // expected backup: the injected noise after one max propagation. For
  // Gumbel(0, beta) injections this is exactly Gumbel-distributed with scale
  // gamma * beta.
  std::vector<SampleBatch> target_noise;
  QTable final_q;

  SampleBatch pooled_late_residuals() const;  // final third of the iterations
  SampleBatch pooled_late_target_noise() const;
};

// Propagates estimation noise through max backups. One iteration performs
// |S x A| asynchronous single-cell updates in a seeded random order,
//   Q(s,a) <- r(s,a) + gamma E_{s'}[ max_{a'} (Q(s',a') + eps(s',a')) ],
// with fresh i.i.d. noise per update (conditional independence across cells).
// Residual batches are recorded after every sweep. With noise_scale == 0 the
// run is plain asynchronous value iteration, bit-for-bit reproducible from
// the seed.
ErrorTrace noisy_q_iteration(const TabularMdp& mdp, const GemConfig& cfg);

// One-step propagation of a Gumbel value belief through a deterministic
// backup: per (s,a), draws Z(s',a') ~ Gumbel(Q(s',a'), beta) independently,
// forms r(s,a) + gamma max_{a'} Z(s',a'), and MLE-fits the result. The fit
// should have scale gamma*beta and location r + gamma * log_sum_exp(Q(s',.), beta).
std::vector<GumbelParams> gumbel_process_step(const QTable& q_loc, double beta,
                                              const TabularMdp& mdp,
                                              long trials, std::uint64_t seed);

enum class NoiseConvention {
  zero_mean,      // Gumbel(-beta*gamma_E, beta): E[max] matches the LSE exactly
  zero_location,  // Gumbel(0, beta): E[max] overshoots the LSE by beta*gamma_E
};

struct McfaddenRustReport {
  std::vector<double> value_gap;  // per state: |E[max_a(q+eps)] - log_sum_exp(q, beta)|
  std::vector<double> policy_tv;  // per state: TV(argmax freq, softmax(q/beta))
  std::vector<double> offset;     // per state: signed E[max] - LSE
};

// Monte-Carlo check of the reward-noise account of soft optimality: adding
// i.i.d. Gumbel noise to the rows of the soft-optimal Q recovers the LSE as
// the expected max and the softmax as the argmax law. The argmax frequencies
// are location-invariant; the value gap is zero only under the zero-mean
// convention.
McfaddenRustReport mcfadden_rust_check(const TabularMdp& mdp, double beta,
                                       long trials, std::uint64_t seed,
                                       NoiseConvention convention =
                                           NoiseConvention::zero_mean);

}  // namespace xql

#endif  // XQL_GEM_HPP
