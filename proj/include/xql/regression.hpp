#ifndef XQL_REGRESSION_HPP
#define XQL_REGRESSION_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "xql/gumbel.hpp"
#include "xql/rng.hpp"

namespace xql {

struct RegressionConfig {
  double beta = 1.0;       // temperature
  double clip = 7.0;       // symmetric clamp on z = (target - pred)/beta
  double lr = 0.05;        // SGD step size
  int batch_size = 32;
  long max_steps = 10000;
  double tol = 1e-6;       // stop when max |weight update| over an epoch < tol
  std::uint64_t seed = 0;
  void validate() const;
};

// Linear value model v(s) = w . phi(s) with a fixed caller-supplied feature
// map. The tabular one-hot map is the default construction.
struct LinearModel {
  std::vector<double> weights;
  std::function<std::vector<double>(int)> feature_map;

  static LinearModel one_hot(int n_states);
  double predict(int state) const;
  std::vector<double> predict_all(int n_states) const;
};

// What one stabilized-loss evaluation reports. `shift` is the detached max_z
// used to rescale the exponentials; the gradient treats it as a constant.
struct LossReport {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d pred_i
  double shift = 0.0;
};

// Stabilized Gumbel (Linex) loss over residuals z_i = (target_i - pred_i)/beta:
//   z_i    = clamp(z_i, -clip, clip)
//   max_z  = max(max_i z_i, -1)      (treated as a constant by the gradient)
//   loss   = mean_i [ e^{z_i - max_z} - z_i e^{-max_z} - e^{-max_z} ]
//   grad_i = (-1/beta) e^{-max_z} (e^{z_i} - 1) / n
// Clamping saturates the residual rather than masking its gradient, so far
// targets keep a bounded pull of magnitude <= (e^clip - 1) e^{-max_z} / beta.
LossReport gumbel_loss(std::span<const double> preds,
                       std::span<const double> targets, double beta,
                       double clip);

// Same loss with per-sample weights (normalized internally). Duplicating a
// sample k times and weighting it k are equivalent.
LossReport gumbel_loss_weighted(std::span<const double> preds,
                                std::span<const double> targets,
                                std::span<const double> weights, double beta,
                                double clip);

// The analytic minimizer of the Gumbel loss: the weighted LSE of the batch.
double gumbel_regress_closed_form(const SampleBatch& batch, double beta);

// A (state, target) sample source. Called once per drawn sample; the engine
// owns the RNG so a fixed config seed fixes the whole run.
using TargetStream = std::function<std::pair<int, double>(Rng&)>;

// Minibatch SGD on the stabilized Gumbel loss. Stops at max_steps or when the
// largest absolute weight change over a 100-step epoch falls below cfg.tol.
// Throws divergence_error (naming the step) if the loss exceeds 1e6 or goes
// non-finite.
LinearModel gumbel_regress_sgd(const TargetStream& stream, LinearModel model,
                               const RegressionConfig& cfg);

// Unbiased partition-function estimate mean_i w_i e^{x_i/beta}, evaluated in
// shifted log space and exponentiated once at the end.
double partition_estimator(const SampleBatch& batch, double beta);

// Hoeffding-style one-sided bounds for the partition and log-partition
// estimators over n samples bounded by |x| <= x_max, at confidence 1 - delta:
//   partition:     sinh(x_max/beta) sqrt(2 log(1/delta) / n)
//   log-partition: beta sinh(x_max/beta) / z_hat * sqrt(2 log(1/delta) / n)
double pac_bound_partition(double x_max, double beta, double delta, long n);
double pac_bound_log_partition(double x_max, double beta, double delta, long n,
                               double z_hat);

// Worst-case LSE overestimation bias beta * log cosh(q_max/beta), computed as
// t + log((1 + e^{-2t})/2) with t = q_max/beta so large t cannot overflow.
double bias_bound(double q_max, double beta);

}  // namespace xql

#endif  // XQL_REGRESSION_HPP
