#include "xql/regression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "xql/errors.hpp"

namespace xql {

void RegressionConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("RegressionConfig: beta must be > 0");
  if (!(clip > 0.0)) throw std::invalid_argument("RegressionConfig: clip must be > 0");
  if (!(lr > 0.0)) throw std::invalid_argument("RegressionConfig: lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("RegressionConfig: batch_size must be >= 1");
  if (max_steps < 0) throw std::invalid_argument("RegressionConfig: max_steps must be >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("RegressionConfig: tol must be > 0");
}

LinearModel LinearModel::one_hot(int n_states) {
  LinearModel m;
  m.weights.assign(n_states, 0.0);
  m.feature_map = [n_states](int s) {
    std::vector<double> phi(n_states, 0.0);
    phi[s] = 1.0;
    return phi;
  };
  return m;
}

double LinearModel::predict(int state) const {
  const std::vector<double> phi = feature_map(state);
  if (phi.size() != weights.size())
    throw std::invalid_argument("LinearModel: feature/weight dimension mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) v += weights[i] * phi[i];
  return v;
}

std::vector<double> LinearModel::predict_all(int n_states) const {
  std::vector<double> out(n_states);
  for (int s = 0; s < n_states; ++s) out[s] = predict(s);
  return out;
}

LossReport gumbel_loss_weighted(std::span<const double> preds,
                                std::span<const double> targets,
                                std::span<const double> weights, double beta,
                                double clip) {
  if (preds.size() != targets.size() || preds.size() != weights.size())
    throw std::invalid_argument("gumbel_loss: length mismatch");
  if (preds.empty()) throw std::invalid_argument("gumbel_loss: empty batch");
  if (!(beta > 0.0)) throw std::invalid_argument("gumbel_loss: beta must be > 0");
  if (!(clip > 0.0)) throw std::invalid_argument("gumbel_loss: clip must be > 0");

  const std::size_t n = preds.size();
  std::vector<double> z(n);
  double max_z = -1.0;
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = std::clamp((targets[i] - preds[i]) / beta, -clip, clip);
    max_z = std::max(max_z, z[i]);
    wsum += weights[i];
  }
  const double es = std::exp(-max_z);

  LossReport report;
  report.shift = max_z;
  report.grad.resize(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i] / wsum;
    loss += w * (std::exp(z[i] - max_z) - z[i] * es - es);
    report.grad[i] = -(w / beta) * es * (std::exp(z[i]) - 1.0);
  }
  report.loss = loss;
  return report;
}

LossReport gumbel_loss(std::span<const double> preds,
                       std::span<const double> targets, double beta,
                       double clip) {
  const std::vector<double> uniform(preds.size(), 1.0);
  return gumbel_loss_weighted(preds, targets, uniform, beta, clip);
}

double gumbel_regress_closed_form(const SampleBatch& batch, double beta) {
  return lse_operator(batch, beta);
}

LinearModel gumbel_regress_sgd(const TargetStream& stream, LinearModel model,
                               const RegressionConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t dim = model.weights.size();
  constexpr long kEpoch = 100;

  std::vector<int> states(cfg.batch_size);
  std::vector<double> preds(cfg.batch_size), targets(cfg.batch_size);
  std::vector<std::vector<double>> phis(cfg.batch_size);
  std::vector<double> epoch_start = model.weights;

  for (long step = 0; step < cfg.max_steps; ++step) {
    for (int i = 0; i < cfg.batch_size; ++i) {
      auto [s, t] = stream(rng);
      states[i] = s;
      targets[i] = t;
      phis[i] = model.feature_map(s);
      double v = 0.0;
      for (std::size_t d = 0; d < dim; ++d) v += model.weights[d] * phis[i][d];
      preds[i] = v;
    }
    const LossReport report = gumbel_loss(preds, targets, cfg.beta, cfg.clip);
    if (!std::isfinite(report.loss) || report.loss > 1e6) {
      std::ostringstream msg;
      msg << "gumbel_regress_sgd: diverged at step " << step
          << " (loss=" << report.loss << ")";
      throw divergence_error(msg.str(), step);
    }
    for (int i = 0; i < cfg.batch_size; ++i)
      for (std::size_t d = 0; d < dim; ++d)
        model.weights[d] -= cfg.lr * report.grad[i] * phis[i][d];

    if ((step + 1) % kEpoch == 0) {
      double max_delta = 0.0;
      for (std::size_t d = 0; d < dim; ++d)
        max_delta = std::max(max_delta, std::abs(model.weights[d] - epoch_start[d]));
      if (max_delta < cfg.tol) break;
      epoch_start = model.weights;
    }
  }
  return model;
}

double partition_estimator(const SampleBatch& batch, double beta) {
  return std::exp(lse_operator(batch, beta) / beta);
}

double pac_bound_partition(double x_max, double beta, double delta, long n) {
  if (!(x_max > 0.0)) throw std::invalid_argument("pac_bound: x_max must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("pac_bound: beta must be > 0");
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("pac_bound: delta must be in (0, 1]");
  if (n < 1) throw std::invalid_argument("pac_bound: n must be >= 1");
  return std::sinh(x_max / beta) *
         std::sqrt(2.0 * std::log(1.0 / delta) / static_cast<double>(n));
}

double pac_bound_log_partition(double x_max, double beta, double delta, long n,
                               double z_hat) {
  if (!(z_hat > 0.0)) throw std::invalid_argument("pac_bound: z_hat must be > 0");
  return beta * pac_bound_partition(x_max, beta, delta, n) / z_hat;
}

double bias_bound(double q_max, double beta) {
  if (!(q_max > 0.0)) throw std::invalid_argument("bias_bound: q_max must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("bias_bound: beta must be > 0");
  const double t = q_max / beta;
  // log cosh(t) without overflow for large t.
  return beta * (t + std::log((1.0 + std::exp(-2.0 * t)) / 2.0));
}

}  // namespace xql
