#include "xql/gem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xql/errors.hpp"
#include "xql/rng.hpp"

namespace xql {

void GemConfig::validate() const {
  if (!(noise_scale >= 0.0))
    throw std::invalid_argument("GemConfig: noise_scale must be >= 0");
  if (iterations < 1) throw std::invalid_argument("GemConfig: iterations must be >= 1");
  if (samples_per_iter < 1)
    throw std::invalid_argument("GemConfig: samples_per_iter must be >= 1");
}

namespace {

double draw_noise(Rng& rng, NoiseFamily family, double scale) {
  switch (family) {
    case NoiseFamily::gaussian:
      return scale * rng.gaussian();
    case NoiseFamily::gumbel:
      return rng.gumbel(-scale * kEulerMascheroni, scale);
    case NoiseFamily::uniform:
      return rng.uniform(-scale, scale);
  }
  return 0.0;
}

IterationFit fit_batch(const SampleBatch& batch) {
  IterationFit fit;
  if (batch.max() - batch.min() <= 0.0) return fit;  // degenerate, leave empty
  fit.gumbel = fit_gumbel_mle(batch);
  fit.gaussian = fit_gaussian_mle(batch);
  fit.gumbel_ll = log_likelihood(batch, *fit.gumbel);
  fit.gaussian_ll = log_likelihood(batch, *fit.gaussian);
  return fit;
}

SampleBatch pool_final_third(const std::vector<SampleBatch>& batches) {
  SampleBatch pooled;
  const std::size_t from = batches.size() - batches.size() / 3;
  for (std::size_t i = from; i < batches.size(); ++i)
    pooled.values.insert(pooled.values.end(), batches[i].values.begin(),
                         batches[i].values.end());
  return pooled;
}

}  // namespace

SampleBatch ErrorTrace::pooled_late_residuals() const {
  return pool_final_third(residuals);
}

SampleBatch ErrorTrace::pooled_late_target_noise() const {
  return pool_final_third(target_noise);
}

ErrorTrace noisy_q_iteration(const TabularMdp& mdp, const GemConfig& cfg) {
  mdp.validate();
  cfg.validate();
  Rng rng(cfg.seed);

  std::vector<int> open;  // non-terminal (s,a) cells
  for (int s = 0; s < mdp.n_states; ++s)
    if (!mdp.is_terminal(s))
      for (int a = 0; a < mdp.n_actions; ++a) open.push_back(s * mdp.n_actions + a);

  QTable q(mdp.n_states, mdp.n_actions);
  std::vector<double> noise(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions,
                            0.0);

  // E_{s'}[max_{a'}(Q(s',a') + eps(s',a'))]; eps is the zero table when the
  // caller wants the clean backup expectation.
  const auto backup_future = [&](int s, int a, const std::vector<double>& eps) {
    double future = 0.0;
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
      const double pr = mdp.p(s, a, s2);
      if (pr == 0.0 || mdp.is_terminal(s2)) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int a2 = 0; a2 < mdp.n_actions; ++a2)
        best = std::max(best, q.at(s2, a2) +
                                  eps[static_cast<std::size_t>(s2) * mdp.n_actions + a2]);
      future += pr * best;
    }
    return future;
  };
  const std::vector<double> zero_noise(noise.size(), 0.0);

  ErrorTrace trace;
  trace.residuals.reserve(cfg.iterations);
  trace.fits.reserve(cfg.iterations);
  trace.target_noise.reserve(cfg.iterations);

  for (int it = 0; it < cfg.iterations; ++it) {
    // One sweep: |open| asynchronous noisy backups at randomly drawn cells.
    SampleBatch deviations;
    deviations.values.reserve(open.size());
    for (std::size_t u = 0; u < open.size(); ++u) {
      const int cell = open[rng.uniform_int(static_cast<int>(open.size()))];
      const int s = cell / mdp.n_actions, a = cell % mdp.n_actions;
      double target;
      if (cfg.noise_scale == 0.0) {
        target = mdp.r(s, a) + mdp.gamma * backup_future(s, a, zero_noise);
        deviations.values.push_back(0.0);
      } else {
        for (double& e : noise) e = draw_noise(rng, cfg.noise_family, cfg.noise_scale);
        target = mdp.r(s, a) + mdp.gamma * backup_future(s, a, noise);
        // deviation of the bootstrapped target from the clean backup of the
        // same table: the injected noise after one max propagation
        deviations.values.push_back(
            target - (mdp.r(s, a) + mdp.gamma * backup_future(s, a, zero_noise)));
      }
      q.at(s, a) = target;
    }
    trace.target_noise.push_back(std::move(deviations));

    // Bellman residuals of the post-sweep table at sampled cells.
    SampleBatch batch;
    batch.values.resize(cfg.samples_per_iter);
    for (int j = 0; j < cfg.samples_per_iter; ++j) {
      const int cell = open[rng.uniform_int(static_cast<int>(open.size()))];
      const int s = cell / mdp.n_actions, a = cell % mdp.n_actions;
      batch.values[j] =
          mdp.r(s, a) + mdp.gamma * backup_future(s, a, zero_noise) - q.at(s, a);
    }
    trace.fits.push_back(fit_batch(batch));
    trace.residuals.push_back(std::move(batch));
  }

  trace.final_q = std::move(q);
  return trace;
}

std::vector<GumbelParams> gumbel_process_step(const QTable& q_loc, double beta,
                                              const TabularMdp& mdp,
                                              long trials, std::uint64_t seed) {
  mdp.validate();
  if (!(beta > 0.0))
    throw std::invalid_argument("gumbel_process_step: beta must be > 0");
  if (!mdp.deterministic())
    throw std::invalid_argument("gumbel_process_step: mdp must be deterministic");

  std::vector<GumbelParams> fits(static_cast<std::size_t>(mdp.n_states) *
                                 mdp.n_actions);
  SampleBatch batch;
  batch.values.resize(trials);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (mdp.is_terminal(s)) continue;
      const int s2 = mdp.successor(s, a);
      if (mdp.is_terminal(s2)) continue;  // degenerate: no propagated belief
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s) * mdp.n_actions + a));
      for (long t = 0; t < trials; ++t) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a2 = 0; a2 < mdp.n_actions; ++a2)
          best = std::max(best, rng.gumbel(q_loc.at(s2, a2), beta));
        batch.values[t] = mdp.r(s, a) + mdp.gamma * best;
      }
      fits[static_cast<std::size_t>(s) * mdp.n_actions + a] = fit_gumbel_mle(batch);
    }
  return fits;
}

McfaddenRustReport mcfadden_rust_check(const TabularMdp& mdp, double beta,
                                       long trials, std::uint64_t seed,
                                       NoiseConvention convention) {
  mdp.validate();
  if (!(beta > 0.0))
    throw std::invalid_argument("mcfadden_rust_check: beta must be > 0");
  if (trials < 10000)
    throw std::invalid_argument("mcfadden_rust_check: trials must be >= 1e4");

  const PolicyTable uniform = PolicyTable::uniform(mdp.n_states, mdp.n_actions);
  const QTable q = solve_soft_mdp(mdp, uniform, beta).q;
  const double loc =
      convention == NoiseConvention::zero_mean ? -beta * kEulerMascheroni : 0.0;

  McfaddenRustReport report;
  report.value_gap.resize(mdp.n_states);
  report.policy_tv.resize(mdp.n_states);
  report.offset.resize(mdp.n_states);

  for (int s = 0; s < mdp.n_states; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    const std::vector<double> row = q.row(s);
    std::vector<long> counts(mdp.n_actions, 0);
    double mean_max = 0.0;
    for (long t = 0; t < trials; ++t) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double v = row[a] + rng.gumbel(loc, beta);
        if (v > best) {
          best = v;
          best_a = a;
        }
      }
      mean_max += best;
      ++counts[best_a];
    }
    mean_max /= static_cast<double>(trials);
    const double lse = log_sum_exp(row, beta);
    const std::vector<double> soft = softmax(row, beta);
    double tv = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a)
      tv += std::abs(static_cast<double>(counts[a]) / trials - soft[a]);
    report.offset[s] = mean_max - lse;
    report.value_gap[s] = std::abs(mean_max - lse);
    report.policy_tv[s] = 0.5 * tv;
  }
  return report;
}

}  // namespace xql
