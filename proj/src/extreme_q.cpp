#include "xql/extreme_q.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "xql/errors.hpp"
#include "xql/gumbel.hpp"
#include "xql/policy.hpp"
#include "xql/rng.hpp"

namespace xql {

void XqlConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("XqlConfig: beta must be > 0");
  if (!(clip > 0.0)) throw std::invalid_argument("XqlConfig: clip must be > 0");
  if (!(lr > 0.0)) throw std::invalid_argument("XqlConfig: lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("XqlConfig: batch_size must be >= 1");
  if (total_steps < 1) throw std::invalid_argument("XqlConfig: total_steps must be >= 1");
  if (v_updates < 1) throw std::invalid_argument("XqlConfig: v_updates must be >= 1");
}

LinearModel extreme_v_update(LinearModel v, const QTable& q,
                             std::span<const Transition> batch,
                             const XqlConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("extreme_v_update: empty batch");
  const std::size_t n = batch.size();
  std::vector<double> preds(n), targets(n);
  std::vector<std::vector<double>> phis(n);
  for (std::size_t i = 0; i < n; ++i) {
    phis[i] = v.feature_map(batch[i].s);
    double pred = 0.0;
    for (std::size_t d = 0; d < v.weights.size(); ++d)
      pred += v.weights[d] * phis[i][d];
    preds[i] = pred;
    targets[i] = q.at(batch[i].s, batch[i].a);
  }
  const LossReport report = gumbel_loss(preds, targets, cfg.beta, cfg.clip);
  if (!std::isfinite(report.loss) || report.loss > 1e6)
    throw divergence_error("extreme_v_update: loss diverged", -1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < v.weights.size(); ++d)
      v.weights[d] -= cfg.lr * report.grad[i] * phis[i][d];
  return v;
}

QTable q_mse_update(QTable q, const LinearModel& v,
                    std::span<const Transition> batch, const XqlConfig& cfg,
                    double gamma) {
  if (batch.empty()) throw std::invalid_argument("q_mse_update: empty batch");
  for (const Transition& t : batch) {
    const double target = t.done ? t.r : t.r + gamma * v.predict(t.s_next);
    q.at(t.s, t.a) += cfg.lr * (target - q.at(t.s, t.a));
  }
  return q;
}

double fit_gumbel_scalar(std::span<const double> targets,
                         std::span<const double> weights, double beta,
                         double clip) {
  if (targets.empty() || targets.size() != weights.size())
    throw std::invalid_argument("fit_gumbel_scalar: bad batch");
  double lo = *std::min_element(targets.begin(), targets.end());
  double hi = *std::max_element(targets.begin(), targets.end());
  if (hi == lo) return hi;
  const auto residual_sum = [&](double value) {
    double acc = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double z = std::clamp((targets[i] - value) / beta, -clip, clip);
      acc += weights[i] * (std::exp(z) - 1.0);
    }
    return acc;  // decreasing in value; root is the loss minimizer
  };
  for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual_sum(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double fit_mean_scalar(std::span<const double> targets,
                       std::span<const double> weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    num += weights[i] * targets[i];
    den += weights[i];
  }
  return num / den;
}

struct SourceGroup {
  // Unique (r, s_next, done) outcomes observed from one state with counts;
  // for per-state value fitting the action identity does not matter.
  std::vector<double> reward;
  std::vector<int> next;
  std::vector<char> done;
  std::vector<double> count;
};

std::vector<SourceGroup> group_by_state(const TransitionDataset& data,
                                        int n_states) {
  std::vector<std::map<std::tuple<int, double, int, char>, double>> maps(n_states);
  for (const Transition& t : data.transitions)
    maps[t.s][{t.a, t.r, t.s_next, static_cast<char>(t.done)}] += 1.0;
  std::vector<SourceGroup> groups(n_states);
  for (int s = 0; s < n_states; ++s)
    for (const auto& [key, count] : maps[s]) {
      groups[s].reward.push_back(std::get<1>(key));
      groups[s].next.push_back(std::get<2>(key));
      groups[s].done.push_back(std::get<3>(key));
      groups[s].count.push_back(count);
    }
  return groups;
}

struct SaGroup {
  double reward = 0.0;
  int next = -1;
  bool done = false;
  double count = 0.0;
  bool present() const { return count > 0.0; }
};

// Deterministic-dynamics grouping: every occurrence of (s,a) must share one
// (r, s_next, done) outcome.
std::vector<SaGroup> group_by_state_action(const TransitionDataset& data,
                                           int n_states, int n_actions) {
  std::vector<SaGroup> groups(static_cast<std::size_t>(n_states) * n_actions);
  for (const Transition& t : data.transitions) {
    SaGroup& g = groups[static_cast<std::size_t>(t.s) * n_actions + t.a];
    if (g.present()) {
      if (g.reward != t.r || g.next != t.s_next || g.done != t.done)
        throw std::invalid_argument(
            "dataset has stochastic outcomes; deterministic dynamics required");
    } else {
      g.reward = t.r;
      g.next = t.s_next;
      g.done = t.done;
    }
    g.count += 1.0;
  }
  return groups;
}

}  // namespace

XqlResult xql_offline(const TabularMdp& mdp, const TransitionDataset& data,
                      const XqlConfig& cfg, std::span<const double> start) {
  cfg.validate();
  mdp.validate();
  data.validate(mdp.n_states, mdp.n_actions);

  std::vector<double> start_dist(start.begin(), start.end());
  if (start_dist.empty()) {
    start_dist.assign(mdp.n_states, 0.0);
    int open = 0;
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_terminal(s)) ++open;
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_terminal(s)) start_dist[s] = 1.0 / open;
  }

  const PolicyTable mu = empirical_behavior_policy(data, mdp.n_states, mdp.n_actions);
  const SolveResult oracle = solve_soft_mdp(mdp, mu, cfg.beta);
  constexpr double kAwrCap = 100.0;

  Rng rng(cfg.seed);
  QTable q(mdp.n_states, mdp.n_actions);
  LinearModel v = LinearModel::one_hot(mdp.n_states);

  const long checkpoint_every = std::max<long>(1, cfg.total_steps / 50);
  std::vector<TraceRow> trace;
  std::vector<Transition> batch(cfg.batch_size);
  double last_v_loss = 0.0, last_q_loss = 0.0;

  const auto checkpoint = [&](long step) {
    ValueTable vt{v.predict_all(mdp.n_states)};
    const PolicyTable pi = awr_policy(q, vt, mu, cfg.beta, kAwrCap);
    double gap = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
      gap = std::max(gap, std::abs(vt.at(s) - oracle.v.at(s)));
    trace.push_back({step, last_v_loss, last_q_loss,
                     evaluate_policy(mdp, pi, start_dist), gap});
  };
  checkpoint(0);

  auto draw_batch = [&]() {
    for (int i = 0; i < cfg.batch_size; ++i)
      batch[i] = data.transitions[rng.uniform_int(static_cast<int>(data.size()))];
  };

  for (long step = 1; step <= cfg.total_steps; ++step) {
    draw_batch();
    {
      double acc = 0.0;
      for (const Transition& t : batch) {
        const double target = t.done ? t.r : t.r + mdp.gamma * v.predict(t.s_next);
        const double diff = q.at(t.s, t.a) - target;
        acc += diff * diff;
      }
      last_q_loss = acc / cfg.batch_size;
    }
    try {
      q = q_mse_update(std::move(q), v, batch, cfg, mdp.gamma);
      for (int j = 0; j < cfg.v_updates; ++j) {
        draw_batch();
        std::vector<double> preds(cfg.batch_size), targets(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
          preds[i] = v.predict(batch[i].s);
          targets[i] = q.at(batch[i].s, batch[i].a);
        }
        last_v_loss = gumbel_loss(preds, targets, cfg.beta, cfg.clip).loss;
        v = extreme_v_update(std::move(v), q, batch, cfg);
      }
    } catch (const divergence_error& e) {
      throw xql_divergence_error(
          std::string("xql_offline: diverged: ") + e.what(), step,
          std::move(trace));
    }

    if (step % checkpoint_every == 0 || step == cfg.total_steps)
      checkpoint(step);
  }

  // Refine to the joint fixed point of the dataset: V(s) the Gumbel fit of
  // Q(s,.) over the empirical action frequencies, Q(s,a) the empirical mean
  // of r + gamma V(s'). This is what the SGD loop converges to in the limit.
  std::vector<double> values = v.predict_all(mdp.n_states);
  std::vector<std::vector<double>> action_counts(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    action_counts[s].assign(mdp.n_actions, 0.0);
  }
  for (const Transition& t : data.transitions) action_counts[t.s][t.a] += 1.0;

  for (int round = 0; round < 10000; ++round) {
    // Q given V: group means of r + gamma V(s').
    QTable q_new = q;
    {
      std::vector<double> sum(q.values.size(), 0.0), cnt(q.values.size(), 0.0);
      for (const Transition& t : data.transitions) {
        const double target =
            t.done ? t.r : t.r + mdp.gamma * values[t.s_next];
        sum[static_cast<std::size_t>(t.s) * mdp.n_actions + t.a] += target;
        cnt[static_cast<std::size_t>(t.s) * mdp.n_actions + t.a] += 1.0;
      }
      for (std::size_t i = 0; i < sum.size(); ++i)
        if (cnt[i] > 0.0) q_new.values[i] = sum[i] / cnt[i];
    }
    // V given Q: exact per-state Gumbel fit over empirical action weights.
    double delta = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      std::vector<double> targets, weights;
      for (int a = 0; a < mdp.n_actions; ++a)
        if (action_counts[s][a] > 0.0) {
          targets.push_back(q_new.at(s, a));
          weights.push_back(action_counts[s][a]);
        }
      if (targets.empty()) continue;
      const double fitted =
          fit_gumbel_scalar(targets, weights, cfg.beta, cfg.clip);
      delta = std::max(delta, std::abs(fitted - values[s]));
      values[s] = fitted;
    }
    for (std::size_t i = 0; i < q.values.size(); ++i)
      delta = std::max(delta, std::abs(q_new.values[i] - q.values[i]));
    q = std::move(q_new);
    if (delta < 1e-12) break;
  }

  XqlResult out;
  out.q = std::move(q);
  out.v.values = values;
  out.pi = awr_policy(out.q, out.v, mu, cfg.beta, kAwrCap);
  out.trace = std::move(trace);
  return out;
}

XqlResult xql_online(const TabularMdp& mdp, const XqlConfig& cfg,
                     std::span<const double> start, int episode_cap,
                     int snapshot_interval, std::size_t replay_capacity) {
  cfg.validate();
  mdp.validate();
  if (cfg.mode != XqlMode::online)
    throw std::invalid_argument("xql_online: cfg.mode must be online");

  std::vector<double> start_dist(start.begin(), start.end());
  if (start_dist.empty()) {
    start_dist.assign(mdp.n_states, 0.0);
    int open = 0;
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_terminal(s)) ++open;
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_terminal(s)) start_dist[s] = 1.0 / open;
  }

  const PolicyTable uniform = PolicyTable::uniform(mdp.n_states, mdp.n_actions);
  const SolveResult oracle = solve_soft_mdp(mdp, uniform, cfg.beta);

  Rng rng(cfg.seed);
  QTable q(mdp.n_states, mdp.n_actions);
  LinearModel v = LinearModel::one_hot(mdp.n_states);
  PolicyTable snapshot = reverse_kl_policy(q, uniform, cfg.beta);

  std::vector<Transition> replay;
  replay.reserve(std::min<std::size_t>(replay_capacity, 1 << 20));
  std::size_t replay_head = 0;  // FIFO eviction cursor

  const long checkpoint_every = std::max<long>(1, cfg.total_steps / 50);
  std::vector<TraceRow> trace;
  std::vector<Transition> batch(cfg.batch_size);
  double last_v_loss = 0.0, last_q_loss = 0.0;

  const auto checkpoint = [&](long step) {
    ValueTable vt{v.predict_all(mdp.n_states)};
    double gap = 0.0;
    for (int st = 0; st < mdp.n_states; ++st)
      gap = std::max(gap, std::abs(vt.at(st) - oracle.v.at(st)));
    trace.push_back({step, last_v_loss, last_q_loss,
                     evaluate_policy(mdp, reverse_kl_policy(q, uniform, cfg.beta),
                                     start_dist),
                     gap});
  };
  checkpoint(0);

  int s = rng.categorical(start_dist);
  int steps_in_episode = 0;

  for (long step = 1; step <= cfg.total_steps; ++step) {
    // Interaction: one environment step under the current softmax policy.
    const PolicyTable pi_now = reverse_kl_policy(q, uniform, cfg.beta);
    const int a = rng.categorical(pi_now.row(s));
    std::vector<double> prow(mdp.n_states);
    for (int s2 = 0; s2 < mdp.n_states; ++s2) prow[s2] = mdp.p(s, a, s2);
    const int s2 = rng.categorical(prow);
    const bool done = mdp.is_terminal(s2);
    const Transition tr{s, a, mdp.r(s, a), s2, done};
    if (replay.size() < replay_capacity) {
      replay.push_back(tr);
    } else {
      replay[replay_head] = tr;
      replay_head = (replay_head + 1) % replay_capacity;
    }
    ++steps_in_episode;
    if (done || steps_in_episode >= episode_cap) {
      s = rng.categorical(start_dist);
      steps_in_episode = 0;
    } else {
      s = s2;
    }

    if (step % snapshot_interval == 0)
      snapshot = reverse_kl_policy(q, uniform, cfg.beta);

    if (replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      for (int i = 0; i < cfg.batch_size; ++i)
        batch[i] = replay[rng.uniform_int(static_cast<int>(replay.size()))];
      {
        double acc = 0.0;
        for (const Transition& t : batch) {
          const double target = t.done ? t.r : t.r + mdp.gamma * v.predict(t.s_next);
          const double diff = q.at(t.s, t.a) - target;
          acc += diff * diff;
        }
        last_q_loss = acc / cfg.batch_size;
      }
      try {
        q = q_mse_update(std::move(q), v, batch, cfg, mdp.gamma);
        for (int j = 0; j < cfg.v_updates; ++j) {
          // ExtremeV with actions resampled from the lagged policy snapshot.
          std::vector<Transition> vbatch(cfg.batch_size);
          for (int i = 0; i < cfg.batch_size; ++i) {
            const int bs = replay[rng.uniform_int(static_cast<int>(replay.size()))].s;
            vbatch[i] = Transition{bs, rng.categorical(snapshot.row(bs)), 0.0, bs, false};
          }
          std::vector<double> preds(cfg.batch_size), targets(cfg.batch_size);
          for (int i = 0; i < cfg.batch_size; ++i) {
            preds[i] = v.predict(vbatch[i].s);
            targets[i] = q.at(vbatch[i].s, vbatch[i].a);
          }
          last_v_loss = gumbel_loss(preds, targets, cfg.beta, cfg.clip).loss;
          v = extreme_v_update(std::move(v), q, vbatch, cfg);
        }
      } catch (const divergence_error& e) {
        throw xql_divergence_error(
            std::string("xql_online: diverged: ") + e.what(), step,
            std::move(trace));
      }
    }

    if (step % checkpoint_every == 0 || step == cfg.total_steps)
      checkpoint(step);
  }

  XqlResult out;
  out.v.values = v.predict_all(mdp.n_states);
  out.pi = reverse_kl_policy(q, uniform, cfg.beta);
  out.q = std::move(q);
  out.trace = std::move(trace);
  return out;
}

ValueTable gumbel_value_iteration(const TransitionDataset& data,
                                  const LinearModel& v, const XqlConfig& cfg,
                                  double gamma, int n_states, ValueLoss loss,
                                  double outer_tol) {
  cfg.validate();
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("gumbel_value_iteration: gamma must be in (0,1)");
  // Deterministic dynamics required; group_by_state_action enforces it.
  int n_actions = 1;
  for (const Transition& t : data.transitions)
    n_actions = std::max(n_actions, t.a + 1);
  group_by_state_action(data, n_states, n_actions);

  const std::vector<SourceGroup> groups = group_by_state(data, n_states);
  std::vector<double> values = v.predict_all(n_states);

  for (long sweep = 0; sweep < cfg.total_steps; ++sweep) {
    double delta = 0.0;
    std::vector<double> next = values;
    for (int s = 0; s < n_states; ++s) {
      const SourceGroup& g = groups[s];
      if (g.count.empty()) continue;
      std::vector<double> targets(g.count.size());
      for (std::size_t i = 0; i < g.count.size(); ++i)
        targets[i] = g.reward[i] + (g.done[i] ? 0.0 : gamma * values[g.next[i]]);
      const double fitted = loss == ValueLoss::gumbel
                                ? fit_gumbel_scalar(targets, g.count, cfg.beta, cfg.clip)
                                : fit_mean_scalar(targets, g.count);
      delta = std::max(delta, std::abs(fitted - next[s]));
      next[s] = fitted;
    }
    values = std::move(next);
    if (delta < outer_tol) break;
  }
  return ValueTable{values};
}

QTable gumbel_q_iteration_raw(const TransitionDataset& data, const QTable& q0,
                              double temperature, const XqlConfig& cfg,
                              double gamma, int n_states, int n_actions,
                              double outer_tol) {
  cfg.validate();
  if (!(temperature > 0.0))
    throw std::invalid_argument("gumbel_q_iteration: temperature must be > 0");
  const std::vector<SaGroup> groups =
      group_by_state_action(data, n_states, n_actions);
  const PolicyTable mu = empirical_behavior_policy(data, n_states, n_actions);

  QTable q = q0;
  if (q.n_states != n_states || q.n_actions != n_actions)
    throw std::invalid_argument("gumbel_q_iteration: q0 shape mismatch");

  for (long sweep = 0; sweep < cfg.total_steps; ++sweep) {
    QTable next = q;
    double delta = 0.0;
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) {
        const SaGroup& g = groups[static_cast<std::size_t>(s) * n_actions + a];
        if (!g.present()) continue;
        double fitted;
        if (g.done) {
          fitted = g.reward;
        } else {
          std::vector<double> targets, weights;
          for (int a2 = 0; a2 < n_actions; ++a2)
            if (mu.at(g.next, a2) > 0.0) {
              targets.push_back(g.reward + gamma * q.at(g.next, a2));
              weights.push_back(mu.at(g.next, a2));
            }
          fitted = targets.empty()
                       ? g.reward
                       : fit_gumbel_scalar(targets, weights, temperature, cfg.clip);
        }
        delta = std::max(delta, std::abs(fitted - next.at(s, a)));
        next.at(s, a) = fitted;
      }
    q = std::move(next);
    if (delta < outer_tol) break;
  }
  return q;
}

QTable gumbel_q_iteration(const TransitionDataset& data, const QTable& q0,
                          const XqlConfig& cfg, double gamma, int n_states,
                          int n_actions, double outer_tol) {
  return gumbel_q_iteration_raw(data, q0, gamma * cfg.beta, cfg, gamma,
                                n_states, n_actions, outer_tol);
}

QTable conservative_update_minimizer(const QTable& q_target,
                                     const PolicyTable& pi,
                                     const PolicyTable& mu, double beta) {
  if (q_target.n_states != pi.n_states || q_target.n_actions != pi.n_actions ||
      pi.n_states != mu.n_states || pi.n_actions != mu.n_actions)
    throw std::invalid_argument("conservative_update_minimizer: shape mismatch");
  if (!(beta > 0.0))
    throw std::invalid_argument("conservative_update_minimizer: beta must be > 0");
  QTable out = q_target;
  for (int s = 0; s < pi.n_states; ++s)
    for (int a = 0; a < pi.n_actions; ++a) {
      const double p = pi.at(s, a), m = mu.at(s, a);
      if (p > 0.0 && m == 0.0)
        throw support_error(
            "conservative_update_minimizer: pi not absolutely continuous wrt mu");
      if (p == 0.0 && m > 0.0)
        throw support_error(
            "conservative_update_minimizer: objective has no finite minimizer "
            "where pi vanishes on mu's support");
      if (p == 0.0 && m == 0.0) continue;  // zero-weight entry, pass through
      out.at(s, a) = q_target.at(s, a) - beta * std::log(p / m);
    }
  return out;
}

QTable conservative_update_brute(const QTable& q_target, const PolicyTable& pi,
                                 const PolicyTable& mu, double beta) {
  QTable out = q_target;
  for (int s = 0; s < pi.n_states; ++s)
    for (int a = 0; a < pi.n_actions; ++a) {
      const double p = pi.at(s, a), m = mu.at(s, a);
      const double t = q_target.at(s, a);
      if (p > 0.0 && m == 0.0)
        throw support_error("conservative_update_brute: support violation");
      if (p == 0.0 && m > 0.0)
        throw support_error("conservative_update_brute: no finite minimizer");
      if (p == 0.0 && m == 0.0) continue;
      // d/dQ [ m e^{(t-Q)/beta} - p (t-Q)/beta ] = (p - m e^{(t-Q)/beta})/beta.
      const auto deriv = [&](double value) {
        return (p - m * std::exp((t - value) / beta)) / beta;
      };
      double lo = t - beta, hi = t + beta;
      while (deriv(lo) > 0.0) lo -= (hi - lo);
      while (deriv(hi) < 0.0) hi += (hi - lo);
      for (int it = 0; it < 200 && (hi - lo) > 1e-13 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (deriv(mid) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      out.at(s, a) = 0.5 * (lo + hi);
    }
  return out;
}

double chi_square_divergence(std::span<const double> pi,
                             std::span<const double> mu) {
  if (pi.size() != mu.size())
    throw std::invalid_argument("chi_square_divergence: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (mu[i] == 0.0) {
      if (pi[i] > 0.0)
        throw support_error("chi_square_divergence: support violation");
      continue;
    }
    const double d = pi[i] / mu[i] - 1.0;
    acc += mu[i] * d * d;
  }
  return acc;
}

double d_cql(std::span<const double> pi, std::span<const double> mu) {
  if (pi.size() != mu.size()) throw std::invalid_argument("d_cql: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] == 0.0) continue;
    if (mu[i] == 0.0) throw support_error("d_cql: support violation");
    acc += pi[i] * (pi[i] / mu[i] - 1.0);
  }
  return acc;
}

double kl_dual_objective(std::span<const double> x, std::span<const double> pi,
                         std::span<const double> mu) {
  if (x.size() != pi.size() || pi.size() != mu.size())
    throw std::invalid_argument("kl_dual_objective: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (pi[i] > 0.0 && mu[i] == 0.0)
      throw support_error("kl_dual_objective: support violation");
    acc += -mu[i] * std::exp(-x[i]) - pi[i] * x[i];
  }
  return acc - 1.0;
}

std::vector<double> kl_dual_maximizer_search(std::span<const double> pi,
                                             std::span<const double> mu) {
  if (pi.size() != mu.size())
    throw std::invalid_argument("kl_dual_maximizer_search: size mismatch");
  std::vector<double> x(pi.size(), 0.0);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (!(pi[i] > 0.0) || !(mu[i] > 0.0))
      throw support_error("kl_dual_maximizer_search: needs strictly positive pairs");
    // Stationarity mu e^{-x} = pi; derivative of the objective is decreasing.
    const auto deriv = [&](double value) { return mu[i] * std::exp(-value) - pi[i]; };
    double lo = -1.0, hi = 1.0;
    while (deriv(lo) < 0.0) lo -= (hi - lo);
    while (deriv(hi) > 0.0) hi += (hi - lo);
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (deriv(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    x[i] = 0.5 * (lo + hi);
  }
  return x;
}

}  // namespace xql
