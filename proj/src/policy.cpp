#include "xql/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xql/errors.hpp"

namespace xql {

PolicyTable softmax_policy(const QTable& q, const ValueTable& v,
                           const PolicyTable& mu, double beta) {
  if (q.n_states != mu.n_states || q.n_actions != mu.n_actions ||
      static_cast<int>(v.values.size()) != q.n_states)
    throw std::invalid_argument("softmax_policy: shape mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("softmax_policy: beta must be > 0");
  PolicyTable pi(q.n_states, q.n_actions, 0.0);
  for (int s = 0; s < q.n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < q.n_actions; ++a) {
      const double w =
          mu.at(s, a) > 0.0
              ? mu.at(s, a) * std::exp((q.at(s, a) - v.at(s)) / beta)
              : 0.0;
      pi.at(s, a) = w;
      sum += w;
    }
    for (int a = 0; a < q.n_actions; ++a) pi.at(s, a) /= sum;
  }
  return pi;
}

std::vector<double> awr_weights(const QTable& q, const ValueTable& v,
                                double beta, double weight_cap) {
  if (static_cast<int>(v.values.size()) != q.n_states)
    throw std::invalid_argument("awr_weights: shape mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("awr_weights: beta must be > 0");
  if (!(weight_cap > 0.0))
    throw std::invalid_argument("awr_weights: weight_cap must be > 0");
  std::vector<double> w(q.values.size());
  for (int s = 0; s < q.n_states; ++s)
    for (int a = 0; a < q.n_actions; ++a) {
      const double adv = (q.at(s, a) - v.at(s)) / beta;
      // Exponentiate only below the cap threshold so huge advantages cannot
      // overflow before the min is applied.
      w[static_cast<std::size_t>(s) * q.n_actions + a] =
          adv >= std::log(weight_cap) ? weight_cap : std::exp(adv);
    }
  return w;
}

PolicyTable awr_policy(const QTable& q, const ValueTable& v,
                       const PolicyTable& mu, double beta, double weight_cap) {
  const std::vector<double> w = awr_weights(q, v, beta, weight_cap);
  PolicyTable pi(q.n_states, q.n_actions, 0.0);
  for (int s = 0; s < q.n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < q.n_actions; ++a) {
      const double p = mu.at(s, a) * w[static_cast<std::size_t>(s) * q.n_actions + a];
      pi.at(s, a) = p;
      sum += p;
    }
    for (int a = 0; a < q.n_actions; ++a) pi.at(s, a) /= sum;
  }
  return pi;
}

PolicyTable reverse_kl_policy(const QTable& q, const PolicyTable& mu,
                              double beta) {
  if (q.n_states != mu.n_states || q.n_actions != mu.n_actions)
    throw std::invalid_argument("reverse_kl_policy: shape mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("reverse_kl_policy: beta must be > 0");
  PolicyTable pi(q.n_states, q.n_actions, 0.0);
  for (int s = 0; s < q.n_states; ++s) {
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.n_actions; ++a)
      if (mu.at(s, a) > 0.0) m = std::max(m, q.at(s, a));
    double sum = 0.0;
    for (int a = 0; a < q.n_actions; ++a) {
      const double w = mu.at(s, a) > 0.0
                           ? mu.at(s, a) * std::exp((q.at(s, a) - m) / beta)
                           : 0.0;
      pi.at(s, a) = w;
      sum += w;
    }
    for (int a = 0; a < q.n_actions; ++a) pi.at(s, a) /= sum;
  }
  return pi;
}

double evaluate_policy(const TabularMdp& mdp, const PolicyTable& pi,
                       std::span<const double> start) {
  pi.validate();
  if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions ||
      static_cast<int>(start.size()) != mdp.n_states)
    throw std::invalid_argument("evaluate_policy: shape mismatch");

  std::vector<double> r_pi(mdp.n_states, 0.0);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      r_pi[s] += pi.at(s, a) * mdp.r(s, a);

  std::vector<double> v(mdp.n_states, 0.0), next(mdp.n_states, 0.0);
  constexpr long kMaxIters = 1000000;
  for (long it = 0; it < kMaxIters; ++it) {
    double delta = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      double future = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double pa = pi.at(s, a);
        if (pa == 0.0) continue;
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const double pr = mdp.p(s, a, s2);
          if (pr > 0.0 && !mdp.is_terminal(s2)) future += pa * pr * v[s2];
        }
      }
      next[s] = mdp.is_terminal(s) ? 0.0 : r_pi[s] + mdp.gamma * future;
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    std::swap(v, next);
    if (delta < 1e-10) {
      double ret = 0.0;
      for (int s = 0; s < mdp.n_states; ++s) ret += start[s] * v[s];
      return ret;
    }
  }
  throw convergence_error("evaluate_policy: iteration cap exceeded");
}

double policy_kl(const PolicyTable& pi, const PolicyTable& mu,
                 std::span<const double> weights) {
  if (pi.n_states != mu.n_states || pi.n_actions != mu.n_actions ||
      static_cast<int>(weights.size()) != pi.n_states)
    throw std::invalid_argument("policy_kl: shape mismatch");
  double kl = 0.0;
  for (int s = 0; s < pi.n_states; ++s) {
    if (weights[s] == 0.0) continue;
    double state_kl = 0.0;
    for (int a = 0; a < pi.n_actions; ++a) {
      const double p = pi.at(s, a);
      if (p == 0.0) continue;
      const double m = mu.at(s, a);
      if (m == 0.0)
        throw support_error("policy_kl: pi has mass outside mu's support");
      state_kl += p * std::log(p / m);
    }
    kl += weights[s] * state_kl;
  }
  return kl;
}

std::vector<int> greedy_actions(const QTable& q) {
  std::vector<int> out(q.n_states, 0);
  for (int s = 0; s < q.n_states; ++s) {
    const auto row = q.row(s);
    out[s] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace xql
