#ifndef XQL_POLICY_HPP
#define XQL_POLICY_HPP

#include <span>
#include <vector>

#include "xql/mdp.hpp"

namespace xql {

// The optimal MaxEnt policy pi(a|s) = mu(a|s) e^{(Q(s,a) - V(s))/beta},
// renormalized per state. When V is the exact soft value the weights already
// sum to 1; renormalization guards against approximate V.
PolicyTable softmax_policy(const QTable& q, const ValueTable& v,
                           const PolicyTable& mu, double beta);

// Advantage weights w(s,a) = min(e^{(Q(s,a)-V(s))/beta}, weight_cap),
// flattened row-major. Reweighting the behavior policy by the uncapped
// weights and renormalizing reproduces softmax_policy exactly.
std::vector<double> awr_weights(const QTable& q, const ValueTable& v,
                                double beta, double weight_cap);

// Behavior policy reweighted by AWR weights and renormalized per state.
PolicyTable awr_policy(const QTable& q, const ValueTable& v,
                       const PolicyTable& mu, double beta, double weight_cap);

// Exact per-state maximizer of E_pi[Q - beta log(pi/mu)]: pi ~ mu e^{Q/beta}.
PolicyTable reverse_kl_policy(const QTable& q, const PolicyTable& mu,
                              double beta);

// Expected discounted return from the start distribution, by iterating
// V = r^pi + gamma P^pi V to sup-norm 1e-10.
double evaluate_policy(const TabularMdp& mdp, const PolicyTable& pi,
                       std::span<const double> start);

// sum_s w(s) KL(pi(.|s) || mu(.|s)); pi mass where mu is zero is an error.
double policy_kl(const PolicyTable& pi, const PolicyTable& mu,
                 std::span<const double> weights);

// Greedy action per state (ties broken toward the lowest index).
std::vector<int> greedy_actions(const QTable& q);

}  // namespace xql

#endif  // XQL_POLICY_HPP
