#ifndef XQL_DATASET_HPP
#define XQL_DATASET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xql/gumbel.hpp"
#include "xql/mdp.hpp"

namespace xql {

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

// Offline tuples (s, a, r, s', done) standing in for the dataset D; its
// empirical action frequencies stand in for the behavior policy.
struct TransitionDataset {
  std::vector<Transition> transitions;
  std::uint64_t source_seed = 0;
  std::string behavior_policy_id;

  std::size_t size() const { return transitions.size(); }
  void validate(int n_states, int n_actions) const;

  // Empirical state visitation frequencies (the rho_mu stand-in).
  std::vector<double> state_marginal(int n_states) const;
};

// Rolls episodes from `start` (empty == uniform over non-terminal states)
// under the behavior policy, truncating episodes at episode_cap steps, until
// n transitions are collected. Deterministic under seed.
TransitionDataset generate_dataset(const TabularMdp& mdp,
                                   const PolicyTable& behavior, std::size_t n,
                                   std::uint64_t seed, int episode_cap = 200,
                                   std::span<const double> start = {});

// Per-state empirical action frequencies with additive smoothing; states with
// no visits (and no smoothing) get uniform rows.
PolicyTable empirical_behavior_policy(const TransitionDataset& ds, int n_states,
                                      int n_actions, double smoothing = 0.0);

// CSV with header `s,a,r,s_next,done`, done in {0,1}, LF line endings.
// Rewards are written with max_digits10 so load(save(ds)) == ds exactly.
void save_dataset_csv(const TransitionDataset& ds, const std::string& path);
TransitionDataset load_dataset_csv(const std::string& path);

// Sample batches use header `value` (uniform weights) or `value,weight`.
void save_samples_csv(const SampleBatch& batch, const std::string& path);
SampleBatch load_samples_csv(const std::string& path);

}  // namespace xql

#endif  // XQL_DATASET_HPP
