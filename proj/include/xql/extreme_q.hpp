#ifndef XQL_EXTREME_Q_HPP
#define XQL_EXTREME_Q_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "xql/dataset.hpp"
#include "xql/errors.hpp"
#include "xql/mdp.hpp"
#include "xql/regression.hpp"

namespace xql {

enum class XqlMode { offline, online };

struct XqlConfig {
  double beta = 2.0;
  double clip = 7.0;       // Gumbel-loss residual clamp
  double lr = 0.1;
  int batch_size = 256;
  long total_steps = 10000;
  int v_updates = 1;       // value updates per Q update
  std::uint64_t seed = 0;
  XqlMode mode = XqlMode::offline;
  void validate() const;
};

struct TraceRow {
  long step = 0;
  double v_loss = 0.0;
  double q_loss = 0.0;
  double policy_return = 0.0;
  double v_gap = 0.0;  // sup-norm distance of learned V to the solver oracle
};

struct XqlResult {
  QTable q;
  ValueTable v;
  PolicyTable pi;
  std::vector<TraceRow> trace;
};

// Divergence in a training loop; carries the checkpoints recorded before the
// failing step, so the last stable checkpoint is trace.back().
struct xql_divergence_error : divergence_error {
  std::vector<TraceRow> trace;
  xql_divergence_error(const std::string& what, long step_,
                       std::vector<TraceRow> trace_)
      : divergence_error(what, step_), trace(std::move(trace_)) {}
};

// One minibatch step of the ExtremeV objective: fit V(s) toward targets
// Q(s,a) over the (s,a) pairs of the batch with the stabilized Gumbel loss.
LinearModel extreme_v_update(LinearModel v, const QTable& q,
                             std::span<const Transition> batch,
                             const XqlConfig& cfg);

// One minibatch step of the MSE Q objective: per transition, pull Q(s,a)
// toward r + gamma V(s') (just r when the transition is terminal) by a direct
// table write with step size cfg.lr.
QTable q_mse_update(QTable q, const LinearModel& v,
                    std::span<const Transition> batch, const XqlConfig& cfg,
                    double gamma);

// Offline Extreme Q-learning: alternates one Q MSE step with cfg.v_updates
// ExtremeV steps over minibatches of the dataset, then refines (Q, V) to the
// empirical soft fixed point and extracts the policy with the AWR rule. The
// MDP is used only for diagnostics: the trace's oracle gap is measured
// against solve_soft_mdp with mu set to the empirical behavior policy, and
// policy returns are evaluated exactly from `start` (empty == uniform over
// non-terminal states).
XqlResult xql_offline(const TabularMdp& mdp, const TransitionDataset& data,
                      const XqlConfig& cfg, std::span<const double> start = {});

// Online variant: environment interaction fills a FIFO replay buffer; the
// behavior policy is the current softmax policy and ExtremeV targets use
// actions sampled from a snapshot of it refreshed every `snapshot_interval`
// steps. The trace oracle uses the uniform reference policy.
XqlResult xql_online(const TabularMdp& mdp, const XqlConfig& cfg,
                     std::span<const double> start = {}, int episode_cap = 200,
                     int snapshot_interval = 100,
                     std::size_t replay_capacity = 100000);

enum class ValueLoss { gumbel, squared };

// Deterministic-dynamics value iteration on an offline dataset: sweep targets
// r + gamma V(s'), refit V per state on the empirical action distribution
// (Gumbel regression at temperature cfg.beta, or squared-error regression for
// the ablation), until the sweep change falls below outer_tol. cfg.total_steps
// caps the number of sweeps.
ValueTable gumbel_value_iteration(const TransitionDataset& data,
                                  const LinearModel& v, const XqlConfig& cfg,
                                  double gamma, int n_states,
                                  ValueLoss loss = ValueLoss::gumbel,
                                  double outer_tol = 1e-9);

// Deterministic-dynamics Q iteration: regress Q(s,a) on targets
// r + gamma Q(s',a') with a' weighted by the empirical behavior policy at s',
// at the rescaled temperature gamma * cfg.beta. Fixed point is the soft
// backup under the empirical behavior policy.
QTable gumbel_q_iteration(const TransitionDataset& data, const QTable& q0,
                          const XqlConfig& cfg, double gamma, int n_states,
                          int n_actions, double outer_tol = 1e-9);
// Same recursion with the regression temperature given directly instead of
// as gamma * beta.
QTable gumbel_q_iteration_raw(const TransitionDataset& data, const QTable& q0,
                              double temperature, const XqlConfig& cfg,
                              double gamma, int n_states, int n_actions,
                              double outer_tol = 1e-9);

// Analytic minimizer Q(s,a) = q_target(s,a) - beta log(pi/mu) of the
// exponential-vs-linear conservatism objective (exponential term weighted by
// mu, linear term by pi). Requires pi > 0 wherever mu > 0; entries where both
// vanish are passed through unchanged.
QTable conservative_update_minimizer(const QTable& q_target,
                                     const PolicyTable& pi,
                                     const PolicyTable& mu, double beta);

// Companion check: minimizes the same objective per (s,a) by bracketed scalar
// search, with no reference to the closed form.
QTable conservative_update_brute(const QTable& q_target, const PolicyTable& pi,
                                 const PolicyTable& mu, double beta);

// chi^2(pi || mu) = sum_a mu (pi/mu - 1)^2 and the CQL conservatism penalty
// D_CQL = sum_a pi (pi/mu - 1); the two are identical.
double chi_square_divergence(std::span<const double> pi,
                             std::span<const double> mu);
double d_cql(std::span<const double> pi, std::span<const double> mu);

// KL dual objective E_mu[-e^{-x}] - E_pi[x] - 1 and its per-coordinate
// numerical maximizer (bracketed search on the stationarity condition).
double kl_dual_objective(std::span<const double> x, std::span<const double> pi,
                         std::span<const double> mu);
std::vector<double> kl_dual_maximizer_search(std::span<const double> pi,
                                             std::span<const double> mu);

// Exact scalar Gumbel regression: the v solving
//   sum_i w_i (e^{clamp((t_i - v)/beta, +-clip)} - 1) = 0,
// i.e. the minimizer of the clipped Gumbel loss; equals the weighted LSE of
// the targets when no clipping activates.
double fit_gumbel_scalar(std::span<const double> targets,
                         std::span<const double> weights, double beta,
                         double clip);

}  // namespace xql

#endif  // XQL_EXTREME_Q_HPP
