#ifndef XQL_MDP_HPP
#define XQL_MDP_HPP

#include <string>
#include <vector>

namespace xql {

// Finite MDP (S, A, P, r, gamma) with dense transition rows. Terminal states
// must self-loop with zero reward; their future value is always treated as 0.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // [s][a][s'] row-major, each row sums to 1
  std::vector<double> reward;      // [s][a]
  double gamma = 0.99;
  std::vector<char> terminal;      // per state

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
  double& r(int s, int a) { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
  bool is_terminal(int s) const { return terminal[s] != 0; }

  // For deterministic rows: the unique successor. Throws if the row is not
  // one-hot.
  int successor(int s, int a) const;
  bool deterministic() const;

  void validate() const;
};

struct QTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;  // [s][a]

  QTable() = default;
  QTable(int ns, int na, double fill = 0.0)
      : n_states(ns), n_actions(na),
        values(static_cast<std::size_t>(ns) * na, fill) {}
  double at(int s, int a) const { return values[static_cast<std::size_t>(s) * n_actions + a]; }
  double& at(int s, int a) { return values[static_cast<std::size_t>(s) * n_actions + a]; }
  std::vector<double> row(int s) const;
  void validate() const;  // all finite
};

struct ValueTable {
  std::vector<double> values;  // [s]
  double at(int s) const { return values[s]; }
  void validate() const;
};

// Row-stochastic policy/reference-distribution table.
struct PolicyTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;  // [s][a]

  PolicyTable() = default;
  PolicyTable(int ns, int na, double fill)
      : n_states(ns), n_actions(na),
        probs(static_cast<std::size_t>(ns) * na, fill) {}
  double at(int s, int a) const { return probs[static_cast<std::size_t>(s) * n_actions + a]; }
  double& at(int s, int a) { return probs[static_cast<std::size_t>(s) * n_actions + a]; }
  std::vector<double> row(int s) const;
  void validate() const;  // rows sum to 1 within 1e-12, entries >= 0

  static PolicyTable uniform(int n_states, int n_actions);
};

// Gridworld built from an ASCII layout: '#' wall, 'S' start, 'G' goal,
// '.' or ' ' open floor. Four actions (up/down/left/right); moving into a
// wall stays in place; with probability `slip` the chosen action is replaced
// by a uniformly random one. The goal is terminal.
struct Gridworld {
  TabularMdp mdp;
  int start = -1;
  int goal = -1;
  int rows = 0, cols = 0;
  std::vector<int> cell_state;            // rows*cols -> state index or -1 (wall)
  std::vector<std::pair<int, int>> state_cell;  // state -> (row, col)

  std::vector<double> start_distribution() const;  // delta at the start state
};

enum class GridAction { up = 0, down = 1, left = 2, right = 3 };

Gridworld build_gridworld(const std::string& layout, double step_reward,
                          double goal_reward, double slip, double gamma = 0.99);
Gridworld load_gridworld(const std::string& path, double step_reward,
                         double goal_reward, double slip, double gamma = 0.99);

// Optimal soft state values V(s) = beta log sum_a mu(a|s) e^{Q(s,a)/beta}.
ValueTable soft_value(const QTable& q, const PolicyTable& mu, double beta);

// Soft-Bellman backup (B*Q)(s,a) = r(s,a) + gamma * E_{s'}[V(s')] with V from
// soft_value; terminal successors contribute zero future value.
QTable soft_bellman_backup(const QTable& q, const TabularMdp& mdp,
                           const PolicyTable& mu, double beta);

// Vanilla policy backup (T^pi Q)(s,a) = r(s,a) + gamma E_{s'} E_{a'~pi} Q(s',a').
QTable vanilla_bellman_backup(const QTable& q, const TabularMdp& mdp,
                              const PolicyTable& pi);

struct SolveResult {
  QTable q;
  ValueTable v;
  long iterations = 0;
};

// Fixed points by sweep iteration to sup-norm tolerance `tol`; these are the
// exact oracles the learning algorithms are tested against.
SolveResult solve_soft_mdp(const TabularMdp& mdp, const PolicyTable& mu,
                           double beta, double tol = 1e-10,
                           long max_iterations = 100000);
SolveResult solve_hard_mdp(const TabularMdp& mdp, double tol = 1e-10,
                           long max_iterations = 100000);

// States reachable from `start` under nonzero-probability moves.
std::vector<int> reachable_states(const TabularMdp& mdp, int start);

}  // namespace xql

#endif  // XQL_MDP_HPP
