#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "xql/errors.hpp"
#include "xql/gumbel.hpp"
#include "xql/mdp.hpp"
#include "xql/rng.hpp"

using namespace xql;

namespace {

const std::string kMazePath = std::string(XQL_DATA_DIR) + "/mazes/serpentine.txt";

TabularMdp random_mdp(int n_states, int n_actions, std::uint64_t seed,
                      double gamma) {
  Rng rng(seed);
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  mdp.reward.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  mdp.terminal.assign(n_states, 0);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      std::vector<double> row(n_states);
      for (double& v : row) {
        v = rng.uniform01();
        sum += v;
      }
      double acc = 0.0;
      for (int s2 = 0; s2 < n_states - 1; ++s2) {
        row[s2] /= sum;
        acc += row[s2];
        mdp.p(s, a, s2) = row[s2];
      }
      mdp.p(s, a, n_states - 1) = 1.0 - acc;  // exact row sum
      mdp.r(s, a) = rng.uniform(-1.0, 1.0);
    }
  mdp.validate();
  return mdp;
}

PolicyTable random_policy(int n_states, int n_actions, std::uint64_t seed) {
  Rng rng(seed);
  PolicyTable pi(n_states, n_actions, 0.0);
  for (int s = 0; s < n_states; ++s) {
    double sum = 0.0;
    std::vector<double> row(n_actions);
    for (double& v : row) {
      v = 0.1 + rng.uniform01();
      sum += v;
    }
    double acc = 0.0;
    for (int a = 0; a < n_actions - 1; ++a) {
      row[a] /= sum;
      acc += row[a];
      pi.at(s, a) = row[a];
    }
    pi.at(s, n_actions - 1) = 1.0 - acc;
  }
  pi.validate();
  return pi;
}

// Independent oracle: solve Q^pi = r + gamma P^pi Q^pi by Gaussian
// elimination over the (s,a) index.
QTable solve_q_pi_linear(const TabularMdp& mdp, const PolicyTable& pi) {
  const int n = mdp.n_states * mdp.n_actions;
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const int i = s * mdp.n_actions + a;
      m[i][i] += 1.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        if (mdp.is_terminal(s2)) continue;
        for (int a2 = 0; a2 < mdp.n_actions; ++a2)
          m[i][s2 * mdp.n_actions + a2] -=
              mdp.gamma * mdp.p(s, a, s2) * pi.at(s2, a2);
      }
      m[i][n] = mdp.r(s, a);
    }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < n; ++r) {
      if (r == col || m[r][col] == 0.0) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  QTable q(mdp.n_states, mdp.n_actions);
  for (int i = 0; i < n; ++i) q.values[i] = m[i][n] / m[i][i];
  return q;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("gridworld construction") {
  SUBCASE("one-step chain") {
    const Gridworld gw = build_gridworld("SG", -1.0, 10.0, 0.0, 0.9);
    CHECK(gw.mdp.n_states == 2);
    CHECK(gw.mdp.is_terminal(gw.goal));
    const SolveResult sol = solve_hard_mdp(gw.mdp);
    CHECK(sol.q.at(gw.start, static_cast<int>(GridAction::right)) ==
          doctest::Approx(10.0).epsilon(1e-9));
  }
  SUBCASE("slip zero is deterministic") {
    const Gridworld gw = build_gridworld("S.\n.G", -1.0, 5.0, 0.0, 0.9);
    CHECK(gw.mdp.deterministic());
  }
  SUBCASE("slip spreads probability") {
    const Gridworld gw = build_gridworld("S.\n.G", -1.0, 5.0, 0.4, 0.9);
    CHECK_FALSE(gw.mdp.deterministic());
    gw.mdp.validate();
  }
  SUBCASE("serpentine maze parses connected") {
    const Gridworld gw = load_gridworld(kMazePath, -1.0, 10.0, 0.0, 0.99);
    CHECK(gw.rows == 11);
    CHECK(gw.cols == 13);
    const std::vector<int> reach = reachable_states(gw.mdp, gw.start);
    CHECK(static_cast<int>(reach.size()) == gw.mdp.n_states);
    CHECK(std::find(reach.begin(), reach.end(), gw.goal) != reach.end());
  }
  SUBCASE("hard-max greedy walks the corridor to the goal") {
    const Gridworld gw = load_gridworld(kMazePath, -1.0, 10.0, 0.0, 0.99);
    const SolveResult sol = solve_hard_mdp(gw.mdp, 1e-10);
    int s = gw.start;
    int steps = 0;
    while (s != gw.goal && steps <= gw.mdp.n_states) {
      const auto row = sol.q.row(s);
      const int a = static_cast<int>(
          std::max_element(row.begin(), row.end()) - row.begin());
      s = gw.mdp.successor(s, a);
      ++steps;
    }
    CHECK(s == gw.goal);
    CHECK(steps == 48);
  }
  SUBCASE("layout errors") {
    CHECK_THROWS_AS(build_gridworld("S.\n.G.", -1, 1, 0), parse_error);   // ragged
    CHECK_THROWS_AS(build_gridworld("..\n.G", -1, 1, 0), parse_error);    // no S
    CHECK_THROWS_AS(build_gridworld("SS\n.G", -1, 1, 0), parse_error);    // two S
    CHECK_THROWS_AS(build_gridworld("SX\n.G", -1, 1, 0), parse_error);    // bad char
    CHECK_THROWS_AS(build_gridworld("S.\n..", -1, 1, 0), parse_error);    // no G
  }
}

TEST_CASE("soft value") {
  SUBCASE("single action is identity") {
    QTable q(3, 1);
    q.values = {1.0, -2.0, 0.5};
    const ValueTable v = soft_value(q, PolicyTable::uniform(3, 1), 0.7);
    for (int s = 0; s < 3; ++s) CHECK(v.at(s) == doctest::Approx(q.at(s, 0)));
  }
  SUBCASE("hand value") {
    QTable q(1, 2);
    q.values = {0.0, std::log(3.0)};
    const ValueTable v = soft_value(q, PolicyTable::uniform(1, 2), 1.0);
    CHECK(v.at(0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("small beta approaches the max") {
    QTable q(1, 2);
    q.values = {0.0, 1.0};
    const ValueTable v = soft_value(q, PolicyTable::uniform(1, 2), 1e-3);
    CHECK(std::abs(v.at(0) - 1.0) < 1e-2);
  }
  SUBCASE("beta validation") {
    QTable q(1, 2);
    CHECK_THROWS_AS(soft_value(q, PolicyTable::uniform(1, 2), 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("soft bellman backup") {
  SUBCASE("self-loop geometric series") {
    TabularMdp mdp;
    mdp.n_states = 1;
    mdp.n_actions = 1;
    mdp.gamma = 0.9;
    mdp.transition = {1.0};
    mdp.reward = {1.0};
    mdp.terminal = {0};
    for (double beta : {0.1, 1.0, 10.0}) {
      const SolveResult sol = solve_soft_mdp(mdp, PolicyTable::uniform(1, 1), beta, 1e-12);
      CHECK(sol.q.at(0, 0) == doctest::Approx(10.0).epsilon(1e-9));
    }
  }
  SUBCASE("terminal successor contributes only the reward") {
    // 2 states: s0 -> s1 (terminal) under both actions
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.gamma = 0.9;
    mdp.transition.assign(2 * 2 * 2, 0.0);
    mdp.reward.assign(4, 0.0);
    mdp.terminal = {0, 1};
    for (int a = 0; a < 2; ++a) {
      mdp.p(0, a, 1) = 1.0;
      mdp.p(1, a, 1) = 1.0;
      mdp.r(0, a) = 2.5 + a;
    }
    mdp.validate();
    QTable q(2, 2, 123.0);  // arbitrary values must not leak through terminals
    const QTable backed = soft_bellman_backup(q, mdp, PolicyTable::uniform(2, 2), 1.0);
    CHECK(backed.at(0, 0) == doctest::Approx(2.5));
    CHECK(backed.at(0, 1) == doctest::Approx(3.5));
  }
  SUBCASE("two-state chain fixed point is self-consistent") {
    const TabularMdp mdp = random_mdp(2, 2, 31, 0.9);
    const PolicyTable mu = PolicyTable::uniform(2, 2);
    const SolveResult sol = solve_soft_mdp(mdp, mu, 1.0, 1e-13);
    QTable q(2, 2);
    for (int it = 0; it < 1000; ++it) q = soft_bellman_backup(q, mdp, mu, 1.0);
    CHECK(sup_diff(q.values, sol.q.values) < 1e-10);
  }
  SUBCASE("gamma contraction in sup norm") {
    const TabularMdp mdp = random_mdp(4, 3, 32, 0.9);
    const PolicyTable mu = random_policy(4, 3, 33);
    Rng rng(34);
    for (int trial = 0; trial < 20; ++trial) {
      QTable q1(4, 3), q2(4, 3);
      for (double& v : q1.values) v = rng.uniform(-5.0, 5.0);
      for (double& v : q2.values) v = rng.uniform(-5.0, 5.0);
      const QTable b1 = soft_bellman_backup(q1, mdp, mu, 0.8);
      const QTable b2 = soft_bellman_backup(q2, mdp, mu, 0.8);
      CHECK(sup_diff(b1.values, b2.values) <=
            mdp.gamma * sup_diff(q1.values, q2.values) + 1e-12);
    }
  }
}

TEST_CASE("vanilla bellman backup") {
  SUBCASE("greedy one-hot policy equals the hard backup") {
    const Gridworld gw = build_gridworld("S.G", -1.0, 4.0, 0.0, 0.9);
    const SolveResult hard = solve_hard_mdp(gw.mdp, 1e-12);
    PolicyTable greedy(gw.mdp.n_states, gw.mdp.n_actions, 0.0);
    for (int s = 0; s < gw.mdp.n_states; ++s) {
      const auto row = hard.q.row(s);
      greedy.at(s, static_cast<int>(std::max_element(row.begin(), row.end()) -
                                    row.begin())) = 1.0;
    }
    const QTable backed = vanilla_bellman_backup(hard.q, gw.mdp, greedy);
    CHECK(sup_diff(backed.values, hard.q.values) < 1e-9);
  }
  SUBCASE("uniform policy takes the mean of next-state values") {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.gamma = 0.5;
    mdp.transition.assign(8, 0.0);
    mdp.reward.assign(4, 0.0);
    mdp.terminal = {0, 0};
    for (int a = 0; a < 2; ++a) {
      mdp.p(0, a, 1) = 1.0;
      mdp.p(1, a, 0) = 1.0;
    }
    mdp.validate();
    QTable q(2, 2);
    q.values = {2.0, 6.0, 0.0, 0.0};
    const QTable backed =
        vanilla_bellman_backup(q, mdp, PolicyTable::uniform(2, 2));
    CHECK(backed.at(1, 0) == doctest::Approx(0.5 * 4.0));
  }
  SUBCASE("linear-system oracle is a fixed point") {
    const TabularMdp mdp = random_mdp(5, 2, 35, 0.9);
    const PolicyTable pi = random_policy(5, 2, 36);
    const QTable q_pi = solve_q_pi_linear(mdp, pi);
    const QTable backed = vanilla_bellman_backup(q_pi, mdp, pi);
    CHECK(sup_diff(backed.values, q_pi.values) < 1e-10);
  }
}

TEST_CASE("solvers") {
  SUBCASE("per-sweep error contraction") {
    const TabularMdp mdp = random_mdp(5, 3, 37, 0.9);
    const PolicyTable mu = PolicyTable::uniform(5, 3);
    const SolveResult sol = solve_soft_mdp(mdp, mu, 1.0, 1e-13);
    QTable q(5, 3);
    double prev_err = sup_diff(q.values, sol.q.values);
    for (int it = 0; it < 40; ++it) {
      q = soft_bellman_backup(q, mdp, mu, 1.0);
      const double err = sup_diff(q.values, sol.q.values);
      CHECK(err <= mdp.gamma * prev_err + 1e-12);
      prev_err = err;
    }
  }
  SUBCASE("soft-hard sandwich on a gridworld at small beta") {
    // gamma <= 0.5 keeps the fixed-point gap within one application's bound
    const Gridworld gw = build_gridworld(
        "#######\n"
        "#....G#\n"
        "#.....#\n"
        "#.....#\n"
        "#.....#\n"
        "#S....#\n"
        "#######",
        -1.0, 10.0, 0.0, 0.5);
    const SolveResult hard = solve_hard_mdp(gw.mdp, 1e-12);
    for (double beta : {0.1, 0.01}) {
      const SolveResult soft = solve_soft_mdp(
          gw.mdp, PolicyTable::uniform(gw.mdp.n_states, 4), beta, 1e-12);
      const double bound = beta * std::log(4.0);
      for (std::size_t i = 0; i < soft.q.values.size(); ++i) {
        CHECK(soft.q.values[i] <= hard.q.values[i] + 1e-9);
        CHECK(soft.q.values[i] >= hard.q.values[i] - bound - 1e-9);
      }
    }
  }
  SUBCASE("oracle value is nonincreasing in beta") {
    const TabularMdp mdp = random_mdp(5, 3, 38, 0.9);
    const PolicyTable mu = PolicyTable::uniform(5, 3);
    std::vector<double> prev(5, 1e300);
    for (double beta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const SolveResult sol = solve_soft_mdp(mdp, mu, beta, 1e-12);
      for (int s = 0; s < 5; ++s) {
        CHECK(sol.v.at(s) <= prev[s] + 1e-10);
        prev[s] = sol.v.at(s);
      }
    }
  }
  SUBCASE("reward shift moves the fixed point by c/(1-gamma)") {
    const TabularMdp mdp = random_mdp(4, 2, 39, 0.9);
    const PolicyTable mu = PolicyTable::uniform(4, 2);
    const SolveResult base = solve_soft_mdp(mdp, mu, 1.0, 1e-12);
    TabularMdp shifted = mdp;
    const double c = 0.7;
    for (double& r : shifted.reward) r += c;
    const SolveResult moved = solve_soft_mdp(shifted, mu, 1.0, 1e-12);
    for (std::size_t i = 0; i < base.q.values.size(); ++i)
      CHECK(moved.q.values[i] ==
            doctest::Approx(base.q.values[i] + c / (1.0 - mdp.gamma)).epsilon(1e-7));
  }
  SUBCASE("iteration cap raises") {
    const TabularMdp mdp = random_mdp(3, 2, 40, 0.9);
    CHECK_THROWS_AS(solve_soft_mdp(mdp, PolicyTable::uniform(3, 2), 1.0, 1e-12, 3),
                    convergence_error);
  }
}

TEST_CASE("table validation") {
  QTable q(2, 2);
  q.values[1] = std::nan("");
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  PolicyTable p(2, 2, 0.3);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  TabularMdp bad;
  bad.n_states = 1;
  bad.n_actions = 1;
  bad.gamma = 0.9;
  bad.transition = {0.5};
  bad.reward = {0.0};
  bad.terminal = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  // terminal state with nonzero reward is rejected
  TabularMdp t;
  t.n_states = 1;
  t.n_actions = 1;
  t.gamma = 0.9;
  t.transition = {1.0};
  t.reward = {1.0};
  t.terminal = {1};
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}
