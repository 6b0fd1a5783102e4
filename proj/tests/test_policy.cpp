#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "xql/errors.hpp"
#include "xql/mdp.hpp"
#include "xql/policy.hpp"
#include "xql/rng.hpp"

using namespace xql;

namespace {

const std::string kMazePath = std::string(XQL_DATA_DIR) + "/mazes/serpentine.txt";

QTable random_q(int n_states, int n_actions, std::uint64_t seed) {
  Rng rng(seed);
  QTable q(n_states, n_actions);
  for (double& v : q.values) v = rng.uniform(-2.0, 2.0);
  return q;
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
  return pi;
}

double row_tv(const PolicyTable& a, const PolicyTable& b, int s) {
  double tv = 0.0;
  for (int i = 0; i < a.n_actions; ++i) tv += std::abs(a.at(s, i) - b.at(s, i));
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("softmax policy") {
  SUBCASE("constant q returns the reference distribution") {
    QTable q(3, 4, 1.3);
    const PolicyTable mu = random_policy(3, 4, 50);
    ValueTable v{std::vector<double>(3, 1.3)};
    const PolicyTable pi = softmax_policy(q, v, mu, 0.7);
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 4; ++a)
        CHECK(pi.at(s, a) == doctest::Approx(mu.at(s, a)).epsilon(1e-12));
  }
  SUBCASE("hand example") {
    QTable q(1, 2);
    q.values = {0.0, std::log(2.0)};
    ValueTable v{{std::log(1.5)}};
    const PolicyTable pi = softmax_policy(q, v, PolicyTable::uniform(1, 2), 1.0);
    CHECK(pi.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(pi.at(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("exact soft value already normalizes the weights") {
    const QTable q = random_q(4, 3, 51);
    const PolicyTable mu = random_policy(4, 3, 52);
    const double beta = 0.8;
    const ValueTable v = soft_value(q, mu, beta);
    for (int s = 0; s < 4; ++s) {
      double sum = 0.0;
      for (int a = 0; a < 3; ++a)
        sum += mu.at(s, a) * std::exp((q.at(s, a) - v.at(s)) / beta);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("argmax preserved under uniform mu") {
    const QTable q = random_q(6, 4, 53);
    const PolicyTable mu = PolicyTable::uniform(6, 4);
    const ValueTable v = soft_value(q, mu, 0.5);
    const PolicyTable pi = softmax_policy(q, v, mu, 0.5);
    const std::vector<int> greedy = greedy_actions(q);
    for (int s = 0; s < 6; ++s) {
      const auto row = pi.row(s);
      CHECK(static_cast<int>(std::max_element(row.begin(), row.end()) -
                             row.begin()) == greedy[s]);
    }
  }
}

TEST_CASE("awr weights") {
  const QTable q = random_q(5, 3, 54);
  const PolicyTable mu = random_policy(5, 3, 55);
  const double beta = 0.9;
  const ValueTable v = soft_value(q, mu, beta);

  SUBCASE("unit weights at zero advantage") {
    ValueTable vq{{0.0, 0.0}};
    QTable flat(2, 2, 0.0);
    const std::vector<double> w = awr_weights(flat, vq, beta, 100.0);
    for (double x : w) CHECK(x == doctest::Approx(1.0));
  }
  SUBCASE("uncapped weights reproduce the softmax policy") {
    const PolicyTable via_awr = awr_policy(q, v, mu, beta, 1e18);
    const PolicyTable direct = softmax_policy(q, v, mu, beta);
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a)
        CHECK(via_awr.at(s, a) == doctest::Approx(direct.at(s, a)).epsilon(1e-12));
  }
  SUBCASE("cap binds exactly past log(cap)") {
    QTable qq(1, 2);
    qq.values = {0.0, 0.0};
    ValueTable vv{{0.0}};
    const double cap = 100.0;
    qq.values[0] = beta * (std::log(cap) + 0.1);   // above threshold
    qq.values[1] = beta * (std::log(cap) - 0.1);   // below threshold
    const std::vector<double> w = awr_weights(qq, vv, beta, cap);
    CHECK(w[0] == cap);
    CHECK(w[1] < cap);
    CHECK(w[1] == doctest::Approx(std::exp(std::log(cap) - 0.1)));
  }
}

TEST_CASE("reverse kl policy") {
  const QTable q = random_q(4, 3, 56);
  const PolicyTable mu = random_policy(4, 3, 57);

  SUBCASE("coincides with the softmax policy at the exact soft value") {
    for (double beta : {0.4, 1.0, 3.0}) {
      const ValueTable v = soft_value(q, mu, beta);
      const PolicyTable a = reverse_kl_policy(q, mu, beta);
      const PolicyTable b = softmax_policy(q, v, mu, beta);
      for (std::size_t i = 0; i < a.probs.size(); ++i)
        CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-12));
    }
  }
  SUBCASE("one-hot reference is absorbing") {
    PolicyTable onehot(4, 3, 0.0);
    for (int s = 0; s < 4; ++s) onehot.at(s, s % 3) = 1.0;
    const PolicyTable pi = reverse_kl_policy(q, onehot, 1.0);
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 3; ++a)
        CHECK(pi.at(s, a) == doctest::Approx(onehot.at(s, a)));
  }
  SUBCASE("large beta returns to the reference") {
    const PolicyTable pi = reverse_kl_policy(q, mu, 1e9);
    for (int s = 0; s < 4; ++s) CHECK(row_tv(pi, mu, s) < 1e-6);
  }
  SUBCASE("triple agreement of the policy constructions") {
    for (double beta : {0.5, 2.0}) {
      const ValueTable v = soft_value(q, mu, beta);
      const PolicyTable a = softmax_policy(q, v, mu, beta);
      const PolicyTable b = awr_policy(q, v, mu, beta, 1e18);
      const PolicyTable c = reverse_kl_policy(q, mu, beta);
      for (std::size_t i = 0; i < a.probs.size(); ++i) {
        CHECK(std::abs(a.probs[i] - b.probs[i]) < 1e-10);
        CHECK(std::abs(a.probs[i] - c.probs[i]) < 1e-10);
      }
    }
  }
}

TEST_CASE("policy evaluation") {
  SUBCASE("zero rewards evaluate to zero") {
    const Gridworld gw = build_gridworld("S.G", 0.0, 0.0, 0.0, 0.9);
    const double ret = evaluate_policy(gw.mdp, PolicyTable::uniform(3, 4),
                                       gw.start_distribution());
    CHECK(ret == doctest::Approx(0.0));
  }
  SUBCASE("self-loop geometric series") {
    TabularMdp mdp;
    mdp.n_states = 1;
    mdp.n_actions = 1;
    mdp.gamma = 0.9;
    mdp.transition = {1.0};
    mdp.reward = {1.0};
    mdp.terminal = {0};
    const std::vector<double> start{1.0};
    CHECK(evaluate_policy(mdp, PolicyTable::uniform(1, 1), start) ==
          doctest::Approx(10.0).epsilon(1e-9));
  }
  SUBCASE("greedy beats uniform on the maze") {
    const Gridworld gw = load_gridworld(kMazePath, -1.0, 10.0, 0.0, 0.99);
    const SolveResult hard = solve_hard_mdp(gw.mdp, 1e-10);
    PolicyTable greedy(gw.mdp.n_states, 4, 0.0);
    const std::vector<int> acts = greedy_actions(hard.q);
    for (int s = 0; s < gw.mdp.n_states; ++s) greedy.at(s, acts[s]) = 1.0;
    const double greedy_ret =
        evaluate_policy(gw.mdp, greedy, gw.start_distribution());
    const double uniform_ret = evaluate_policy(
        gw.mdp, PolicyTable::uniform(gw.mdp.n_states, 4), gw.start_distribution());
    CHECK(greedy_ret > uniform_ret);
    CHECK(greedy_ret == doctest::Approx(hard.v.at(gw.start)).epsilon(1e-8));
  }
}

TEST_CASE("policy kl") {
  SUBCASE("zero at equality") {
    const PolicyTable mu = random_policy(3, 4, 58);
    const std::vector<double> w{0.5, 0.3, 0.2};
    CHECK(policy_kl(mu, mu, w) == doctest::Approx(0.0));
  }
  SUBCASE("hand value") {
    PolicyTable pi(1, 2, 0.0), mu(1, 2, 0.5);
    pi.at(0, 0) = 0.75;
    pi.at(0, 1) = 0.25;
    const std::vector<double> w{1.0};
    CHECK(policy_kl(pi, mu, w) ==
          doctest::Approx(0.75 * std::log(1.5) + 0.25 * std::log(0.5)).epsilon(1e-12));
    CHECK(policy_kl(pi, mu, w) == doctest::Approx(0.13081).epsilon(1e-4));
  }
  SUBCASE("nonnegative on random pairs") {
    Rng rng(59);
    for (int t = 0; t < 1000; ++t) {
      const PolicyTable pi = random_policy(2, 3, rng.next_u64());
      const PolicyTable mu = random_policy(2, 3, rng.next_u64());
      const std::vector<double> w{0.5, 0.5};
      CHECK(policy_kl(pi, mu, w) >= -1e-12);
    }
  }
  SUBCASE("support violation throws") {
    PolicyTable pi(1, 2, 0.5);
    PolicyTable mu(1, 2, 0.0);
    mu.at(0, 0) = 1.0;
    const std::vector<double> w{1.0};
    CHECK_THROWS_AS(policy_kl(pi, mu, w), support_error);
  }
}
