#include "xql/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "xql/errors.hpp"
#include "xql/gumbel.hpp"

namespace xql {

int TabularMdp::successor(int s, int a) const {
  for (int s2 = 0; s2 < n_states; ++s2)
    if (p(s, a, s2) == 1.0) return s2;
  throw std::invalid_argument("TabularMdp: transition row is not deterministic");
}

bool TabularMdp::deterministic() const {
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      bool one = false;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double v = p(s, a, s2);
        if (v != 0.0 && v != 1.0) return false;
        if (v == 1.0) one = true;
      }
      if (!one) return false;
    }
  return true;
}

void TabularMdp::validate() const {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("TabularMdp: empty state or action space");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("TabularMdp: gamma must be in (0, 1)");
  if (transition.size() != static_cast<std::size_t>(n_states) * n_actions * n_states ||
      reward.size() != static_cast<std::size_t>(n_states) * n_actions ||
      terminal.size() != static_cast<std::size_t>(n_states))
    throw std::invalid_argument("TabularMdp: table size mismatch");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double v = p(s, a, s2);
        if (!(v >= 0.0) || !std::isfinite(v))
          throw std::invalid_argument("TabularMdp: invalid transition probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
      if (!std::isfinite(r(s, a)))
        throw std::invalid_argument("TabularMdp: non-finite reward");
      if (is_terminal(s) && (r(s, a) != 0.0 || p(s, a, s) != 1.0))
        throw std::invalid_argument(
            "TabularMdp: terminal states must self-loop with zero reward");
    }
}

std::vector<double> QTable::row(int s) const {
  return {values.begin() + static_cast<std::ptrdiff_t>(s) * n_actions,
          values.begin() + static_cast<std::ptrdiff_t>(s + 1) * n_actions};
}

void QTable::validate() const {
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("QTable: non-finite value");
}

void ValueTable::validate() const {
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("ValueTable: non-finite value");
}

std::vector<double> PolicyTable::row(int s) const {
  return {probs.begin() + static_cast<std::ptrdiff_t>(s) * n_actions,
          probs.begin() + static_cast<std::ptrdiff_t>(s + 1) * n_actions};
}

void PolicyTable::validate() const {
  for (int s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double v = at(s, a);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("PolicyTable: invalid probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("PolicyTable: row does not sum to 1");
  }
}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  return PolicyTable(n_states, n_actions, 1.0 / n_actions);
}

std::vector<double> Gridworld::start_distribution() const {
  std::vector<double> d(mdp.n_states, 0.0);
  d[start] = 1.0;
  return d;
}

namespace {

[[noreturn]] void layout_error(const std::string& what, int row, int col) {
  std::ostringstream msg;
  msg << "gridworld layout: " << what << " at row " << row << ", col " << col;
  throw parse_error(msg.str());
}

}  // namespace

Gridworld build_gridworld(const std::string& layout, double step_reward,
                          double goal_reward, double slip, double gamma) {
  if (!(slip >= 0.0 && slip < 1.0))
    throw std::invalid_argument("build_gridworld: slip must be in [0, 1)");

  std::vector<std::string> lines;
  {
    std::istringstream in(layout);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
    }
  }
  if (lines.empty()) throw parse_error("gridworld layout: empty");
  const int rows = static_cast<int>(lines.size());
  const int cols = static_cast<int>(lines[0].size());
  for (int r = 0; r < rows; ++r)
    if (static_cast<int>(lines[r].size()) != cols)
      layout_error("ragged row", r, static_cast<int>(lines[r].size()));

  Gridworld gw;
  gw.rows = rows;
  gw.cols = cols;
  gw.cell_state.assign(static_cast<std::size_t>(rows) * cols, -1);

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const char ch = lines[r][c];
      if (ch == '#') continue;
      if (ch != '.' && ch != ' ' && ch != 'S' && ch != 'G')
        layout_error("unknown cell character", r, c);
      const int s = static_cast<int>(gw.state_cell.size());
      gw.cell_state[static_cast<std::size_t>(r) * cols + c] = s;
      gw.state_cell.emplace_back(r, c);
      if (ch == 'S') {
        if (gw.start >= 0) layout_error("duplicate start", r, c);
        gw.start = s;
      } else if (ch == 'G') {
        if (gw.goal >= 0) layout_error("duplicate goal", r, c);
        gw.goal = s;
      }
    }
  if (gw.start < 0) throw parse_error("gridworld layout: missing start 'S'");
  if (gw.goal < 0) throw parse_error("gridworld layout: missing goal 'G'");

  const int n = static_cast<int>(gw.state_cell.size());
  constexpr int kActions = 4;
  constexpr int dr[kActions] = {-1, 1, 0, 0};
  constexpr int dc[kActions] = {0, 0, -1, 1};

  TabularMdp& mdp = gw.mdp;
  mdp.n_states = n;
  mdp.n_actions = kActions;
  mdp.gamma = gamma;
  mdp.transition.assign(static_cast<std::size_t>(n) * kActions * n, 0.0);
  mdp.reward.assign(static_cast<std::size_t>(n) * kActions, 0.0);
  mdp.terminal.assign(n, 0);
  mdp.terminal[gw.goal] = 1;

  auto move_target = [&](int s, int dir) {
    const auto [r, c] = gw.state_cell[s];
    const int nr = r + dr[dir], nc = c + dc[dir];
    if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) return s;
    const int t = gw.cell_state[static_cast<std::size_t>(nr) * cols + nc];
    return t < 0 ? s : t;
  };

  for (int s = 0; s < n; ++s) {
    if (s == gw.goal) {
      for (int a = 0; a < kActions; ++a) mdp.p(s, a, s) = 1.0;
      continue;
    }
    for (int a = 0; a < kActions; ++a) {
      double expected_reward = 0.0;
      for (int dir = 0; dir < kActions; ++dir) {
        const double pr = (dir == a ? 1.0 - slip : 0.0) + slip / kActions;
        if (pr == 0.0) continue;
        const int t = move_target(s, dir);
        mdp.p(s, a, t) += pr;
        expected_reward += pr * (t == gw.goal ? goal_reward : step_reward);
      }
      mdp.r(s, a) = expected_reward;
    }
  }
  mdp.validate();
  return gw;
}

Gridworld load_gridworld(const std::string& path, double step_reward,
                         double goal_reward, double slip, double gamma) {
  std::ifstream in(path);
  if (!in) throw parse_error("gridworld layout: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return build_gridworld(buf.str(), step_reward, goal_reward, slip, gamma);
}

ValueTable soft_value(const QTable& q, const PolicyTable& mu, double beta) {
  if (q.n_states != mu.n_states || q.n_actions != mu.n_actions)
    throw std::invalid_argument("soft_value: shape mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("soft_value: beta must be > 0");
  ValueTable v;
  v.values.resize(q.n_states);
  for (int s = 0; s < q.n_states; ++s) {
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.n_actions; ++a)
      if (mu.at(s, a) > 0.0) m = std::max(m, q.at(s, a));
    double acc = 0.0;
    for (int a = 0; a < q.n_actions; ++a)
      if (mu.at(s, a) > 0.0)
        acc += mu.at(s, a) * std::exp((q.at(s, a) - m) / beta);
    v.values[s] = m + beta * std::log(acc);
  }
  return v;
}

namespace {

QTable backup_with_values(const QTable& q, const TabularMdp& mdp,
                          const std::vector<double>& next_value) {
  QTable out(q.n_states, q.n_actions);
  for (int s = 0; s < q.n_states; ++s)
    for (int a = 0; a < q.n_actions; ++a) {
      double future = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double pr = mdp.p(s, a, s2);
        if (pr > 0.0 && !mdp.is_terminal(s2)) future += pr * next_value[s2];
      }
      out.at(s, a) = mdp.r(s, a) + mdp.gamma * future;
    }
  return out;
}

}  // namespace

QTable soft_bellman_backup(const QTable& q, const TabularMdp& mdp,
                           const PolicyTable& mu, double beta) {
  if (q.n_states != mdp.n_states || q.n_actions != mdp.n_actions)
    throw std::invalid_argument("soft_bellman_backup: shape mismatch");
  const ValueTable v = soft_value(q, mu, beta);
  return backup_with_values(q, mdp, v.values);
}

QTable vanilla_bellman_backup(const QTable& q, const TabularMdp& mdp,
                              const PolicyTable& pi) {
  if (q.n_states != mdp.n_states || q.n_actions != mdp.n_actions ||
      pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions)
    throw std::invalid_argument("vanilla_bellman_backup: shape mismatch");
  std::vector<double> v(mdp.n_states, 0.0);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) v[s] += pi.at(s, a) * q.at(s, a);
  return backup_with_values(q, mdp, v);
}

namespace {

double sup_distance(const QTable& a, const QTable& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

}  // namespace

SolveResult solve_soft_mdp(const TabularMdp& mdp, const PolicyTable& mu,
                           double beta, double tol, long max_iterations) {
  mdp.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("solve_soft_mdp: tol must be > 0");
  QTable q(mdp.n_states, mdp.n_actions);
  for (long it = 1; it <= max_iterations; ++it) {
    QTable next = soft_bellman_backup(q, mdp, mu, beta);
    const double delta = sup_distance(next, q);
    q = std::move(next);
    if (delta < tol) return {q, soft_value(q, mu, beta), it};
  }
  throw convergence_error("solve_soft_mdp: iteration cap exceeded");
}

SolveResult solve_hard_mdp(const TabularMdp& mdp, double tol,
                           long max_iterations) {
  mdp.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("solve_hard_mdp: tol must be > 0");
  QTable q(mdp.n_states, mdp.n_actions);
  std::vector<double> v(mdp.n_states, 0.0);
  for (long it = 1; it <= max_iterations; ++it) {
    for (int s = 0; s < mdp.n_states; ++s) {
      const auto row = q.row(s);
      v[s] = *std::max_element(row.begin(), row.end());
    }
    QTable next = backup_with_values(q, mdp, v);
    const double delta = sup_distance(next, q);
    q = std::move(next);
    if (delta < tol) {
      SolveResult out;
      out.q = q;
      out.iterations = it;
      out.v.values.resize(mdp.n_states);
      for (int s = 0; s < mdp.n_states; ++s) {
        const auto row = q.row(s);
        out.v.values[s] = *std::max_element(row.begin(), row.end());
      }
      return out;
    }
  }
  throw convergence_error("solve_hard_mdp: iteration cap exceeded");
}

std::vector<int> reachable_states(const TabularMdp& mdp, int start) {
  std::vector<char> seen(mdp.n_states, 0);
  std::deque<int> queue{start};
  seen[start] = 1;
  std::vector<int> out;
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    out.push_back(s);
    for (int a = 0; a < mdp.n_actions; ++a)
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        if (mdp.p(s, a, s2) > 0.0 && !seen[s2]) {
          seen[s2] = 1;
          queue.push_back(s2);
        }
  }
  return out;
}

}  // namespace xql
