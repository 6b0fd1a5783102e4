#include "xql/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "xql/errors.hpp"
#include "xql/rng.hpp"

namespace xql {

void TransitionDataset::validate(int n_states, int n_actions) const {
  if (transitions.empty())
    throw std::invalid_argument("TransitionDataset: empty");
  for (const Transition& t : transitions) {
    if (t.s < 0 || t.s >= n_states || t.s_next < 0 || t.s_next >= n_states ||
        t.a < 0 || t.a >= n_actions)
      throw std::invalid_argument("TransitionDataset: index out of bounds");
    if (!std::isfinite(t.r))
      throw std::invalid_argument("TransitionDataset: non-finite reward");
  }
}

std::vector<double> TransitionDataset::state_marginal(int n_states) const {
  std::vector<double> m(n_states, 0.0);
  for (const Transition& t : transitions) m[t.s] += 1.0;
  for (double& v : m) v /= static_cast<double>(transitions.size());
  return m;
}

TransitionDataset generate_dataset(const TabularMdp& mdp,
                                   const PolicyTable& behavior, std::size_t n,
                                   std::uint64_t seed, int episode_cap,
                                   std::span<const double> start) {
  mdp.validate();
  behavior.validate();
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  if (episode_cap < 1)
    throw std::invalid_argument("generate_dataset: episode_cap must be >= 1");

  std::vector<double> start_dist(start.begin(), start.end());
  if (start_dist.empty()) {
    start_dist.assign(mdp.n_states, 0.0);
    int open = 0;
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_terminal(s)) ++open;
    for (int s = 0; s < mdp.n_states; ++s)
      if (!mdp.is_terminal(s)) start_dist[s] = 1.0 / open;
  }

  Rng rng(seed);
  TransitionDataset ds;
  ds.source_seed = seed;
  ds.transitions.reserve(n);

  int s = -1, steps_in_episode = 0;
  while (ds.transitions.size() < n) {
    if (s < 0 || steps_in_episode >= episode_cap) {
      s = rng.categorical(start_dist);
      steps_in_episode = 0;
    }
    const int a = rng.categorical(behavior.row(s));
    std::vector<double> row(mdp.n_states);
    for (int s2 = 0; s2 < mdp.n_states; ++s2) row[s2] = mdp.p(s, a, s2);
    const int s2 = rng.categorical(row);
    const bool done = mdp.is_terminal(s2);
    ds.transitions.push_back({s, a, mdp.r(s, a), s2, done});
    ++steps_in_episode;
    s = done ? -1 : s2;
  }
  return ds;
}

PolicyTable empirical_behavior_policy(const TransitionDataset& ds, int n_states,
                                      int n_actions, double smoothing) {
  if (smoothing < 0.0)
    throw std::invalid_argument("empirical_behavior_policy: smoothing must be >= 0");
  PolicyTable mu(n_states, n_actions, 0.0);
  std::vector<double> counts(static_cast<std::size_t>(n_states) * n_actions,
                             smoothing);
  for (const Transition& t : ds.transitions)
    counts[static_cast<std::size_t>(t.s) * n_actions + t.a] += 1.0;
  for (int s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a)
      total += counts[static_cast<std::size_t>(s) * n_actions + a];
    if (total == 0.0) {
      for (int a = 0; a < n_actions; ++a) mu.at(s, a) = 1.0 / n_actions;
    } else {
      for (int a = 0; a < n_actions; ++a)
        mu.at(s, a) = counts[static_cast<std::size_t>(s) * n_actions + a] / total;
    }
  }
  return mu;
}

void save_dataset_csv(const TransitionDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("save_dataset_csv: cannot open " + path);
  out << "s,a,r,s_next,done\n";
  char buf[64];
  for (const Transition& t : ds.transitions) {
    std::snprintf(buf, sizeof buf, "%.17g", t.r);
    out << t.s << ',' << t.a << ',' << buf << ',' << t.s_next << ','
        << (t.done ? 1 : 0) << '\n';
  }
}

void save_samples_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("save_samples_csv: cannot open " + path);
  char buf[80];
  if (batch.weights.empty()) {
    out << "value\n";
    for (double v : batch.values) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  } else {
    out << "value,weight\n";
    for (std::size_t i = 0; i < batch.values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", batch.values[i],
                    batch.weights[i]);
      out << buf;
    }
  }
}

SampleBatch load_samples_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("load_samples_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw parse_error("load_samples_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool weighted = line == "value,weight";
  if (!weighted && line != "value")
    throw parse_error("load_samples_csv: missing or malformed header in " + path);

  SampleBatch batch;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v = 0.0, w = 0.0;
    const int matched = weighted
                            ? std::sscanf(line.c_str(), "%lf,%lf", &v, &w)
                            : std::sscanf(line.c_str(), "%lf", &v);
    if (matched != (weighted ? 2 : 1)) {
      std::ostringstream msg;
      msg << "load_samples_csv: malformed row at line " << line_no << " of " << path;
      throw parse_error(msg.str());
    }
    batch.values.push_back(v);
    if (weighted) batch.weights.push_back(w);
  }
  batch.validate();
  return batch;
}

TransitionDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("load_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw parse_error("load_dataset_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "s,a,r,s_next,done")
    throw parse_error("load_dataset_csv: missing or malformed header in " + path);

  TransitionDataset ds;
  long line_no = 1;
  auto fail = [&](const std::string& what) -> void {
    std::ostringstream msg;
    msg << "load_dataset_csv: " << what << " at line " << line_no << " of " << path;
    throw parse_error(msg.str());
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Transition t;
    int done_field = -1;
    char trailing;
    const int matched = std::sscanf(line.c_str(), "%d,%d,%lf,%d,%d%c", &t.s,
                                    &t.a, &t.r, &t.s_next, &done_field,
                                    &trailing);
    if (matched != 5) fail("malformed row");
    if (done_field != 0 && done_field != 1) fail("done must be 0 or 1");
    if (t.s < 0 || t.a < 0 || t.s_next < 0) fail("negative index");
    t.done = done_field == 1;
    ds.transitions.push_back(t);
  }
  return ds;
}

}  // namespace xql
