#include "xql/result_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xql/errors.hpp"

namespace xql {

json q_table_to_json(const QTable& q) {
  return json{{"n_states", q.n_states},
              {"n_actions", q.n_actions},
              {"values", q.values}};
}

json value_table_to_json(const ValueTable& v) {
  return json{{"n_states", v.values.size()}, {"values", v.values}};
}

json policy_table_to_json(const PolicyTable& p) {
  return json{{"n_states", p.n_states},
              {"n_actions", p.n_actions},
              {"probs", p.probs}};
}

void save_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("save_trace_csv: cannot open " + path);
  out << "step,v_loss,q_loss,policy_return,v_gap\n";
  char buf[256];
  for (const TraceRow& row : trace) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g\n", row.step,
                  row.v_loss, row.q_loss, row.policy_return, row.v_gap);
    out << buf;
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("write_text_file: cannot open " + path);
  out << contents;
}

std::string config_hash(const json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::string& out_dir, const json& config,
                    std::uint64_t seed) {
  json manifest{{"config", config},
                {"config_hash", config_hash(config)},
                {"seed", seed},
                {"versions", {{"xql", kVersion}, {"result_format", 1}}}};
  write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
}

}  // namespace xql
