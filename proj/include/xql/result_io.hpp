#ifndef XQL_RESULT_IO_HPP
#define XQL_RESULT_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "xql/extreme_q.hpp"
#include "xql/mdp.hpp"

#include "json.hpp"

namespace xql {

using json = nlohmann::json;

json q_table_to_json(const QTable& q);          // row-major values + shape
json value_table_to_json(const ValueTable& v);
json policy_table_to_json(const PolicyTable& p);

// trace.csv: header step,v_loss,q_loss,policy_return,v_gap; one row per
// checkpoint; numbers printed with max_digits10 so reruns are byte-identical.
void save_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);

// FNV-1a 64 over the canonical (sorted-key) dump of the config.
std::string config_hash(const json& config);

// manifest.json with the config hash, seed and library version; contains no
// timestamps so repeated runs emit identical bytes.
void write_manifest(const std::string& out_dir, const json& config,
                    std::uint64_t seed);

inline constexpr const char* kVersion = "0.1.0";

// The experiment CLI entry point. Exit codes: 0 success, 1 usage/config
// error, 2 divergence or non-convergence.
int cli_run(const std::vector<std::string>& args);

}  // namespace xql

#endif  // XQL_RESULT_IO_HPP
