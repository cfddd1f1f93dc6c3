#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppmine/errors.hpp"
#include "ppmine/mining.hpp"
#include "ppmine/protocol.hpp"
#include "ppmine/synth.hpp"

namespace ppmine::bench {

// One measured protocol run (or single-machine baseline) at one parameter
// point.  The CSV of these records is the plotting input for runtime-vs-
// parameter comparisons; plotting itself is out of scope.
struct bench_record {
  std::string protocol;  // "A", "B", or "oracle"
  int t = 0;
  int k = 0;  // itemset length cap for the run
  int c = 0;
  std::uint64_t transactions = 0;
  double cloud_side_ms = 0;
  double dp_side_ms = 0;
  std::uint64_t ehe_ops = 0;
  std::uint64_t messages = 0;
  std::uint64_t rules_found = 0;

  bool operator==(const bench_record&) const = default;
};

inline const char* csv_header() {
  return "protocol,t,k,c,transactions,cloud_side_ms,dp_side_ms,ehe_ops,"
         "messages,rules_found";
}

inline void write_csv(std::ostream& out,
                      const std::vector<bench_record>& records) {
  out << csv_header() << "\n";
  char ms[64];
  for (const auto& r : records) {
    out << r.protocol << ',' << r.t << ',' << r.k << ',' << r.c << ','
        << r.transactions << ',';
    std::snprintf(ms, sizeof ms, "%.3f", r.cloud_side_ms);
    out << ms << ',';
    std::snprintf(ms, sizeof ms, "%.3f", r.dp_side_ms);
    out << ms << ',' << r.ehe_ops << ',' << r.messages << ',' << r.rules_found
        << "\n";
  }
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(const std::string& field, int line_no) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw invalid_input("benchmark CSV line " + std::to_string(line_no) +
                        ": bad numeric field '" + field + "'");
  return value;
}

}  // namespace detail

// Strict reader for the schema written above: exact header, ten fields per
// row, fully numeric where expected.
inline std::vector<bench_record> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw invalid_input("benchmark CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header())
    throw invalid_input("benchmark CSV header mismatch: got '" + line + "'");
  std::vector<bench_record> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_fields(line);
    if (fields.size() != 10)
      throw invalid_input("benchmark CSV line " + std::to_string(line_no) +
                          ": expected 10 fields, got " +
                          std::to_string(fields.size()));
    bench_record r;
    r.protocol = fields[0];
    if (r.protocol != "A" && r.protocol != "B" && r.protocol != "oracle")
      throw invalid_input("benchmark CSV line " + std::to_string(line_no) +
                          ": unknown protocol '" + r.protocol + "'");
    r.t = detail::parse_number<int>(fields[1], line_no);
    r.k = detail::parse_number<int>(fields[2], line_no);
    r.c = detail::parse_number<int>(fields[3], line_no);
    r.transactions = detail::parse_number<std::uint64_t>(fields[4], line_no);
    r.cloud_side_ms = detail::parse_number<double>(fields[5], line_no);
    r.dp_side_ms = detail::parse_number<double>(fields[6], line_no);
    r.ehe_ops = detail::parse_number<std::uint64_t>(fields[7], line_no);
    r.messages = detail::parse_number<std::uint64_t>(fields[8], line_no);
    r.rules_found = detail::parse_number<std::uint64_t>(fields[9], line_no);
    if (r.t < 0 || r.k < 0 || r.c < 0 || r.cloud_side_ms < 0 ||
        r.dp_side_ms < 0)
      throw invalid_input("benchmark CSV line " + std::to_string(line_no) +
                          ": negative value");
    records.push_back(std::move(r));
  }
  return records;
}

// Parameter sweep.  Defaults mirror the published experiment ranges for
// possessor count and itemset length; `k` is interpreted as the itemset
// length cap (max_k) and the generator plants one deep pattern so the cap
// actually binds.
struct sweep_config {
  std::vector<int> t_values{3, 4, 5, 6, 7, 8, 9};
  std::vector<int> k_values{6, 7, 8, 9, 10, 11, 12};
  std::vector<int> c_values{1};
  std::vector<std::string> protocols{"A", "B"};  // may include "oracle"
  std::size_t transactions = 5000;
  std::size_t vocabulary = 50;
  double mean_items = 8.0;
  int plant_depth = 8;  // longest planted pattern; 0 disables planting
  double plant_support = 0.2;
  mining::thresholds th{0.1, 0.8};
  int repetitions = 1;
  std::uint64_t seed = 0;
};

inline sweep_config sweep_config_from_json(const nlohmann::json& doc) {
  try {
    sweep_config sw;
    if (doc.contains("t")) sw.t_values = doc["t"].get<std::vector<int>>();
    if (doc.contains("k")) sw.k_values = doc["k"].get<std::vector<int>>();
    if (doc.contains("c")) sw.c_values = doc["c"].get<std::vector<int>>();
    if (doc.contains("protocols"))
      sw.protocols = doc["protocols"].get<std::vector<std::string>>();
    if (doc.contains("transactions"))
      sw.transactions = doc["transactions"].get<std::size_t>();
    if (doc.contains("vocabulary"))
      sw.vocabulary = doc["vocabulary"].get<std::size_t>();
    if (doc.contains("mean_items"))
      sw.mean_items = doc["mean_items"].get<double>();
    if (doc.contains("plant_depth"))
      sw.plant_depth = doc["plant_depth"].get<int>();
    if (doc.contains("plant_support"))
      sw.plant_support = doc["plant_support"].get<double>();
    if (doc.contains("ts")) sw.th.ts = doc["ts"].get<double>();
    if (doc.contains("tc")) sw.th.tc = doc["tc"].get<double>();
    if (doc.contains("repetitions"))
      sw.repetitions = doc["repetitions"].get<int>();
    if (doc.contains("seed")) sw.seed = doc["seed"].get<std::uint64_t>();
    return sw;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad sweep config: ") + e.what());
  }
}

inline void validate(const sweep_config& sw) {
  if (sw.t_values.empty() || sw.k_values.empty() || sw.c_values.empty())
    throw config_error("sweep axes must be non-empty");
  for (int t : sw.t_values)
    if (t < 2) throw config_error("sweep t values must be >= 2");
  for (int k : sw.k_values)
    if (k < 1) throw config_error("sweep k values must be >= 1");
  for (int c : sw.c_values)
    if (c < 1) throw config_error("sweep c values must be >= 1");
  if (sw.protocols.empty()) throw config_error("sweep protocols are empty");
  for (const auto& p : sw.protocols)
    if (p != "A" && p != "B" && p != "oracle")
      throw config_error("sweep protocol must be A, B, or oracle, got '" + p +
                         "'");
  if (sw.repetitions < 1) throw config_error("repetitions must be >= 1");
  if (sw.plant_depth < 0) throw config_error("plant_depth must be >= 0");
  mining::validate(sw.th);
}

inline synth::synth_config sweep_dataset_config(const sweep_config& sw) {
  synth::synth_config gen;
  gen.transactions = sw.transactions;
  gen.vocabulary = sw.vocabulary;
  gen.mean_items = sw.mean_items;
  if (sw.plant_depth > 0) {
    synth::plant_spec plant;
    for (int i = 0; i < sw.plant_depth; ++i)
      plant.items.push_back(synth::item_name(static_cast<std::size_t>(i)));
    plant.support = sw.plant_support;
    gen.plants.push_back(std::move(plant));
  }
  return gen;
}

inline bench_record record_of_run(const protocol::run_config& cfg,
                                  const protocol::run_output& out,
                                  std::uint64_t transactions) {
  bench_record r;
  r.protocol = protocol::to_string(cfg.protocol);
  r.t = cfg.t;
  r.k = cfg.max_k;
  r.c = cfg.c;
  r.transactions = transactions;
  r.cloud_side_ms = out.stats.cloud_side_ms();
  r.dp_side_ms = out.stats.dp_side_ms();
  r.ehe_ops = out.stats.ehe_ops();
  r.messages = out.stats.messages;
  r.rules_found = out.result.rules.size();
  return r;
}

// Full cross product of the sweep axes; one row per (protocol, point, rep).
inline std::vector<bench_record> run_sweep(const sweep_config& sw) {
  validate(sw);
  std::vector<bench_record> rows;
  synth::synth_config gen = sweep_dataset_config(sw);
  for (int rep = 0; rep < sw.repetitions; ++rep) {
    std::uint64_t rep_seed =
        derive_seed(sw.seed, "sweep-rep-" + std::to_string(rep));
    dataset joint = synth::generate(gen, rep_seed);
    for (int k : sw.k_values) {
      for (int t : sw.t_values) {
        auto parts = synth::split_round_robin(joint, t);
        for (int c : sw.c_values) {
          for (const auto& proto : sw.protocols) {
            if (proto == "oracle") {
              protocol::phase_timer timer;
              mining::mining_result result =
                  mining::single_machine_apriori(joint, sw.th, k);
              double ms = timer.stop();
              bench_record r;
              r.protocol = "oracle";
              r.t = t;
              r.k = k;
              r.c = c;
              r.transactions = joint.size();
              r.cloud_side_ms = 0;
              r.dp_side_ms = ms;
              r.ehe_ops = 0;
              r.messages = 0;
              r.rules_found = result.rules.size();
              rows.push_back(std::move(r));
              continue;
            }
            protocol::run_config cfg;
            cfg.t = t;
            cfg.c = c;
            cfg.th = sw.th;
            cfg.max_k = k;
            cfg.protocol = proto == "A" ? protocol::protocol_kind::a
                                        : protocol::protocol_kind::b;
            cfg.mode = protocol::mining_mode::exact;
            cfg.seed = rep_seed;
            cfg.run_id = "sweep-r" + std::to_string(rep) + "-t" +
                         std::to_string(t) + "-k" + std::to_string(k) + "-c" +
                         std::to_string(c) + "-" + proto;
            protocol::run_output out = protocol::run(cfg, parts);
            rows.push_back(record_of_run(cfg, out, joint.size()));
          }
        }
      }
    }
  }
  return rows;
}

}  // namespace ppmine::bench
