// ppmine: privacy-preserving association-rule mining over outsourced data.
//
// Subcommands:
//   generate  write a reproducible synthetic transaction CSV
//   run       execute a full multi-party mining run in one process
//   oracle    single-machine Apriori on plaintext data (the reference)
//   verify    diff two result documents (exit 1 on any difference)
//   bench     parameter sweep, benchmark CSV on stdout or to a file
//   serve     host one party of a run over TCP
//
// Exit codes: 0 success, 1 verification/protocol failure, 2 usage or
// configuration error.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppmine/ppmine.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ppmine::config_error("cannot open config file '" + path + "'");
  ordered_json doc = ordered_json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw ppmine::config_error("config file '" + path + "' is not valid JSON");
  return doc;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ppmine::config_error(what + " must be an unsigned integer, got '" +
                               text + "'");
  return value;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& cli_seed,
                           const ordered_json* config) {
  if (cli_seed) return *cli_seed;
  if (config && config->contains("seed"))
    return (*config)["seed"].get<std::uint64_t>();
  if (const char* env = std::getenv("PPMINE_SEED"))
    return parse_u64(env, "PPMINE_SEED");
  return 0;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ppmine::config_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out.good())
    throw ppmine::config_error("short write to '" + path.string() + "'");
}

// "a+b:0.4" -> plant of itemset {a, b} at support 0.4
ppmine::synth::plant_spec parse_plant(const std::string& text) {
  std::size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size())
    throw ppmine::config_error("plant must look like 'item+item:support', got '" +
                               text + "'");
  ppmine::synth::plant_spec plant;
  try {
    std::size_t used = 0;
    plant.support = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trail");
  } catch (const std::exception&) {
    throw ppmine::config_error("bad plant support in '" + text + "'");
  }
  std::string items = text.substr(0, colon);
  std::size_t start = 0;
  for (;;) {
    std::size_t plus = items.find('+', start);
    std::string item = items.substr(
        start, plus == std::string::npos ? std::string::npos : plus - start);
    if (item.empty())
      throw ppmine::config_error("empty item in plant '" + text + "'");
    plant.items.push_back(item);
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return plant;
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& what) {
  std::vector<int> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string field = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    values.push_back(static_cast<int>(parse_u64(field, what)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

struct common_options {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed,
                    "run seed (falls back to config, then PPMINE_SEED, then 0)");
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out-dir", out_dir, "directory for output files");
  }
};

// --------------------------------------------------------------------------
// generate
// --------------------------------------------------------------------------

struct generate_options {
  common_options common;
  std::optional<std::size_t> transactions;
  std::optional<std::size_t> vocabulary;
  std::optional<double> mean_items;
  std::vector<std::string> plants;
  std::string out_path;
};

int cmd_generate(const generate_options& opt) {
  ordered_json config;
  if (!opt.common.config_path.empty())
    config = load_json_file(opt.common.config_path);
  ppmine::synth::synth_config gen =
      config.is_null() ? ppmine::synth::synth_config{}
                       : ppmine::synth::synth_config_from_json(config);
  if (opt.transactions) gen.transactions = *opt.transactions;
  if (opt.vocabulary) gen.vocabulary = *opt.vocabulary;
  if (opt.mean_items) gen.mean_items = *opt.mean_items;
  for (const auto& text : opt.plants) gen.plants.push_back(parse_plant(text));

  std::uint64_t seed =
      resolve_seed(opt.common.seed, config.is_null() ? nullptr : &config);
  ppmine::dataset records = ppmine::synth::generate(gen, seed);

  std::string out_path = opt.out_path;
  if (out_path.empty() && !opt.common.out_dir.empty())
    out_path = (fs::path(opt.common.out_dir) / "dataset.csv").string();
  if (out_path.empty()) {
    ppmine::write_dataset_csv(std::cout, records);
  } else {
    std::ostringstream buffer;
    ppmine::write_dataset_csv(buffer, records);
    write_text_file(out_path, buffer.str());
  }
  return 0;
}

// --------------------------------------------------------------------------
// run
// --------------------------------------------------------------------------

struct run_options {
  common_options common;
};

std::vector<ppmine::dataset> load_run_datasets(const ordered_json& config,
                                               const ppmine::protocol::run_config& cfg) {
  if (config.contains("datasets")) {
    auto paths = config["datasets"].get<std::vector<std::string>>();
    if (static_cast<int>(paths.size()) != cfg.t)
      throw ppmine::config_error(
          "config lists " + std::to_string(paths.size()) +
          " datasets but t = " + std::to_string(cfg.t));
    std::vector<ppmine::dataset> parts;
    for (const auto& path : paths)
      parts.push_back(ppmine::read_dataset_csv(path));
    return parts;
  }
  if (config.contains("dataset")) {
    ppmine::dataset joint =
        ppmine::read_dataset_csv(config["dataset"].get<std::string>());
    return ppmine::synth::split_round_robin(joint, cfg.t);
  }
  throw ppmine::config_error("config needs 'datasets' (t paths) or 'dataset'");
}

int cmd_run(const run_options& opt) {
  if (opt.common.config_path.empty())
    throw ppmine::config_error("run needs --config");
  ordered_json config = load_json_file(opt.common.config_path);
  ppmine::protocol::run_config cfg =
      ppmine::protocol::run_config_from_json(config);
  cfg.seed = resolve_seed(opt.common.seed, &config);

  std::vector<ppmine::dataset> parts = load_run_datasets(config, cfg);
  std::uint64_t transactions = 0;
  for (const auto& part : parts) transactions += part.size();

  ppmine::protocol::run_output out = ppmine::protocol::run(cfg, parts);

  std::string out_dir = opt.common.out_dir;
  if (out_dir.empty() && config.contains("out_dir"))
    out_dir = config["out_dir"].get<std::string>();
  if (out_dir.empty()) out_dir = ".";

  write_text_file(fs::path(out_dir) / "result.json",
                  ppmine::mining::result_to_json(out.result).dump(2) + "\n");
  std::string audit;
  for (const auto& msg : out.audit) audit += ppmine::net::encode_frame(msg);
  write_text_file(fs::path(out_dir) / "audit.jsonl", audit);
  for (std::size_t i = 0; i < out.manifests.size(); ++i)
    write_text_file(fs::path(out_dir) / ("manifest_dp" + std::to_string(i) +
                                         ".json"),
                    out.manifests[i].dump(2) + "\n");

  std::vector<ppmine::bench::bench_record> row{
      ppmine::bench::record_of_run(cfg, out, transactions)};
  ppmine::bench::write_csv(std::cout, row);
  return 0;
}

// --------------------------------------------------------------------------
// oracle
// --------------------------------------------------------------------------

struct oracle_options {
  common_options common;
  std::vector<std::string> data_paths;
  double ts = 0.5;
  double tc = 0.8;
  int max_k = 8;
  std::string out_path;
};

int cmd_oracle(const oracle_options& opt) {
  std::vector<std::string> paths = opt.data_paths;
  ordered_json config;
  if (!opt.common.config_path.empty()) {
    config = load_json_file(opt.common.config_path);
    if (paths.empty() && config.contains("datasets"))
      paths = config["datasets"].get<std::vector<std::string>>();
    if (paths.empty() && config.contains("dataset"))
      paths.push_back(config["dataset"].get<std::string>());
  }
  if (paths.empty())
    throw ppmine::config_error("oracle needs at least one dataset file");

  ppmine::dataset joint;
  for (const auto& path : paths) {
    ppmine::dataset part = ppmine::read_dataset_csv(path);
    joint.insert(joint.end(), part.begin(), part.end());
  }
  ppmine::mining::thresholds th{opt.ts, opt.tc};
  ppmine::mining::mining_result result =
      ppmine::mining::single_machine_apriori(joint, th, opt.max_k);
  std::string text = ppmine::mining::result_to_json(result).dump(2) + "\n";

  std::string out_path = opt.out_path;
  if (out_path.empty() && !opt.common.out_dir.empty())
    out_path = (fs::path(opt.common.out_dir) / "oracle.json").string();
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
  return 0;
}

// --------------------------------------------------------------------------
// verify
// --------------------------------------------------------------------------

struct verify_options {
  std::string result_path;
  std::string oracle_path;
};

int cmd_verify(const verify_options& opt) {
  auto load_result = [](const std::string& path) {
    std::ifstream in(path);
    if (!in)
      throw ppmine::config_error("cannot open result file '" + path + "'");
    ordered_json doc = ordered_json::parse(in, nullptr, false);
    if (doc.is_discarded())
      throw ppmine::config_error("result file '" + path +
                                 "' is not valid JSON");
    return ppmine::mining::result_from_json(doc);
  };
  ppmine::mining::mining_result lhs = load_result(opt.result_path);
  ppmine::mining::mining_result rhs = load_result(opt.oracle_path);
  ppmine::verify::diff_report report =
      ppmine::verify::diff_results(lhs, rhs, "result", "oracle");
  if (report.equal) {
    std::cout << "results match\n";
    return 0;
  }
  for (const auto& line : report.lines) std::cout << line << "\n";
  std::cout << report.lines.size() << " difference(s)\n";
  return 1;
}

// --------------------------------------------------------------------------
// bench
// --------------------------------------------------------------------------

struct bench_options {
  common_options common;
  std::string t_list, k_list, c_list;
  std::string protocols;
  std::optional<std::size_t> transactions;
  std::optional<int> repetitions;
  std::string out_path;
};

int cmd_bench(const bench_options& opt) {
  ordered_json config;
  if (!opt.common.config_path.empty())
    config = load_json_file(opt.common.config_path);
  ppmine::bench::sweep_config sw =
      config.is_null() ? ppmine::bench::sweep_config{}
                       : ppmine::bench::sweep_config_from_json(config);
  if (!opt.t_list.empty()) sw.t_values = parse_int_list(opt.t_list, "--t");
  if (!opt.k_list.empty()) sw.k_values = parse_int_list(opt.k_list, "--k");
  if (!opt.c_list.empty()) sw.c_values = parse_int_list(opt.c_list, "--c");
  if (!opt.protocols.empty()) {
    sw.protocols.clear();
    std::size_t start = 0;
    while (start <= opt.protocols.size()) {
      std::size_t comma = opt.protocols.find(',', start);
      sw.protocols.push_back(opt.protocols.substr(
          start,
          comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (opt.transactions) sw.transactions = *opt.transactions;
  if (opt.repetitions) sw.repetitions = *opt.repetitions;
  sw.seed = resolve_seed(opt.common.seed, config.is_null() ? nullptr : &config);

  std::vector<ppmine::bench::bench_record> rows = ppmine::bench::run_sweep(sw);

  std::string out_path = opt.out_path;
  if (out_path.empty() && !opt.common.out_dir.empty())
    out_path = (fs::path(opt.common.out_dir) / "bench.csv").string();
  if (out_path.empty()) {
    ppmine::bench::write_csv(std::cout, rows);
  } else {
    std::ostringstream buffer;
    ppmine::bench::write_csv(buffer, rows);
    write_text_file(out_path, buffer.str());
  }
  return 0;
}

// --------------------------------------------------------------------------
// serve
// --------------------------------------------------------------------------

struct serve_options {
  common_options common;
  std::string role;
  int index = 0;
};

std::map<ppmine::net::party_id, std::string> build_address_book(
    const ordered_json& config, const ppmine::protocol::run_config& cfg) {
  if (!config.contains("addresses"))
    throw ppmine::config_error("serve config needs an 'addresses' object");
  const auto& addr = config["addresses"];
  std::map<ppmine::net::party_id, std::string> book;
  auto load = [&](const char* key, ppmine::net::role role, int count) {
    if (!addr.contains(key))
      throw ppmine::config_error(std::string("addresses lacks '") + key + "'");
    auto list = addr[key].get<std::vector<std::string>>();
    if (static_cast<int>(list.size()) != count)
      throw ppmine::config_error(std::string("addresses['") + key +
                                 "'] must list " + std::to_string(count) +
                                 " entries");
    for (int i = 0; i < count; ++i) book[{role, i}] = list[i];
  };
  load("dp", ppmine::net::role::dp, cfg.t);
  load("cbm", ppmine::net::role::cbm, cfg.c);
  if (cfg.protocol == ppmine::protocol::protocol_kind::a)
    load("ccbr", ppmine::net::role::ccbr, 1);
  return book;
}

int cmd_serve(const serve_options& opt) {
  if (opt.common.config_path.empty())
    throw ppmine::config_error("serve needs --config");
  ordered_json config = load_json_file(opt.common.config_path);
  ppmine::protocol::run_config cfg =
      ppmine::protocol::run_config_from_json(config);
  cfg.seed = resolve_seed(opt.common.seed, &config);
  ppmine::protocol::validate_run_config(cfg);

  ppmine::net::role role;
  if (opt.role == "dp")
    role = ppmine::net::role::dp;
  else if (opt.role == "cbm")
    role = ppmine::net::role::cbm;
  else if (opt.role == "ccbr")
    role = ppmine::net::role::ccbr;
  else
    throw ppmine::config_error("serve role must be dp, cbm, or ccbr");
  if (role == ppmine::net::role::ccbr &&
      cfg.protocol != ppmine::protocol::protocol_kind::a)
    throw ppmine::config_error(
        "the consolidator role only exists in Protocol A");
  int limit = role == ppmine::net::role::dp
                  ? cfg.t
                  : role == ppmine::net::role::cbm ? cfg.c : 1;
  if (opt.index < 0 || opt.index >= limit)
    throw ppmine::config_error("party index " + std::to_string(opt.index) +
                               " out of range for role " + opt.role);

  ppmine::net::party_id self{role, opt.index};
  auto book = build_address_book(config, cfg);
  std::string advertised = book.at(self);
  std::string host, port;
  {
    std::size_t colon = advertised.rfind(':');
    if (colon == std::string::npos)
      throw ppmine::config_error("address '" + advertised +
                                 "' is not host:port");
    port = advertised.substr(colon + 1);
  }
  ppmine::net::tcp_options topt;
  if (config.contains("connect_retries"))
    topt.connect_retries = config["connect_retries"].get<int>();
  if (config.contains("retry_delay_ms"))
    topt.retry_delay =
        std::chrono::milliseconds(config["retry_delay_ms"].get<int>());
  ppmine::net::tcp_transport tr(self, "0.0.0.0:" + port, book, topt);

  std::string out_dir = opt.common.out_dir;
  if (out_dir.empty() && config.contains("out_dir"))
    out_dir = config["out_dir"].get<std::string>();
  if (out_dir.empty()) out_dir = ".";

  ppmine::protocol::party_stats stats;
  if (role == ppmine::net::role::dp) {
    if (!config.contains("datasets"))
      throw ppmine::config_error("serve --role dp needs 'datasets' paths");
    auto paths = config["datasets"].get<std::vector<std::string>>();
    if (static_cast<int>(paths.size()) != cfg.t)
      throw ppmine::config_error("'datasets' must list t = " +
                                 std::to_string(cfg.t) + " paths");
    ppmine::dataset records =
        ppmine::read_dataset_csv(paths[static_cast<std::size_t>(opt.index)]);
    ordered_json manifest;
    ppmine::mining::mining_result result = ppmine::protocol::run_data_possessor(
        cfg, opt.index, records, tr, stats, &manifest);
    std::string tag = std::to_string(opt.index);
    write_text_file(fs::path(out_dir) / ("result_dp" + tag + ".json"),
                    ppmine::mining::result_to_json(result).dump(2) + "\n");
    write_text_file(fs::path(out_dir) / ("manifest_dp" + tag + ".json"),
                    manifest.dump(2) + "\n");
  } else if (role == ppmine::net::role::cbm) {
    ppmine::protocol::run_block_miner(cfg, opt.index, tr, stats);
  } else {
    ppmine::protocol::run_consolidator(cfg, tr, stats);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "privacy-preserving association-rule mining over outsourced data"};
  app.require_subcommand(1);

  generate_options gen_opt;
  auto* gen_cmd = app.add_subcommand(
      "generate", "write a reproducible synthetic transaction CSV");
  gen_opt.common.attach(gen_cmd);
  gen_cmd->add_option("--transactions", gen_opt.transactions,
                      "number of transactions");
  gen_cmd->add_option("--items", gen_opt.vocabulary, "distinct item names");
  gen_cmd->add_option("--mean-items", gen_opt.mean_items,
                      "average items per transaction");
  gen_cmd->add_option("--plant", gen_opt.plants,
                      "pattern to plant, e.g. 'itemx+itemy:0.4' (repeatable)");
  gen_cmd->add_option("--out", gen_opt.out_path,
                      "output CSV path (default: stdout)");

  run_options run_opt;
  auto* run_cmd = app.add_subcommand(
      "run", "execute a multi-party mining run in one process");
  run_opt.common.attach(run_cmd);

  oracle_options oracle_opt;
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "single-machine Apriori reference on plaintext data");
  oracle_opt.common.attach(oracle_cmd);
  oracle_cmd->add_option("--data", oracle_opt.data_paths,
                         "dataset CSV paths (repeatable)");
  oracle_cmd->add_option("--ts", oracle_opt.ts, "support threshold in (0,1]");
  oracle_cmd->add_option("--tc", oracle_opt.tc,
                         "confidence threshold in (0,1]");
  oracle_cmd->add_option("--max-k", oracle_opt.max_k,
                         "itemset length cap");
  oracle_cmd->add_option("--out", oracle_opt.out_path,
                         "output JSON path (default: stdout)");

  verify_options verify_opt;
  auto* verify_cmd = app.add_subcommand(
      "verify", "diff a protocol result against an oracle result");
  verify_cmd
      ->add_option("--result", verify_opt.result_path, "protocol result JSON")
      ->required();
  verify_cmd
      ->add_option("--oracle", verify_opt.oracle_path, "oracle result JSON")
      ->required();

  bench_options bench_opt;
  auto* bench_cmd =
      app.add_subcommand("bench", "parameter sweep with benchmark CSV output");
  bench_opt.common.attach(bench_cmd);
  bench_cmd->add_option("--t", bench_opt.t_list,
                        "comma list of possessor counts");
  bench_cmd->add_option("--k", bench_opt.k_list,
                        "comma list of itemset length caps");
  bench_cmd->add_option("--c", bench_opt.c_list,
                        "comma list of miner counts");
  bench_cmd->add_option("--protocols", bench_opt.protocols,
                        "comma list from A,B,oracle");
  bench_cmd->add_option("--transactions", bench_opt.transactions,
                        "synthetic dataset size");
  bench_cmd->add_option("--repetitions", bench_opt.repetitions,
                        "repetitions per point");
  bench_cmd->add_option("--out", bench_opt.out_path,
                        "output CSV path (default: stdout)");

  serve_options serve_opt;
  auto* serve_cmd =
      app.add_subcommand("serve", "host one party of a run over TCP");
  serve_opt.common.attach(serve_cmd);
  serve_cmd->add_option("--role", serve_opt.role, "dp, cbm, or ccbr")
      ->required();
  serve_cmd->add_option("--index", serve_opt.index, "party index (default 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_generate(gen_opt);
    if (run_cmd->parsed()) return cmd_run(run_opt);
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_opt);
    if (verify_cmd->parsed()) return cmd_verify(verify_opt);
    if (bench_cmd->parsed()) return cmd_bench(bench_opt);
    if (serve_cmd->parsed()) return cmd_serve(serve_opt);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ppmine::invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
