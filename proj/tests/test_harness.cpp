#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "ppmine/ppmine.hpp"

using namespace ppmine;

namespace {

std::uint64_t count_pattern(const dataset& records,
                            const mining::itemset& pattern) {
  auto canonical = pattern;
  std::sort(canonical.begin(), canonical.end());
  auto tbl = mining::count_candidates(records, {canonical});
  return tbl.counts.at(mining::itemset_key(canonical));
}

}  // namespace

TEST_CASE("item names enumerate a six-letter alphabet", "[harness]") {
  CHECK(synth::item_name(0) == "aaaaaa");
  CHECK(synth::item_name(1) == "aaaaab");
  CHECK(synth::item_name(25) == "aaaaaz");
  CHECK(synth::item_name(26) == "aaaaba");
  CHECK(synth::item_name(26 * 26) == "aaabaa");
  constexpr std::size_t limit = 26ull * 26 * 26 * 26 * 26 * 26;
  CHECK(synth::item_name(limit - 1) == "zzzzzz");
  CHECK_THROWS_AS(synth::item_name(limit), invalid_input);
}

TEST_CASE("the generator is deterministic and well-shaped", "[harness]") {
  synth::synth_config cfg;
  cfg.transactions = 2000;
  cfg.vocabulary = 40;
  cfg.mean_items = 4.0;

  auto records = synth::generate(cfg, 99);
  REQUIRE(records.size() == 2000);
  CHECK(records == synth::generate(cfg, 99));
  CHECK_FALSE(records == synth::generate(cfg, 100));

  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.vocabulary; ++i)
    names.insert(synth::item_name(i));

  std::uint64_t total_items = 0;
  std::set<std::string> pids;
  for (const auto& rec : records) {
    pids.insert(rec.pid);
    REQUIRE_FALSE(rec.items.empty());
    CHECK(std::is_sorted(rec.items.begin(), rec.items.end()));
    CHECK(std::adjacent_find(rec.items.begin(), rec.items.end()) ==
          rec.items.end());
    for (const auto& item : rec.items) CHECK(names.count(item) == 1);
    total_items += rec.items.size();
  }
  CHECK(pids.size() == records.size());  // identifiers are unique

  // sizes are uniform on [1, 7]; the sample mean stays near 4
  double mean = static_cast<double>(total_items) / 2000.0;
  CHECK(mean > 3.8);
  CHECK(mean < 4.2);
}

TEST_CASE("identifiers are fixed-width and ordered", "[harness]") {
  synth::synth_config cfg;
  cfg.transactions = 100;
  cfg.vocabulary = 10;
  cfg.mean_items = 2.0;
  auto records = synth::generate(cfg, 3);
  CHECK(records[0].pid == "t00");
  CHECK(records[7].pid == "t07");
  CHECK(records[99].pid == "t99");
}

TEST_CASE("planted patterns reach their promised support", "[harness]") {
  synth::synth_config cfg;
  cfg.transactions = 100;
  cfg.vocabulary = 10;
  cfg.mean_items = 2.0;
  cfg.plants.push_back({{"aaaaaa", "aaaaab"}, 0.4});
  cfg.plants.push_back({{"zzzzzz"}, 0.25});  // outside the random vocabulary

  auto records = synth::generate(cfg, 11);
  CHECK(count_pattern(records, {"aaaaaa", "aaaaab"}) >= 40);
  CHECK(count_pattern(records, {"zzzzzz"}) >= 25);
  CHECK(count_pattern(records, {"zzzzzz"}) <= 26);  // ceil(0.25*100) exactly

  // support 1.0 plants into every transaction
  synth::synth_config all = cfg;
  all.plants = {{{"aaaaac"}, 1.0}};
  CHECK(count_pattern(synth::generate(all, 11), {"aaaaac"}) == 100);

  // support 0 plants nothing beyond random co-occurrence
  synth::synth_config none = cfg;
  none.plants = {{{"zzzzzz"}, 0.0}};
  CHECK(count_pattern(synth::generate(none, 11), {"zzzzzz"}) == 0);
}

TEST_CASE("generator configurations are validated", "[harness]") {
  synth::synth_config cfg;
  cfg.transactions = 10;
  cfg.vocabulary = 5;
  cfg.mean_items = 2.0;
  CHECK_NOTHROW(synth::validate(cfg));

  auto bad = cfg;
  bad.vocabulary = 0;
  CHECK_THROWS_AS(synth::generate(bad, 1), config_error);

  bad = cfg;
  bad.mean_items = 0.5;
  CHECK_THROWS_AS(synth::generate(bad, 1), config_error);

  bad = cfg;
  bad.mean_items = 6.0;  // exceeds the vocabulary
  CHECK_THROWS_AS(synth::generate(bad, 1), config_error);

  bad = cfg;
  bad.plants.push_back({{}, 0.5});
  CHECK_THROWS_AS(synth::generate(bad, 1), config_error);

  bad = cfg;
  bad.plants.push_back({{"Bad Item"}, 0.5});
  CHECK_THROWS_AS(synth::generate(bad, 1), config_error);

  bad = cfg;
  bad.plants.push_back({{"okay"}, 1.5});
  CHECK_THROWS_AS(synth::generate(bad, 1), config_error);
}

TEST_CASE("generator configs survive the JSON round-trip", "[harness]") {
  synth::synth_config cfg;
  cfg.transactions = 123;
  cfg.vocabulary = 9;
  cfg.mean_items = 3.5;
  cfg.plants.push_back({{"alpha", "beta"}, 0.4});

  auto doc = synth::synth_config_to_json(cfg);
  auto back = synth::synth_config_from_json(doc);
  CHECK(back.transactions == cfg.transactions);
  CHECK(back.vocabulary == cfg.vocabulary);
  CHECK(back.mean_items == cfg.mean_items);
  REQUIRE(back.plants.size() == 1);
  CHECK(back.plants[0].items == cfg.plants[0].items);
  CHECK(back.plants[0].support == cfg.plants[0].support);

  auto broken = doc;
  broken["plants"][0].erase("support");
  CHECK_THROWS_AS(synth::synth_config_from_json(broken), config_error);
  auto wrong_type = doc;
  wrong_type["transactions"] = "many";
  CHECK_THROWS_AS(synth::synth_config_from_json(wrong_type), config_error);
}

TEST_CASE("round-robin splits preserve order and balance", "[harness]") {
  auto records = testutil::clinic6();
  auto parts = synth::split_round_robin(records, 4);
  REQUIRE(parts.size() == 4);
  CHECK(parts[0].size() == 2);  // records 0, 4
  CHECK(parts[1].size() == 2);
  CHECK(parts[2].size() == 1);
  CHECK(parts[3].size() == 1);
  CHECK(parts[0][0] == records[0]);
  CHECK(parts[0][1] == records[4]);
  CHECK(parts[3][0] == records[3]);

  auto solo = synth::split_round_robin(records, 1);
  REQUIRE(solo.size() == 1);
  CHECK(solo[0] == records);

  auto wide = synth::split_round_robin(records, 10);
  REQUIRE(wide.size() == 10);
  CHECK(wide[6].size() == 0);

  CHECK_THROWS_AS(synth::split_round_robin(records, 0), config_error);
}

TEST_CASE("dataset CSV files round-trip, quoting included", "[harness]") {
  dataset records = testutil::clinic6();
  records.push_back({"we,ird\"id", {"plain", "words"}});
  records.push_back({"empty-basket", {}});

  std::stringstream ss;
  write_dataset_csv(ss, records);
  auto back = read_dataset_csv(ss);
  CHECK(back == records);

  // CRLF line endings are tolerated
  std::string text = ss.str();
  std::string crlf;
  for (char ch : text) {
    if (ch == '\n') crlf += "\r\n";
    else crlf.push_back(ch);
  }
  std::stringstream windows(crlf);
  CHECK(read_dataset_csv(windows) == records);
}

TEST_CASE("malformed dataset CSV files are rejected", "[harness]") {
  auto reject = [](const std::string& text, const std::string& needle) {
    std::stringstream ss(text);
    try {
      read_dataset_csv(ss);
      FAIL("expected rejection of: " << text);
    } catch (const invalid_input& e) {
      INFO("input: " << text);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  reject("", "missing header");
  reject("id,things\np1,a\n", "expected header");
  reject("pid,items\np1,a,b\n", "expected 2 fields");
  reject("pid,items\np1\n", "expected 2 fields");
  reject("pid,items\n\"p1,a\n", "unterminated quote");
  CHECK_THROWS_AS(read_dataset_csv("/nonexistent/nowhere.csv"),
                  invalid_input);
}

TEST_CASE("benchmark CSV rows round-trip exactly", "[harness]") {
  std::vector<bench::bench_record> rows(3);
  rows[0] = {"A", 3, 8, 2, 5000, 12.125, 3.25, 4096, 120, 17};
  rows[1] = {"B", 9, 12, 1, 20000, 0.0, 1024.375, 0, 46, 0};
  rows[2] = {"oracle", 2, 6, 1, 123, 0.0, 0.5, 0, 0, 12345678901234567ull};

  std::stringstream ss;
  bench::write_csv(ss, rows);
  std::string text = ss.str();
  CHECK(text.substr(0, text.find('\n')) == bench::csv_header());

  std::stringstream in(text);
  auto back = bench::parse_csv(in);
  REQUIRE(back.size() == 3);
  CHECK(back[0] == rows[0]);
  CHECK(back[1] == rows[1]);
  CHECK(back[2] == rows[2]);
}

TEST_CASE("the benchmark CSV reader is strict", "[harness]") {
  auto reject = [](const std::string& text, const std::string& needle) {
    std::stringstream ss(text);
    try {
      bench::parse_csv(ss);
      FAIL("expected rejection of: " << text);
    } catch (const invalid_input& e) {
      INFO("input: " << text);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  std::string header = bench::csv_header();
  reject("", "empty");
  reject("wrong,header\n", "header mismatch");
  reject(header + "\nA,2,3,1,100,0.0,0.0,0,0\n", "expected 10 fields");
  reject(header + "\nA,2,3,1,100,0.0,0.0,0,0,0,9\n", "expected 10 fields");
  reject(header + "\nC,2,3,1,100,0.0,0.0,0,0,0\n", "unknown protocol");
  reject(header + "\nA,x,3,1,100,0.0,0.0,0,0,0\n", "bad numeric field 'x'");
  reject(header + "\nA,2,3,1,100,zero,0.0,0,0,0\n", "line 2");
  reject(header + "\nA,2,3,1,100,-1.0,0.0,0,0,0\n", "negative");

  // blank lines are skipped, not errors
  std::stringstream ok(header + "\n\nA,2,3,1,100,0.125,0.0,0,0,0\n\n");
  CHECK(bench::parse_csv(ok).size() == 1);
}

TEST_CASE("run summaries carry the run's own numbers", "[harness]") {
  auto cfg = testutil::clinic6_config(protocol::protocol_kind::b, 1);
  auto out = protocol::run(cfg, testutil::clinic6_split2());
  auto row = bench::record_of_run(cfg, out, 6);
  CHECK(row.protocol == "B");
  CHECK(row.t == 2);
  CHECK(row.k == 8);
  CHECK(row.c == 1);
  CHECK(row.transactions == 6);
  CHECK(row.ehe_ops == 0);
  CHECK(row.messages == out.stats.messages);
  CHECK(row.rules_found == 9);
  CHECK(row.cloud_side_ms >= 0.0);
  CHECK(row.dp_side_ms >= 0.0);
}

TEST_CASE("a one-point sweep produces one row per protocol and rep",
          "[harness]") {
  bench::sweep_config sw;
  sw.t_values = {2};
  sw.k_values = {3};
  sw.c_values = {1};
  sw.protocols = {"A", "B", "oracle"};
  sw.transactions = 60;
  sw.vocabulary = 12;
  sw.mean_items = 3.0;
  sw.plant_depth = 2;
  sw.plant_support = 0.5;
  sw.th = {0.2, 0.8};
  sw.repetitions = 2;
  sw.seed = 4;

  auto rows = bench::run_sweep(sw);
  REQUIRE(rows.size() == 6);
  for (std::size_t rep = 0; rep < 2; ++rep) {
    const auto& a = rows[rep * 3];
    const auto& b = rows[rep * 3 + 1];
    const auto& oracle = rows[rep * 3 + 2];
    CHECK(a.protocol == "A");
    CHECK(b.protocol == "B");
    CHECK(oracle.protocol == "oracle");
    for (const auto* r : {&a, &b, &oracle}) {
      CHECK(r->t == 2);
      CHECK(r->k == 3);
      CHECK(r->c == 1);
      CHECK(r->transactions == 60);
    }
    CHECK(a.ehe_ops > 0);
    CHECK(b.ehe_ops == 0);
    CHECK(oracle.ehe_ops == 0);
    CHECK(a.messages > 0);
    CHECK(oracle.messages == 0);
    // both protocols and the reference agree on the rules found
    CHECK(a.rules_found == oracle.rules_found);
    CHECK(b.rules_found == oracle.rules_found);
  }
  // everything except the measured timings is reproducible
  auto again = bench::run_sweep(sw);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].protocol == rows[i].protocol);
    CHECK(again[i].ehe_ops == rows[i].ehe_ops);
    CHECK(again[i].messages == rows[i].messages);
    CHECK(again[i].rules_found == rows[i].rules_found);
  }
}

TEST_CASE("sweep configurations parse from JSON and validate", "[harness]") {
  nlohmann::json doc = {{"t", {2, 3}},          {"k", {4}},
                        {"c", {1, 2}},          {"protocols", {"B"}},
                        {"transactions", 500},  {"vocabulary", 20},
                        {"mean_items", 5.0},    {"plant_depth", 3},
                        {"plant_support", 0.3}, {"ts", 0.15},
                        {"tc", 0.9},            {"repetitions", 2},
                        {"seed", 8}};
  auto sw = bench::sweep_config_from_json(doc);
  CHECK(sw.t_values == std::vector<int>{2, 3});
  CHECK(sw.k_values == std::vector<int>{4});
  CHECK(sw.c_values == std::vector<int>{1, 2});
  CHECK(sw.protocols == std::vector<std::string>{"B"});
  CHECK(sw.transactions == 500);
  CHECK(sw.vocabulary == 20);
  CHECK(sw.mean_items == 5.0);
  CHECK(sw.plant_depth == 3);
  CHECK(sw.plant_support == 0.3);
  CHECK(sw.th.ts == 0.15);
  CHECK(sw.th.tc == 0.9);
  CHECK(sw.repetitions == 2);
  CHECK(sw.seed == 8);

  // defaults hold when fields are absent
  auto dflt = bench::sweep_config_from_json(nlohmann::json::object());
  CHECK(dflt.t_values == std::vector<int>{3, 4, 5, 6, 7, 8, 9});
  CHECK(dflt.protocols == std::vector<std::string>{"A", "B"});

  CHECK_THROWS_AS(
      bench::sweep_config_from_json(nlohmann::json{{"t", "three"}}),
      config_error);

  auto reject = [](bench::sweep_config bad, const std::string& needle) {
    try {
      bench::validate(bad);
      FAIL("expected rejection");
    } catch (const config_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  auto base = bench::sweep_config{};
  auto bad = base;
  bad.t_values.clear();
  reject(bad, "non-empty");
  bad = base;
  bad.t_values = {1};
  reject(bad, ">= 2");
  bad = base;
  bad.protocols = {"C"};
  reject(bad, "protocol");
  bad = base;
  bad.repetitions = 0;
  reject(bad, "repetitions");
  bad = base;
  bad.plant_depth = -1;
  reject(bad, "plant_depth");
}

TEST_CASE("result diffs catch every kind of disagreement", "[harness]") {
  auto expected = testutil::clinic6_expected();

  auto same = verify::diff_results(expected, expected);
  CHECK(same.equal);
  CHECK(same.lines.empty());

  // equivalent fractions are equal, not diffs
  auto scaled = expected;
  REQUIRE(scaled.rules[0].support.num == 3);
  REQUIRE(scaled.rules[0].support.den == 6);
  scaled.rules[0].support = {1, 2};
  CHECK(verify::diff_results(expected, scaled).equal);

  auto fewer = expected;
  fewer.rules.pop_back();
  auto missing_rule = verify::diff_results(expected, fewer);
  REQUIRE(missing_rule.lines.size() == 1);
  CHECK(missing_rule.lines[0].find("missing from right") !=
        std::string::npos);

  auto renumbered = expected;
  renumbered.frequent.counts["cold"] = 5;
  auto mismatch = verify::diff_results(expected, renumbered);
  REQUIRE(mismatch.lines.size() == 1);
  CHECK(mismatch.lines[0].find("count mismatch") != std::string::npos);

  auto shrunk = expected;
  shrunk.frequent.total_transactions = 5;
  auto totals = verify::diff_results(expected, shrunk);
  REQUIRE(totals.lines.size() == 1);
  CHECK(totals.lines[0].find("transaction totals differ") !=
        std::string::npos);

  auto off = expected;
  off.rules[0].confidence = {2, 3};
  auto conf = verify::diff_results(expected, off);
  REQUIRE(conf.lines.size() == 1);
  CHECK(conf.lines[0].find("confidence mismatch") != std::string::npos);

  auto extra = expected;
  extra.frequent.counts["cold|throatpain"] = 3;
  auto gone = verify::diff_results(expected, extra, "mine", "theirs");
  REQUIRE(gone.lines.size() == 1);
  CHECK(gone.lines[0].find("missing from mine") != std::string::npos);

  auto doubled = expected;
  doubled.rules.push_back(doubled.rules[0]);
  auto dup = verify::diff_results(doubled, expected);
  CHECK_FALSE(dup.equal);
  CHECK(dup.lines[0].find("duplicate rules") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Command-line binary, exercised as a subprocess.
// ---------------------------------------------------------------------------

TEST_CASE("the generate command is reproducible and seedable", "[harness]") {
  testutil::temp_dir dir("gen");
  std::string bin = testutil::locate_cli();
  std::string base = bin +
                     " generate --transactions 40 --items 8 --mean-items 3";

  auto first = testutil::run_command(base + " --seed 5 --out " +
                                     dir.file("a.csv"));
  REQUIRE(first.exit_code == 0);
  auto second = testutil::run_command(base + " --seed 5 --out " +
                                      dir.file("b.csv"));
  REQUIRE(second.exit_code == 0);
  CHECK(testutil::read_text_file(dir.file("a.csv")) ==
        testutil::read_text_file(dir.file("b.csv")));
  CHECK(read_dataset_csv(dir.file("a.csv")).size() == 40);

  // the environment seed is the fallback when --seed is absent
  auto env = testutil::run_command("PPMINE_SEED=5 " + base + " --out " +
                                   dir.file("c.csv"));
  REQUIRE(env.exit_code == 0);
  CHECK(testutil::read_text_file(dir.file("c.csv")) ==
        testutil::read_text_file(dir.file("a.csv")));

  auto other = testutil::run_command(base + " --seed 6 --out " +
                                     dir.file("d.csv"));
  REQUIRE(other.exit_code == 0);
  CHECK(testutil::read_text_file(dir.file("d.csv")) !=
        testutil::read_text_file(dir.file("a.csv")));

  // planted patterns reach the CSV on disk
  auto planted = testutil::run_command(
      base + " --seed 5 --plant aaaaaa+aaaaab:0.4 --out " +
      dir.file("p.csv"));
  REQUIRE(planted.exit_code == 0);
  CHECK(count_pattern(read_dataset_csv(dir.file("p.csv")),
                      {"aaaaaa", "aaaaab"}) >= 16);
}

TEST_CASE("generate, oracle, run, and verify form a working pipeline",
          "[harness]") {
  testutil::temp_dir dir("pipe");
  std::string bin = testutil::locate_cli();

  write_dataset_csv(dir.file("clinic.csv"), testutil::clinic6());

  auto oracle = testutil::run_command(
      bin + " oracle --data " + dir.file("clinic.csv") +
      " --ts 0.5 --tc 0.8 --out " + dir.file("oracle.json"));
  REQUIRE(oracle.exit_code == 0);
  auto oracle_doc = nlohmann::ordered_json::parse(
      testutil::read_text_file(dir.file("oracle.json")));
  CHECK(mining::result_from_json(oracle_doc) == testutil::clinic6_expected());

  auto cfg = testutil::clinic6_config(protocol::protocol_kind::a, 1);
  auto cfg_doc = protocol::run_config_to_json(cfg);
  cfg_doc["dataset"] = dir.file("clinic.csv");
  testutil::write_text_file(dir.file("run.json"), cfg_doc.dump(2) + "\n");

  auto run = testutil::run_command(bin + " run --config " +
                                   dir.file("run.json") + " --out-dir " +
                                   dir.path().string());
  REQUIRE(run.exit_code == 0);

  // stdout carries a one-row benchmark summary of the run
  std::stringstream summary(run.output);
  auto rows = bench::parse_csv(summary);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].protocol == "A");
  CHECK(rows[0].t == 2);
  CHECK(rows[0].transactions == 6);
  CHECK(rows[0].rules_found == 9);

  // the audit trail on disk has one frame per counted message
  std::string audit = testutil::read_text_file(dir.file("audit.jsonl"));
  std::uint64_t frames = 0;
  std::stringstream audit_in(audit);
  std::string line;
  while (std::getline(audit_in, line))
    if (!line.empty()) {
      CHECK_NOTHROW(net::decode_frame(line + "\n"));
      ++frames;
    }
  CHECK(frames == rows[0].messages);

  // allocation manifests exist for both possessors and parse back
  for (int i : {0, 1}) {
    auto manifest_doc = nlohmann::ordered_json::parse(testutil::read_text_file(
        dir.file("manifest_dp" + std::to_string(i) + ".json")));
    CHECK_NOTHROW(dsa::manifest_from_json(manifest_doc));
  }

  auto match = testutil::run_command(
      bin + " verify --result " + dir.file("result.json") + " --oracle " +
      dir.file("oracle.json"));
  CHECK(match.exit_code == 0);
  CHECK(match.output.find("results match") != std::string::npos);

  // a stricter oracle disagrees and verify says so
  auto strict = testutil::run_command(
      bin + " oracle --data " + dir.file("clinic.csv") +
      " --ts 0.9 --tc 0.9 --out " + dir.file("strict.json"));
  REQUIRE(strict.exit_code == 0);
  auto diff = testutil::run_command(
      bin + " verify --result " + dir.file("result.json") + " --oracle " +
      dir.file("strict.json"));
  CHECK(diff.exit_code == 1);
  CHECK(diff.output.find("difference(s)") != std::string::npos);
}

TEST_CASE("the bench command writes a parseable sweep", "[harness]") {
  testutil::temp_dir dir("bench");
  std::string bin = testutil::locate_cli();
  auto res = testutil::run_command(
      bin + " bench --t 2 --k 2 --c 1 --protocols B --transactions 30"
            " --seed 3 --out " + dir.file("bench.csv"));
  REQUIRE(res.exit_code == 0);
  std::stringstream in(testutil::read_text_file(dir.file("bench.csv")));
  auto rows = bench::parse_csv(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].protocol == "B");
  CHECK(rows[0].t == 2);
  CHECK(rows[0].k == 2);
  CHECK(rows[0].transactions == 30);
  CHECK(rows[0].ehe_ops == 0);
}

TEST_CASE("usage errors exit with status 2", "[harness]") {
  testutil::temp_dir dir("err");
  std::string bin = testutil::locate_cli();
  write_dataset_csv(dir.file("clinic.csv"), testutil::clinic6());

  auto bad_ts = testutil::run_command(
      bin + " oracle --data " + dir.file("clinic.csv") + " --ts 2.0");
  CHECK(bad_ts.exit_code == 2);
  CHECK(bad_ts.output.find("error:") != std::string::npos);

  auto no_file = testutil::run_command(bin + " oracle --data " +
                                       dir.file("nowhere.csv"));
  CHECK(no_file.exit_code == 2);

  auto no_config = testutil::run_command(bin + " run");
  CHECK(no_config.exit_code == 2);

  auto missing_config = testutil::run_command(
      bin + " run --config " + dir.file("nowhere.json"));
  CHECK(missing_config.exit_code == 2);

  testutil::write_text_file(dir.file("broken.json"), "{not json");
  auto broken = testutil::run_command(bin + " run --config " +
                                      dir.file("broken.json"));
  CHECK(broken.exit_code == 2);
  CHECK(broken.output.find("not valid JSON") != std::string::npos);

  auto bad_proto = testutil::run_command(
      bin + " bench --t 2 --k 2 --c 1 --protocols C --transactions 20");
  CHECK(bad_proto.exit_code == 2);

  auto bad_plant = testutil::run_command(bin + " generate --plant oops");
  CHECK(bad_plant.exit_code == 2);

  auto no_subcommand = testutil::run_command(bin);
  CHECK(no_subcommand.exit_code == 2);

  auto serve_no_config = testutil::run_command(bin + " serve --role dp");
  CHECK(serve_no_config.exit_code == 2);
}
