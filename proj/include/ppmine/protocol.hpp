#pragma once

#include <time.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppmine/allocator.hpp"
#include "ppmine/dataset.hpp"
#include "ppmine/ehe.hpp"
#include "ppmine/errors.hpp"
#include "ppmine/message.hpp"
#include "ppmine/mining.hpp"
#include "ppmine/rng.hpp"
#include "ppmine/transport.hpp"
#include "ppmine/vigenere.hpp"

namespace ppmine::protocol {

enum class protocol_kind { a, b };
enum class mining_mode { exact, naive_union };

inline std::string to_string(protocol_kind p) {
  return p == protocol_kind::a ? "A" : "B";
}

inline std::string to_string(mining_mode m) {
  return m == mining_mode::exact ? "exact" : "naive-union";
}

struct run_config {
  int t = 2;
  int c = 1;
  mining::thresholds th{};
  int max_k = 8;
  std::vector<std::string> keywords{"medical"};
  ehe::params ehe_params{};
  mining_mode mode = mining_mode::exact;
  protocol_kind protocol = protocol_kind::a;
  std::uint64_t seed = 0;
  std::string run_id = "run";
  int receive_timeout_ms = 60000;
};

inline void validate_run_config(const run_config& cfg) {
  if (cfg.t < 2) throw config_error("t must be >= 2 (multiple data owners)");
  if (cfg.c < 1) throw config_error("c must be >= 1");
  mining::validate(cfg.th);
  if (cfg.max_k < 1 || cfg.max_k > 20)
    throw config_error("max_k must be in [1, 20]");
  try {
    vigenere::key_schedule validate_schedule(cfg.keywords);
  } catch (const invalid_input& e) {
    throw config_error(std::string("bad substitution schedule: ") + e.what());
  }
  if (cfg.receive_timeout_ms < 1)
    throw config_error("receive_timeout_ms must be >= 1");
  if (cfg.protocol == protocol_kind::a) {
    ehe::validate(cfg.ehe_params);
    if (ehe::mask_budget(cfg.ehe_params) < cfg.c)
      throw config_error(
          "setup refused: folding " + std::to_string(cfg.c) +
          " ciphertexts exceeds the safe addition budget of these parameters");
  }
}

inline nlohmann::ordered_json run_config_to_json(const run_config& cfg) {
  nlohmann::ordered_json doc;
  doc["t"] = cfg.t;
  doc["c"] = cfg.c;
  doc["thresholds"] = {{"ts", cfg.th.ts}, {"tc", cfg.th.tc}};
  doc["max_k"] = cfg.max_k;
  doc["schedule"] = {{"keywords", cfg.keywords}};
  doc["ehe"] = {{"lambda", cfg.ehe_params.lambda},
                {"p_bits", cfg.ehe_params.p_bits},
                {"q_bits", cfg.ehe_params.q_bits},
                {"ra_bits", cfg.ehe_params.ra_bits},
                {"max_additions", cfg.ehe_params.max_additions},
                {"max_degree", cfg.ehe_params.max_degree},
                {"toy_override", cfg.ehe_params.toy_override}};
  doc["mode"] = to_string(cfg.mode);
  doc["protocol"] = to_string(cfg.protocol);
  doc["seed"] = cfg.seed;
  doc["run_id"] = cfg.run_id;
  doc["receive_timeout_ms"] = cfg.receive_timeout_ms;
  return doc;
}

inline run_config run_config_from_json(const nlohmann::json& doc) {
  try {
    run_config cfg;
    cfg.t = doc.at("t").get<int>();
    cfg.c = doc.at("c").get<int>();
    cfg.th.ts = doc.at("thresholds").at("ts").get<double>();
    cfg.th.tc = doc.at("thresholds").at("tc").get<double>();
    if (doc.contains("max_k")) cfg.max_k = doc["max_k"].get<int>();
    if (doc.contains("schedule")) {
      const auto& sched = doc["schedule"];
      if (sched.contains("keywords")) {
        cfg.keywords = sched["keywords"].get<std::vector<std::string>>();
      } else if (sched.contains("base")) {
        int rounds = sched.contains("rounds") ? sched["rounds"].get<int>() : 1;
        cfg.keywords = vigenere::key_schedule::derived(
                           sched["base"].get<std::string>(), rounds)
                           .keywords();
      } else {
        throw config_error("schedule needs 'keywords' or 'base'");
      }
    }
    if (doc.contains("ehe")) {
      const auto& e = doc["ehe"];
      if (e.contains("lambda")) cfg.ehe_params.lambda = e["lambda"].get<int>();
      if (e.contains("p_bits")) cfg.ehe_params.p_bits = e["p_bits"].get<int>();
      if (e.contains("q_bits")) cfg.ehe_params.q_bits = e["q_bits"].get<int>();
      if (e.contains("ra_bits"))
        cfg.ehe_params.ra_bits = e["ra_bits"].get<int>();
      if (e.contains("max_additions"))
        cfg.ehe_params.max_additions = e["max_additions"].get<std::uint64_t>();
      if (e.contains("max_degree"))
        cfg.ehe_params.max_degree = e["max_degree"].get<int>();
      if (e.contains("toy_override"))
        cfg.ehe_params.toy_override = e["toy_override"].get<bool>();
    }
    if (doc.contains("mode")) {
      std::string mode = doc["mode"].get<std::string>();
      if (mode == "exact")
        cfg.mode = mining_mode::exact;
      else if (mode == "naive-union")
        cfg.mode = mining_mode::naive_union;
      else
        throw config_error("mode must be 'exact' or 'naive-union', got '" +
                           mode + "'");
    }
    if (doc.contains("protocol")) {
      std::string proto = doc["protocol"].get<std::string>();
      if (proto == "A")
        cfg.protocol = protocol_kind::a;
      else if (proto == "B")
        cfg.protocol = protocol_kind::b;
      else
        throw config_error("protocol must be 'A' or 'B', got '" + proto + "'");
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("run_id")) cfg.run_id = doc["run_id"].get<std::string>();
    if (doc.contains("receive_timeout_ms"))
      cfg.receive_timeout_ms = doc["receive_timeout_ms"].get<int>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad run config: ") + e.what());
  }
}

// Thread CPU time: on a shared host this is each simulated machine's own
// clock, so per-party durations compose into deployment wall times without
// cross-party scheduling noise.
inline double thread_cpu_ms() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e3 +
         static_cast<double>(ts.tv_nsec) / 1e6;
}

class phase_timer {
 public:
  phase_timer() : start_(thread_cpu_ms()) {}
  double stop() const { return thread_cpu_ms() - start_; }

 private:
  double start_;
};

struct party_stats {
  double preprocess_ms = 0;        // DP: canonicalize + encipher + allocate
  double vocab_ms = 0;             // CBM: token-vocabulary extraction
  double post_ms = 0;              // master DP: decrypt/threshold/derive
  std::vector<double> level_ms;    // CBM: count+encrypt; consolidator: fold
  std::uint64_t ehe_encrypts = 0;
  std::uint64_t ehe_adds = 0;
  std::uint64_t ehe_decrypts = 0;
};

struct run_stats {
  std::vector<double> dp_preprocess_ms;
  double master_post_ms = 0;
  std::vector<double> cbm_vocab_ms;
  std::vector<std::vector<double>> cbm_level_ms;
  std::vector<double> ccbr_level_ms;
  std::uint64_t ehe_encrypts = 0;
  std::uint64_t ehe_adds = 0;
  std::uint64_t ehe_decrypts = 0;
  std::uint64_t messages = 0;
  int master_index = 0;
  int levels = 0;

  // Deployment makespan of the cloud phase: per level the slowest miner,
  // plus the consolidator's fold, plus the slowest vocabulary pass.
  double cloud_side_ms() const {
    double total = 0;
    for (double v : cbm_vocab_ms) total = std::max(total, v);
    std::size_t n_levels = 0;
    for (const auto& lv : cbm_level_ms)
      n_levels = std::max(n_levels, lv.size());
    double sum = total;
    for (std::size_t l = 0; l < n_levels; ++l) {
      double slowest = 0;
      for (const auto& lv : cbm_level_ms)
        if (l < lv.size()) slowest = std::max(slowest, lv[l]);
      sum += slowest;
      if (l < ccbr_level_ms.size()) sum += ccbr_level_ms[l];
    }
    return sum;
  }

  double dp_side_ms() const {
    double slowest = 0;
    for (double v : dp_preprocess_ms) slowest = std::max(slowest, v);
    return slowest + master_post_ms;
  }

  double max_dp_preprocess_ms() const {
    double slowest = 0;
    for (double v : dp_preprocess_ms) slowest = std::max(slowest, v);
    return slowest;
  }

  std::uint64_t ehe_ops() const { return ehe_encrypts + ehe_adds; }
};

inline net::party_id dp_id(int i) { return {net::role::dp, i}; }
inline net::party_id cbm_id(int i) { return {net::role::cbm, i}; }
inline net::party_id ccbr_id() { return {net::role::ccbr, 0}; }

inline int select_master_dp(int t, std::uint64_t round_seed) {
  if (t < 1) throw invalid_input("need at least one data possessor");
  auto gen = make_engine(round_seed);
  return static_cast<int>(bounded_uniform(gen, static_cast<std::uint64_t>(t)));
}

inline int select_master_dp(const run_config& cfg) {
  return select_master_dp(cfg.t, derive_seed(cfg.seed, "master-dp"));
}

// The key authority's deterministic key material for a run.
inline ehe::key_pair run_key_pair(const run_config& cfg) {
  auto gen = make_engine(derive_seed(cfg.seed, "ehe-keygen"));
  return ehe::keygen(cfg.ehe_params, gen);
}

struct key_placement {
  net::party_id to;
  nlohmann::ordered_json payload;
};

// Key authority plan: secret (p, a, q) to every CBM and every DP, public p
// alone to the consolidator.  Delivery order is load-bearing: every cloud
// party must hold its key before any possessor holds one, because the
// moment a possessor has a key it can flood the cloud with blocks — and a
// block (or, in single-round mode, a count report derived from one) must
// never reach a cloud party ahead of that party's own key.
inline std::vector<key_placement> distribute_keys(const run_config& cfg,
                                                  const ehe::key_pair& kp) {
  std::vector<key_placement> placements;
  nlohmann::ordered_json secret;
  secret["p"] = ehe::to_decimal(kp.pk.p);
  secret["a"] = ehe::to_decimal(kp.sk.a);
  secret["q"] = ehe::to_decimal(kp.sk.q);
  for (int j = 0; j < cfg.c; ++j) placements.push_back({cbm_id(j), secret});
  placements.push_back({ccbr_id(), ehe::public_key_to_json(kp.pk)});
  for (int i = 0; i < cfg.t; ++i) placements.push_back({dp_id(i), secret});
  return placements;
}

namespace detail {

class mailbox {
 public:
  mailbox(net::transport& tr, net::party_id self, int timeout_ms)
      : tr_(tr), self_(self), timeout_(timeout_ms) {}

  net::protocol_message await(std::initializer_list<net::message_kind> kinds) {
    auto msg = tr_.receive(self_, timeout_);
    if (!msg)
      throw protocol_error(net::to_string(self_) +
                           ": timed out waiting for a message");
    for (net::message_kind k : kinds)
      if (msg->kind == k) return std::move(*msg);
    throw protocol_error(net::to_string(self_) + ": unexpected " +
                         net::to_string(msg->kind) + " from " +
                         net::to_string(msg->from));
  }

  // Exactly one message of the given kind and round from each index in
  // [0, count) of the given role, in any arrival order.
  std::vector<net::protocol_message> collect(net::message_kind kind, int round,
                                             net::role from_role, int count) {
    std::vector<std::optional<net::protocol_message>> slots(
        static_cast<std::size_t>(count));
    for (int received = 0; received < count; ++received)
      place(await({kind}), round, from_role, slots);
    std::vector<net::protocol_message> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
  }

  std::vector<net::protocol_message> collect_with_first(
      net::protocol_message first, net::message_kind kind, int round,
      net::role from_role, int count) {
    std::vector<std::optional<net::protocol_message>> slots(
        static_cast<std::size_t>(count));
    place(std::move(first), round, from_role, slots);
    for (int received = 1; received < count; ++received)
      place(await({kind}), round, from_role, slots);
    std::vector<net::protocol_message> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
  }

 private:
  void place(net::protocol_message msg, int round, net::role from_role,
             std::vector<std::optional<net::protocol_message>>& slots) {
    if (msg.round != round)
      throw protocol_error(net::to_string(self_) + ": expected round " +
                           std::to_string(round) + ", got " +
                           std::to_string(msg.round) + " from " +
                           net::to_string(msg.from));
    if (msg.from.r != from_role || msg.from.index < 0 ||
        msg.from.index >= static_cast<int>(slots.size()))
      throw protocol_error(net::to_string(self_) + ": message from " +
                           net::to_string(msg.from) + " out of place");
    auto& slot = slots[static_cast<std::size_t>(msg.from.index)];
    if (slot)
      throw protocol_error(net::to_string(self_) + ": duplicate message from " +
                           net::to_string(msg.from));
    slot = std::move(msg);
  }

  net::transport& tr_;
  net::party_id self_;
  std::chrono::milliseconds timeout_;
};

inline nlohmann::ordered_json itemsets_to_json(
    const std::vector<mining::itemset>& sets) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : sets) arr.push_back(s);
  return arr;
}

inline std::vector<mining::itemset> itemsets_from_json(
    const nlohmann::json& arr) {
  std::vector<mining::itemset> sets;
  for (const auto& entry : arr) {
    mining::itemset s = entry.get<mining::itemset>();
    mining::require_canonical(s);
    sets.push_back(std::move(s));
  }
  return sets;
}

inline ehe::key_pair key_pair_from_secret(const run_config& cfg,
                                          const nlohmann::json& payload) {
  ehe::key_pair kp;
  kp.prm = cfg.ehe_params;
  kp.pk.p = ehe::from_decimal(payload.at("p").get<std::string>());
  kp.sk.a = ehe::from_decimal(payload.at("a").get<std::string>());
  kp.sk.q = ehe::from_decimal(payload.at("q").get<std::string>());
  return kp;
}

// Map a token-domain support table back to the item domain.
inline mining::support_table decipher_table(
    const mining::support_table& tokens,
    const vigenere::key_schedule& schedule) {
  mining::support_table plain;
  plain.total_transactions = tokens.total_transactions;
  for (const auto& [key, count] : tokens.counts) {
    mining::itemset toks = mining::itemset_from_key(key);
    mining::itemset items;
    items.reserve(toks.size());
    for (const auto& tok : toks)
      items.push_back(vigenere::decrypt_item(tok, schedule));
    std::sort(items.begin(), items.end());
    plain.counts[mining::itemset_key(items)] = count;
  }
  return plain;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Party state machines.  Each runs to completion against a transport; the
// loopback engine hosts all of them on threads, `serve` hosts exactly one.
// ---------------------------------------------------------------------------

namespace detail {

struct master_state {
  mining::support_table token_frequent;  // frequent itemsets, token domain
  std::uint64_t total = 0;
  int final_round = 1;
};

// Shared tail: threshold table -> rules -> decipher -> broadcast result.
inline void publish_result(const run_config& cfg, net::transport& tr,
                           int master_index, const master_state& st,
                           const vigenere::key_schedule& schedule,
                           party_stats& stats) {
  phase_timer timer;
  mining::support_table plain = detail::decipher_table(st.token_frequent, schedule);
  mining::mining_result result;
  result.frequent = plain;
  if (plain.total_transactions > 0 && !plain.counts.empty())
    result.rules = mining::derive_rules(plain, cfg.th);
  nlohmann::ordered_json payload = mining::result_to_json(result);
  stats.post_ms += timer.stop();
  for (int i = 0; i < cfg.t; ++i)
    tr.send({dp_id(master_index), dp_id(i), net::message_kind::global_result,
             st.final_round, payload});
}

// Exact mode: level-wise loop with a shared candidate list per level.
inline master_state drive_master_exact(const run_config& cfg,
                                       net::transport& tr, mailbox& mb,
                                       int master_index,
                                       const std::optional<ehe::key_pair>& kp,
                                       party_stats& stats) {
  const bool is_a = cfg.protocol == protocol_kind::a;
  master_state st;

  // Round 0: miners report their token vocabularies as count-free candidates.
  auto reports = mb.collect(net::message_kind::candidate_broadcast, 0,
                            net::role::cbm, cfg.c);
  std::set<std::string> tokens;
  for (const auto& rep : reports)
    for (const auto& tok : rep.payload.at("tokens"))
      tokens.insert(tok.get<std::string>());
  std::vector<mining::itemset> candidates;
  for (const auto& tok : tokens) candidates.push_back({tok});

  std::optional<ehe::decryptor> dec;
  if (is_a) dec.emplace(*kp);
  mining::exact_threshold ts(cfg.th.ts);

  int k = 1;
  for (; k <= cfg.max_k && !candidates.empty(); ++k) {
    nlohmann::ordered_json broadcast;
    broadcast["candidates"] = detail::itemsets_to_json(candidates);
    for (int j = 0; j < cfg.c; ++j)
      tr.send({dp_id(master_index), cbm_id(j),
               net::message_kind::candidate_broadcast, k, broadcast});

    std::vector<std::uint64_t> counts(candidates.size(), 0);
    std::uint64_t level_total = 0;
    if (is_a) {
      auto msg = mb.await({net::message_kind::encrypted_global});
      if (msg.round != k)
        throw protocol_error("master: global counts for round " +
                             std::to_string(msg.round) + ", expected " +
                             std::to_string(k));
      phase_timer timer;
      const auto& entries = msg.payload.at("entries");
      if (entries.size() != candidates.size() + 1)
        throw protocol_error("master: expected " +
                             std::to_string(candidates.size() + 1) +
                             " folded entries, got " +
                             std::to_string(entries.size()));
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        ehe::bigint b = (*dec)(ehe::ciphertext_from_json(entries[i]));
        ++stats.ehe_decrypts;
        counts[i] = b.convert_to<std::uint64_t>();
      }
      ehe::bigint sz = (*dec)(ehe::ciphertext_from_json(entries.back()));
      ++stats.ehe_decrypts;
      level_total = sz.convert_to<std::uint64_t>();
      stats.post_ms += timer.stop();
    } else {
      auto batch = mb.collect(net::message_kind::plain_counts, k,
                              net::role::cbm, cfg.c);
      phase_timer timer;
      for (const auto& msg : batch) {  // already in miner-index order
        const auto& plain = msg.payload.at("counts");
        if (plain.size() != candidates.size())
          throw protocol_error("master: count vector length mismatch");
        for (std::size_t i = 0; i < candidates.size(); ++i)
          counts[i] += plain[i].get<std::uint64_t>();
        level_total += msg.payload.at("block_size").get<std::uint64_t>();
      }
      stats.post_ms += timer.stop();
    }

    phase_timer timer;
    if (k == 1)
      st.total = level_total;
    else if (level_total != st.total)
      throw protocol_error("master: global transaction count drifted");

    std::vector<mining::itemset> frequent_k;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (ts.met_by(counts[i], st.total)) {
        st.token_frequent.counts[mining::itemset_key(candidates[i])] =
            counts[i];
        frequent_k.push_back(candidates[i]);
      }
    }
    candidates = mining::generate_candidates(frequent_k);
    stats.post_ms += timer.stop();
  }

  // Termination: an empty candidate list to miners, a stop marker to the
  // consolidator.
  nlohmann::ordered_json empty_broadcast;
  empty_broadcast["candidates"] = nlohmann::ordered_json::array();
  for (int j = 0; j < cfg.c; ++j)
    tr.send({dp_id(master_index), cbm_id(j),
             net::message_kind::candidate_broadcast, k, empty_broadcast});
  if (is_a) {
    nlohmann::ordered_json stop;
    stop["terminate"] = true;
    tr.send({dp_id(master_index), ccbr_id(),
             net::message_kind::candidate_broadcast, k, stop});
  }
  st.token_frequent.total_transactions = st.total;
  st.final_round = k;
  return st;
}

// Naive-union mode: one shot; each miner reports only its locally frequent
// itemsets, the master merges and thresholds globally.
inline master_state drive_master_naive(const run_config& cfg,
                                       net::transport& tr, mailbox& mb,
                                       int master_index,
                                       const std::optional<ehe::key_pair>& kp,
                                       party_stats& stats) {
  (void)tr;
  (void)master_index;
  const bool is_a = cfg.protocol == protocol_kind::a;
  master_state st;
  mining::support_table merged;

  if (is_a) {
    auto msg = mb.await({net::message_kind::encrypted_global});
    if (msg.round != 0)
      throw protocol_error("master: unexpected round in folded report");
    phase_timer timer;
    ehe::decryptor dec(*kp);
    for (const auto& group : msg.payload.at("groups")) {
      mining::itemset items = group.at("itemset").get<mining::itemset>();
      mining::require_canonical(items);
      ehe::bigint b = dec(ehe::ciphertext_from_json(group));
      ++stats.ehe_decrypts;
      merged.counts[mining::itemset_key(items)] =
          b.convert_to<std::uint64_t>();
    }
    ehe::bigint sz = dec(ehe::ciphertext_from_json(msg.payload.at("size")));
    ++stats.ehe_decrypts;
    merged.total_transactions = sz.convert_to<std::uint64_t>();
    stats.post_ms += timer.stop();
  } else {
    auto batch = mb.collect(net::message_kind::plain_counts, 0,
                            net::role::cbm, cfg.c);
    phase_timer timer;
    for (const auto& msg : batch) {
      for (const auto& group : msg.payload.at("groups")) {
        mining::itemset items = group.at("itemset").get<mining::itemset>();
        mining::require_canonical(items);
        merged.counts[mining::itemset_key(items)] +=
            group.at("count").get<std::uint64_t>();
      }
      merged.total_transactions +=
          msg.payload.at("block_size").get<std::uint64_t>();
    }
    stats.post_ms += timer.stop();
  }

  phase_timer timer;
  st.total = merged.total_transactions;
  mining::exact_threshold ts(cfg.th.ts);
  for (const auto& [key, count] : merged.counts)
    if (ts.met_by(count, st.total)) st.token_frequent.counts[key] = count;
  st.token_frequent.total_transactions = st.total;
  st.final_round = 1;
  stats.post_ms += timer.stop();
  return st;
}

}  // namespace detail

// Data possessor: receive keys (Protocol A), preprocess and scatter blocks,
// then either drive the run (master) or wait for the published result.
inline mining::mining_result run_data_possessor(
    const run_config& cfg, int index, const dataset& records,
    net::transport& tr, party_stats& stats,
    nlohmann::ordered_json* manifest_out = nullptr) {
  detail::mailbox mb(tr, dp_id(index), cfg.receive_timeout_ms);
  const bool is_a = cfg.protocol == protocol_kind::a;

  std::optional<ehe::key_pair> kp;
  if (is_a) {
    auto msg = mb.await({net::message_kind::key_distribution});
    kp = detail::key_pair_from_secret(cfg, msg.payload);
  }

  phase_timer preprocess;
  vigenere::key_schedule schedule(cfg.keywords);
  dataset canon = canonicalize_dataset(records);
  dataset enciphered = vigenere::encrypt_dataset(canon, schedule);
  auto gen = make_engine(
      derive_seed(cfg.seed, "dp-" + std::to_string(index) + "-alloc"));
  dsa::allocation alloc = dsa::allocate(enciphered, cfg.c, gen);
  stats.preprocess_ms = preprocess.stop();
  if (manifest_out) *manifest_out = dsa::manifest_to_json(alloc, cfg.run_id);

  auto by_cbm = alloc.blocks_by_cbm();
  for (int j = 0; j < cfg.c; ++j) {
    nlohmann::ordered_json payload;
    payload["run_id"] = cfg.run_id;
    auto& recs = payload["records"] = nlohmann::ordered_json::array();
    for (const auto& rec : by_cbm[static_cast<std::size_t>(j)].records) {
      nlohmann::ordered_json jr;
      jr["pid_hash"] = rec.pid;
      jr["items"] = rec.items;
      recs.push_back(std::move(jr));
    }
    tr.send({dp_id(index), cbm_id(j), net::message_kind::block_assign, 0,
             payload});
  }

  const int master = select_master_dp(cfg);
  if (index == master) {
    detail::master_state st =
        cfg.mode == mining_mode::exact
            ? detail::drive_master_exact(cfg, tr, mb, index, kp, stats)
            : detail::drive_master_naive(cfg, tr, mb, index, kp, stats);
    detail::publish_result(cfg, tr, index, st, schedule, stats);
  }

  for (;;) {
    auto msg = mb.await({net::message_kind::encrypted_global,
                         net::message_kind::global_result});
    if (msg.kind == net::message_kind::global_result)
      return mining::result_from_json(msg.payload);
  }
}

// Cloud block miner: gather one block per possessor, then count candidates
// level by level (exact) or mine the block once locally (naive-union).
inline void run_block_miner(const run_config& cfg, int index,
                            net::transport& tr, party_stats& stats) {
  detail::mailbox mb(tr, cbm_id(index), cfg.receive_timeout_ms);
  const bool is_a = cfg.protocol == protocol_kind::a;
  const int master = select_master_dp(cfg);

  std::optional<ehe::key_pair> kp;
  if (is_a && index == 0) {
    auto gen = make_engine(derive_seed(cfg.seed, "ehe-keygen"));
    ehe::key_pair generated = ehe::keygen(cfg.ehe_params, gen);
    for (const auto& placement : distribute_keys(cfg, generated))
      tr.send({cbm_id(0), placement.to, net::message_kind::key_distribution, 0,
               placement.payload});
  }
  if (is_a) {
    auto msg = mb.await({net::message_kind::key_distribution});
    kp = detail::key_pair_from_secret(cfg, msg.payload);
  }

  auto blocks = mb.collect(net::message_kind::block_assign, 0, net::role::dp,
                           cfg.t);
  dataset block;
  for (const auto& msg : blocks)
    for (const auto& jr : msg.payload.at("records")) {
      transaction_record rec;
      rec.pid = jr.at("pid_hash").get<std::string>();
      rec.items = jr.at("items").get<std::vector<std::string>>();
      block.push_back(std::move(rec));
    }
  const std::uint64_t block_size = block.size();

  auto mask_gen = make_engine(
      derive_seed(cfg.seed, "cbm-" + std::to_string(index) + "-masks"));

  if (cfg.mode == mining_mode::naive_union) {
    phase_timer timer;
    mining::support_table local = mining::apriori_frequent(
        block, mining::exact_threshold(cfg.th.ts), cfg.max_k);
    if (is_a) {
      nlohmann::ordered_json payload;
      auto& groups = payload["groups"] = nlohmann::ordered_json::array();
      for (const auto& [key, count] : local.counts) {
        ehe::ciphertext ct = ehe::encrypt(*kp, count, 1, mask_gen);
        ++stats.ehe_encrypts;
        nlohmann::ordered_json group;
        group["itemset"] = mining::itemset_from_key(key);
        group["v"] = ehe::to_decimal(ct.v);
        group["e"] = ct.degree;
        groups.push_back(std::move(group));
      }
      ehe::ciphertext sz = ehe::encrypt(*kp, block_size, 1, mask_gen);
      ++stats.ehe_encrypts;
      payload["size"] = ehe::ciphertext_to_json(sz);
      stats.level_ms.push_back(timer.stop());
      tr.send({cbm_id(index), ccbr_id(), net::message_kind::encrypted_counts,
               0, payload});
    } else {
      nlohmann::ordered_json payload;
      auto& groups = payload["groups"] = nlohmann::ordered_json::array();
      for (const auto& [key, count] : local.counts) {
        nlohmann::ordered_json group;
        group["itemset"] = mining::itemset_from_key(key);
        group["count"] = count;
        groups.push_back(std::move(group));
      }
      payload["block_size"] = block_size;
      stats.level_ms.push_back(timer.stop());
      tr.send({cbm_id(index), dp_id(master), net::message_kind::plain_counts,
               0, payload});
    }
    return;
  }

  // Exact mode: report the token vocabulary, then serve the level loop.
  phase_timer vocab_timer;
  std::set<std::string> tokens;
  for (const auto& rec : block)
    for (const auto& item : rec.items) tokens.insert(item);
  nlohmann::ordered_json vocab;
  vocab["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
  stats.vocab_ms = vocab_timer.stop();
  tr.send({cbm_id(index), dp_id(master),
           net::message_kind::candidate_broadcast, 0, vocab});

  for (int k = 1;; ++k) {
    auto msg = mb.await({net::message_kind::candidate_broadcast});
    if (msg.round != k)
      throw protocol_error("miner: round skew in candidate broadcast");
    auto candidates = detail::itemsets_from_json(msg.payload.at("candidates"));
    if (candidates.empty()) return;

    phase_timer timer;
    mining::support_table counted = mining::count_candidates(block, candidates);
    if (is_a) {
      nlohmann::ordered_json payload;
      auto& entries = payload["entries"] = nlohmann::ordered_json::array();
      for (const auto& cand : candidates) {
        std::uint64_t count = counted.counts.at(mining::itemset_key(cand));
        ehe::ciphertext ct = ehe::encrypt(*kp, count, 1, mask_gen);
        ++stats.ehe_encrypts;
        entries.push_back(ehe::ciphertext_to_json(ct));
      }
      ehe::ciphertext sz = ehe::encrypt(*kp, block_size, 1, mask_gen);
      ++stats.ehe_encrypts;
      entries.push_back(ehe::ciphertext_to_json(sz));
      stats.level_ms.push_back(timer.stop());
      tr.send({cbm_id(index), ccbr_id(), net::message_kind::encrypted_counts,
               k, payload});
    } else {
      nlohmann::ordered_json payload;
      auto& counts = payload["counts"] = nlohmann::ordered_json::array();
      for (const auto& cand : candidates)
        counts.push_back(counted.counts.at(mining::itemset_key(cand)));
      payload["block_size"] = block_size;
      stats.level_ms.push_back(timer.stop());
      tr.send({cbm_id(index), dp_id(master), net::message_kind::plain_counts,
               k, payload});
    }
  }
}

// Consolidator (Protocol A only): fold per-candidate ciphertexts across
// miners, in miner-index order, and forward the folded vector to every DP.
inline void run_consolidator(const run_config& cfg, net::transport& tr,
                             party_stats& stats) {
  if (cfg.protocol != protocol_kind::a)
    throw config_error("the consolidator only exists in Protocol A");
  detail::mailbox mb(tr, ccbr_id(), cfg.receive_timeout_ms);

  auto key_msg = mb.await({net::message_kind::key_distribution});
  ehe::public_key pk = ehe::public_key_from_json(key_msg.payload);

  if (cfg.mode == mining_mode::naive_union) {
    auto first = mb.await({net::message_kind::encrypted_counts});
    auto batch = mb.collect_with_first(std::move(first),
                                       net::message_kind::encrypted_counts, 0,
                                       net::role::cbm, cfg.c);
    phase_timer timer;
    // keyed fold: union of reported itemsets, miner-index order per key
    std::map<std::string, ehe::ciphertext> folded;
    std::map<std::string, mining::itemset> keys;
    std::optional<ehe::ciphertext> folded_size;
    for (const auto& msg : batch) {
      for (const auto& group : msg.payload.at("groups")) {
        mining::itemset items = group.at("itemset").get<mining::itemset>();
        std::string key = mining::itemset_key(items);
        ehe::ciphertext ct = ehe::ciphertext_from_json(group);
        auto it = folded.find(key);
        if (it == folded.end()) {
          folded.emplace(key, ct);
          keys.emplace(key, std::move(items));
        } else {
          it->second = ehe::add(pk, it->second, ct);
          ++stats.ehe_adds;
        }
      }
      ehe::ciphertext sz =
          ehe::ciphertext_from_json(msg.payload.at("size"));
      if (!folded_size) {
        folded_size = sz;
      } else {
        folded_size = ehe::add(pk, *folded_size, sz);
        ++stats.ehe_adds;
      }
    }
    nlohmann::ordered_json payload;
    auto& groups = payload["groups"] = nlohmann::ordered_json::array();
    for (const auto& [key, ct] : folded) {
      nlohmann::ordered_json group;
      group["itemset"] = keys.at(key);
      group["v"] = ehe::to_decimal(ct.v);
      group["e"] = ct.degree;
      groups.push_back(std::move(group));
    }
    payload["size"] = ehe::ciphertext_to_json(*folded_size);
    stats.level_ms.push_back(timer.stop());
    for (int i = 0; i < cfg.t; ++i)
      tr.send({ccbr_id(), dp_id(i), net::message_kind::encrypted_global, 0,
               payload});
    return;
  }

  for (;;) {
    auto msg = mb.await({net::message_kind::encrypted_counts,
                         net::message_kind::candidate_broadcast});
    if (msg.kind == net::message_kind::candidate_broadcast) return;  // stop
    const int k = msg.round;
    auto batch = mb.collect_with_first(std::move(msg),
                                       net::message_kind::encrypted_counts, k,
                                       net::role::cbm, cfg.c);
    phase_timer timer;
    const std::size_t width = batch.front().payload.at("entries").size();
    std::vector<ehe::ciphertext> folded;
    folded.reserve(width);
    for (std::size_t i = 0; i < width; ++i)
      folded.push_back(
          ehe::ciphertext_from_json(batch.front().payload.at("entries")[i]));
    for (std::size_t b = 1; b < batch.size(); ++b) {
      const auto& entries = batch[b].payload.at("entries");
      if (entries.size() != width)
        throw protocol_error("consolidator: ragged count vectors");
      for (std::size_t i = 0; i < width; ++i) {
        folded[i] =
            ehe::add(pk, folded[i], ehe::ciphertext_from_json(entries[i]));
        ++stats.ehe_adds;
      }
    }
    nlohmann::ordered_json payload;
    auto& entries = payload["entries"] = nlohmann::ordered_json::array();
    for (const auto& ct : folded) entries.push_back(ehe::ciphertext_to_json(ct));
    stats.level_ms.push_back(timer.stop());
    for (int i = 0; i < cfg.t; ++i)
      tr.send({ccbr_id(), dp_id(i), net::message_kind::encrypted_global, k,
               payload});
  }
}

// ---------------------------------------------------------------------------
// Loopback engine: host every party on its own thread and collect outputs.
// ---------------------------------------------------------------------------

struct run_output {
  mining::mining_result result;
  std::vector<net::protocol_message> audit;
  run_stats stats;
  std::vector<nlohmann::ordered_json> manifests;  // one per DP
};

inline run_output run(const run_config& cfg,
                      const std::vector<dataset>& per_dp) {
  validate_run_config(cfg);
  if (static_cast<int>(per_dp.size()) != cfg.t)
    throw config_error("need exactly t datasets, got " +
                       std::to_string(per_dp.size()));
  const bool is_a = cfg.protocol == protocol_kind::a;

  net::loopback_transport lt;
  for (int i = 0; i < cfg.t; ++i) lt.register_endpoint(dp_id(i));
  for (int j = 0; j < cfg.c; ++j) lt.register_endpoint(cbm_id(j));
  if (is_a) lt.register_endpoint(ccbr_id());

  std::vector<mining::mining_result> results(
      static_cast<std::size_t>(cfg.t));
  std::vector<party_stats> dp_stats(static_cast<std::size_t>(cfg.t));
  std::vector<party_stats> cbm_stats(static_cast<std::size_t>(cfg.c));
  party_stats ccbr_stats;
  std::vector<nlohmann::ordered_json> manifests(
      static_cast<std::size_t>(cfg.t));
  std::vector<std::exception_ptr> failures(
      static_cast<std::size_t>(cfg.t + cfg.c + 1));

  std::vector<std::thread> threads;
  for (int i = 0; i < cfg.t; ++i) {
    threads.emplace_back([&, i] {
      try {
        results[i] = run_data_possessor(cfg, i, per_dp[i], lt, dp_stats[i],
                                        &manifests[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    });
  }
  for (int j = 0; j < cfg.c; ++j) {
    threads.emplace_back([&, j] {
      try {
        run_block_miner(cfg, j, lt, cbm_stats[j]);
      } catch (...) {
        failures[cfg.t + j] = std::current_exception();
      }
    });
  }
  if (is_a) {
    threads.emplace_back([&] {
      try {
        run_consolidator(cfg, lt, ccbr_stats);
      } catch (...) {
        failures[cfg.t + cfg.c] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  for (int i = 1; i < cfg.t; ++i)
    if (!(results[i] == results[0]))
      throw protocol_error("published results disagree across possessors");

  run_output out;
  out.result = results[0];
  out.audit = lt.audit();
  out.manifests = std::move(manifests);
  auto& rs = out.stats;
  rs.master_index = select_master_dp(cfg);
  for (int i = 0; i < cfg.t; ++i)
    rs.dp_preprocess_ms.push_back(dp_stats[i].preprocess_ms);
  rs.master_post_ms = dp_stats[rs.master_index].post_ms;
  for (int j = 0; j < cfg.c; ++j) {
    rs.cbm_vocab_ms.push_back(cbm_stats[j].vocab_ms);
    rs.cbm_level_ms.push_back(cbm_stats[j].level_ms);
    rs.levels = std::max(rs.levels,
                         static_cast<int>(cbm_stats[j].level_ms.size()));
  }
  rs.ccbr_level_ms = ccbr_stats.level_ms;
  for (const auto& ps : dp_stats) {
    rs.ehe_encrypts += ps.ehe_encrypts;
    rs.ehe_adds += ps.ehe_adds;
    rs.ehe_decrypts += ps.ehe_decrypts;
  }
  for (const auto& ps : cbm_stats) {
    rs.ehe_encrypts += ps.ehe_encrypts;
    rs.ehe_adds += ps.ehe_adds;
    rs.ehe_decrypts += ps.ehe_decrypts;
  }
  rs.ehe_encrypts += ccbr_stats.ehe_encrypts;
  rs.ehe_adds += ccbr_stats.ehe_adds;
  rs.ehe_decrypts += ccbr_stats.ehe_decrypts;
  rs.messages = out.audit.size();
  return out;
}

inline run_output run_protocol_a(const run_config& cfg,
                                 const std::vector<dataset>& per_dp) {
  if (cfg.protocol != protocol_kind::a)
    throw config_error("run_protocol_a needs protocol = A");
  return run(cfg, per_dp);
}

inline run_output run_protocol_b(const run_config& cfg,
                                 const std::vector<dataset>& per_dp) {
  if (cfg.protocol != protocol_kind::b)
    throw config_error("run_protocol_b needs protocol = B");
  return run(cfg, per_dp);
}

// ---------------------------------------------------------------------------
// Privacy audit over a completed run's message log.
// ---------------------------------------------------------------------------

struct privacy_violation {
  std::string predicate;  // "P1".."P4"
  std::size_t message_index = 0;
  std::string detail;
};

namespace detail {

inline void walk_strings(const nlohmann::ordered_json& doc,
                         std::vector<std::string>& out) {
  if (doc.is_string()) {
    out.push_back(doc.get<std::string>());
  } else if (doc.is_object()) {
    for (const auto& [_, value] : doc.items()) walk_strings(value, out);
  } else if (doc.is_array()) {
    for (const auto& value : doc) walk_strings(value, out);
  }
}

inline void walk_numbers(const nlohmann::ordered_json& doc,
                         const std::string& path,
                         std::vector<std::string>& paths) {
  if (doc.is_number()) {
    paths.push_back(path);
  } else if (doc.is_object()) {
    for (const auto& [key, value] : doc.items())
      walk_numbers(value, path.empty() ? key : path + "." + key, paths);
  } else if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i)
      walk_numbers(doc[i], path + "[" + std::to_string(i) + "]", paths);
  }
}

inline bool path_leaf_is(const std::string& path, std::string_view leaf) {
  std::size_t dot = path.rfind('.');
  std::string_view tail =
      dot == std::string::npos ? std::string_view(path)
                               : std::string_view(path).substr(dot + 1);
  return tail == leaf;
}

// SHA-256 digests (64 lowercase hex chars) contain short hex-only words by
// chance, so the embedded-word scan skips digest-shaped values.  Exact
// equality is still checked for every string.
inline bool digest_shaped(std::string_view value) {
  if (value.size() != 64) return false;
  return std::all_of(value.begin(), value.end(), [](unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

}  // namespace detail

// P1: no plaintext item reaches a miner or the consolidator.  Item names
//     can hide inside longer strings (joined keys, padded fields), so every
//     string value is checked for vocabulary words as substrings, not just
//     for equality.
// P2: no original record identifier reaches a miner or the consolidator.
// P3: Protocol A — nothing readable reaches the consolidator: no plain
//     counts (any numeric field outside ciphertext degree fields) and no
//     secret key material.
// P4: no possessor sees another possessor's original identifiers.
inline std::vector<privacy_violation> audit_privacy(
    const std::vector<net::protocol_message>& log, const run_config& cfg,
    const std::vector<dataset>& per_dp) {
  std::vector<privacy_violation> violations;

  std::unordered_set<std::string> vocab_exact;
  std::map<std::size_t, std::vector<std::string>> vocab_by_len;
  std::unordered_map<std::string, int> pid_owner;
  for (std::size_t i = 0; i < per_dp.size(); ++i) {
    for (const auto& rec : per_dp[i]) {
      pid_owner.emplace(rec.pid, static_cast<int>(i));
      for (const auto& raw : rec.items) {
        std::string item = canonicalize_item(raw);
        if (!item.empty() && vocab_exact.insert(item).second)
          vocab_by_len[item.size()].push_back(item);
      }
    }
  }

  std::string secret_a, secret_q;
  if (cfg.protocol == protocol_kind::a) {
    ehe::key_pair kp = run_key_pair(cfg);
    secret_a = ehe::to_decimal(kp.sk.a);
    secret_q = ehe::to_decimal(kp.sk.q);
  }

  for (std::size_t idx = 0; idx < log.size(); ++idx) {
    const auto& msg = log[idx];
    const bool to_cloud =
        msg.to.r == net::role::cbm || msg.to.r == net::role::ccbr;
    std::string where =
        net::to_string(msg.kind) + " to " + net::to_string(msg.to);

    std::vector<std::string> values;
    if (to_cloud || msg.to.r == net::role::dp)
      detail::walk_strings(msg.payload, values);

    if (to_cloud) {
      for (const auto& value : values) {
        if (vocab_exact.count(value)) {
          violations.push_back(
              {"P1", idx, "plaintext item '" + value + "' in " + where});
          continue;
        }
        if (!detail::digest_shaped(value)) {
          for (const auto& [len, words] : vocab_by_len) {
            if (len >= value.size()) break;  // equal length handled above
            for (const auto& word : words)
              if (value.find(word) != std::string::npos)
                violations.push_back({"P1", idx,
                                      "plaintext item '" + word +
                                          "' embedded in " + where});
          }
        }
        if (pid_owner.count(value))
          violations.push_back(
              {"P2", idx, "original identifier '" + value + "' in " + where});
      }
    }

    if (msg.to.r == net::role::ccbr && cfg.protocol == protocol_kind::a) {
      std::vector<std::string> number_paths;
      detail::walk_numbers(msg.payload, "", number_paths);
      for (const auto& path : number_paths)
        if (!detail::path_leaf_is(path, "e"))
          violations.push_back(
              {"P3", idx, "plain numeric field '" + path + "' in " + where});
      for (const auto& value : values) {
        if (!secret_a.empty() && value.find(secret_a) != std::string::npos)
          violations.push_back({"P3", idx, "secret multiplier in " + where});
        if (!secret_q.empty() && value.find(secret_q) != std::string::npos)
          violations.push_back({"P3", idx, "secret modulus in " + where});
      }
      if (msg.payload.is_object() &&
          (msg.payload.contains("a") || msg.payload.contains("q")))
        violations.push_back({"P3", idx, "secret key fields in " + where});
    }

    if (msg.to.r == net::role::dp) {
      for (const auto& value : values) {
        auto it = pid_owner.find(value);
        if (it != pid_owner.end() && it->second != msg.to.index)
          violations.push_back(
              {"P4", idx,
               "possessor " + std::to_string(msg.to.index) +
                   " received identifier '" + value + "' owned by possessor " +
                   std::to_string(it->second)});
      }
    }
  }
  return violations;
}

}  // namespace ppmine::protocol
