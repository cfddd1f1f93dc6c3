#include <map>
#include <set>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "ppmine/ppmine.hpp"

using namespace ppmine;
using protocol::protocol_kind;
using protocol::run_config;

TEST_CASE("run configurations round-trip through JSON", "[protocol]") {
  run_config cfg;
  cfg.t = 3;
  cfg.c = 2;
  cfg.th = {0.25, 0.9};
  cfg.max_k = 5;
  cfg.keywords = {"medical", "chart"};
  cfg.ehe_params.p_bits = 224;
  cfg.mode = protocol::mining_mode::naive_union;
  cfg.protocol = protocol_kind::b;
  cfg.seed = 99;
  cfg.run_id = "roundtrip";
  cfg.receive_timeout_ms = 1234;

  auto doc = protocol::run_config_to_json(cfg);
  auto back = protocol::run_config_from_json(doc);
  CHECK(back.t == cfg.t);
  CHECK(back.c == cfg.c);
  CHECK(back.th == cfg.th);
  CHECK(back.max_k == cfg.max_k);
  CHECK(back.keywords == cfg.keywords);
  CHECK(back.ehe_params == cfg.ehe_params);
  CHECK(back.mode == cfg.mode);
  CHECK(back.protocol == cfg.protocol);
  CHECK(back.seed == cfg.seed);
  CHECK(back.run_id == cfg.run_id);
  CHECK(back.receive_timeout_ms == cfg.receive_timeout_ms);

  // derived-chain schedule spelling
  auto derived = doc;
  derived["schedule"] = {{"base", "medical"}, {"rounds", 2}};
  auto with_chain = protocol::run_config_from_json(derived);
  CHECK(with_chain.keywords ==
        std::vector<std::string>{"medical", "yigqeaw"});

  auto missing = doc;
  missing.erase("t");
  CHECK_THROWS_AS(protocol::run_config_from_json(missing), config_error);
  auto bad_mode = doc;
  bad_mode["mode"] = "bogus";
  CHECK_THROWS_AS(protocol::run_config_from_json(bad_mode), config_error);
  auto bad_proto = doc;
  bad_proto["protocol"] = "C";
  CHECK_THROWS_AS(protocol::run_config_from_json(bad_proto), config_error);
}

TEST_CASE("configuration validation catches bad setups", "[protocol]") {
  auto good = testutil::clinic6_config(protocol_kind::a, 2);
  CHECK_NOTHROW(protocol::validate_run_config(good));

  auto solo = good;
  solo.t = 1;
  CHECK_THROWS_AS(protocol::validate_run_config(solo), config_error);

  auto no_miners = good;
  no_miners.c = 0;
  CHECK_THROWS_AS(protocol::validate_run_config(no_miners), config_error);

  auto deep = good;
  deep.max_k = 21;
  CHECK_THROWS_AS(protocol::validate_run_config(deep), config_error);

  auto bad_kw = good;
  bad_kw.keywords = {"not ok"};
  CHECK_THROWS_AS(protocol::validate_run_config(bad_kw), config_error);

  auto no_wait = good;
  no_wait.receive_timeout_ms = 0;
  CHECK_THROWS_AS(protocol::validate_run_config(no_wait), config_error);

  auto bad_ts = good;
  bad_ts.th.ts = 0.0;
  CHECK_THROWS_AS(protocol::validate_run_config(bad_ts), invalid_input);
}

TEST_CASE("setups whose folds exceed the safe budget are refused",
          "[protocol]") {
  auto cfg = testutil::clinic6_config(protocol_kind::a, 1);
  cfg.ehe_params = ehe::params{.lambda = 1,
                               .p_bits = 8,
                               .q_bits = 4,
                               .ra_bits = 3,
                               .max_additions = 1,
                               .max_degree = 4,
                               .toy_override = true};
  REQUIRE(ehe::mask_budget(cfg.ehe_params) < 1);
  try {
    protocol::validate_run_config(cfg);
    FAIL("expected refusal");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("safe addition budget") !=
          std::string::npos);
  }

  // the same parameters never reach EHE validation under protocol B
  cfg.protocol = protocol_kind::b;
  CHECK_NOTHROW(protocol::validate_run_config(cfg));
}

TEST_CASE("master selection is deterministic and uniform", "[protocol]") {
  auto cfg = testutil::clinic6_config(protocol_kind::a, 1, 42);
  cfg.t = 5;
  CHECK(protocol::select_master_dp(cfg) == protocol::select_master_dp(cfg));

  // 4 * 10^4 seeds over t=4: expect 10^4 per possessor, +-5% (5.8 sigma)
  std::vector<int> counts(4, 0);
  for (std::uint64_t seed = 0; seed < 40000; ++seed)
    ++counts[protocol::select_master_dp(4, derive_seed(seed, "master-dp"))];
  for (int count : counts) {
    CHECK(count >= 9500);
    CHECK(count <= 10500);
  }
}

TEST_CASE("key distribution reaches every party with the right material",
          "[protocol]") {
  auto cfg = testutil::clinic6_config(protocol_kind::a, 3);
  auto kp = protocol::run_key_pair(cfg);
  auto placements = protocol::distribute_keys(cfg, kp);
  REQUIRE(placements.size() == static_cast<std::size_t>(cfg.t + cfg.c + 1));

  // cloud parties get their keys before any possessor (see distribute_keys)
  for (int j = 0; j < cfg.c; ++j) {
    const auto& pl = placements[static_cast<std::size_t>(j)];
    CHECK(pl.to == protocol::cbm_id(j));
    CHECK(pl.payload.contains("a"));
  }
  const auto& fold = placements[static_cast<std::size_t>(cfg.c)];
  CHECK(fold.to == protocol::ccbr_id());
  CHECK(fold.payload.contains("p"));
  CHECK_FALSE(fold.payload.contains("a"));
  CHECK_FALSE(fold.payload.contains("q"));
  CHECK(ehe::from_decimal(fold.payload["p"].get<std::string>()) == kp.pk.p);
  for (int i = 0; i < cfg.t; ++i) {
    const auto& pl = placements[static_cast<std::size_t>(cfg.c + 1 + i)];
    CHECK(pl.to == protocol::dp_id(i));
    CHECK(pl.payload.contains("a"));
    CHECK(pl.payload.contains("q"));
    CHECK(pl.payload.contains("p"));
  }

  // key material is a pure function of the run seed
  auto again = protocol::run_key_pair(cfg);
  CHECK(again.pk.p == kp.pk.p);
  CHECK(again.sk.a == kp.sk.a);
  CHECK(again.sk.q == kp.sk.q);
}

TEST_CASE("protocol A reproduces the single-machine result", "[protocol]") {
  auto oracle = mining::single_machine_apriori(
      testutil::clinic6(), testutil::clinic6_thresholds(), 8);
  REQUIRE(oracle == testutil::clinic6_expected());

  for (int c : {1, 2}) {
    auto cfg = testutil::clinic6_config(protocol_kind::a, c);
    auto out = protocol::run(cfg, testutil::clinic6_split2());
    INFO("protocol A, c=" << c);
    CHECK(out.result == oracle);
    CHECK(out.stats.messages == out.audit.size());
    CHECK(out.manifests.size() == 2);
    CHECK(out.stats.ehe_encrypts > 0);
    if (c > 1)
      CHECK(out.stats.ehe_adds > 0);  // folding needs at least two inputs
    CHECK(out.stats.ehe_decrypts > 0);
    CHECK(out.stats.ehe_ops() ==
          out.stats.ehe_encrypts + out.stats.ehe_adds);
    CHECK(out.stats.master_index == protocol::select_master_dp(cfg));
    CHECK(out.stats.levels == 3);
    CHECK(out.stats.dp_preprocess_ms.size() == 2);
    CHECK(out.stats.cbm_vocab_ms.size() == static_cast<std::size_t>(c));
    CHECK(out.stats.ccbr_level_ms.size() == 3);
  }
}

TEST_CASE("protocol B reproduces the single-machine result with zero crypto",
          "[protocol]") {
  auto oracle = testutil::clinic6_expected();
  for (int c : {1, 2}) {
    auto cfg = testutil::clinic6_config(protocol_kind::b, c);
    auto out = protocol::run(cfg, testutil::clinic6_split2());
    INFO("protocol B, c=" << c);
    CHECK(out.result == oracle);
    CHECK(out.stats.ehe_ops() == 0);
    CHECK(out.stats.ehe_decrypts == 0);
    CHECK(out.stats.ccbr_level_ms.empty());
  }
}

TEST_CASE("protocols A and B agree run for run", "[protocol]") {
  auto cfg_a = testutil::clinic6_config(protocol_kind::a, 2, 11);
  auto cfg_b = testutil::clinic6_config(protocol_kind::b, 2, 11);
  auto out_a = protocol::run(cfg_a, testutil::clinic6_split2());
  auto out_b = protocol::run(cfg_b, testutil::clinic6_split2());
  CHECK(out_a.result == out_b.result);
}

TEST_CASE("the exact message count for the fixture run is pinned",
          "[protocol]") {
  // A, t=2, c=2, three frequent levels:
  //   keys (t+c+1) + assigns (t*c) + vocab (c) + 3 levels * (2c + t)
  //   + final empty broadcast (c) + consolidator release (1) + results (t)
  auto cfg = testutil::clinic6_config(protocol_kind::a, 2);
  auto out = protocol::run(cfg, testutil::clinic6_split2());
  CHECK(out.audit.size() == 34);

  // B, t=2, c=2: assigns + vocab + 3 levels * 2c + empty broadcast + results
  auto cfg_b = testutil::clinic6_config(protocol_kind::b, 2);
  auto out_b = protocol::run(cfg_b, testutil::clinic6_split2());
  CHECK(out_b.audit.size() == 22);
}

TEST_CASE("toy-scale homomorphic parameters drive a full run", "[protocol]") {
  auto cfg = testutil::clinic6_config(protocol_kind::a, 2);
  cfg.ehe_params = ehe::toy_key().prm;
  REQUIRE(ehe::mask_budget(cfg.ehe_params) >= cfg.c);
  auto out = protocol::run(cfg, testutil::clinic6_split2());
  CHECK(out.result == testutil::clinic6_expected());
}

TEST_CASE("wrapper entry points enforce their protocol", "[protocol]") {
  auto cfg_a = testutil::clinic6_config(protocol_kind::a, 1);
  auto cfg_b = testutil::clinic6_config(protocol_kind::b, 1);
  CHECK_THROWS_AS(protocol::run_protocol_a(cfg_b, testutil::clinic6_split2()),
                  config_error);
  CHECK_THROWS_AS(protocol::run_protocol_b(cfg_a, testutil::clinic6_split2()),
                  config_error);
  CHECK(protocol::run_protocol_a(cfg_a, testutil::clinic6_split2()).result ==
        testutil::clinic6_expected());
  CHECK(protocol::run_protocol_b(cfg_b, testutil::clinic6_split2()).result ==
        testutil::clinic6_expected());

  CHECK_THROWS_AS(protocol::run(cfg_a, {testutil::clinic6()}), config_error);
}

TEST_CASE("one-block naive mining equals exact mining", "[protocol]") {
  for (auto proto : {protocol_kind::a, protocol_kind::b}) {
    auto cfg = testutil::clinic6_config(proto, 1);
    cfg.mode = protocol::mining_mode::naive_union;
    auto naive = protocol::run(cfg, testutil::clinic6_split2());
    CHECK(naive.result == testutil::clinic6_expected());
  }
}

TEST_CASE("naive union mining only ever undercounts", "[protocol]") {
  auto gen = make_engine(31337);
  bool saw_omission = false;
  for (int trial = 0; trial < 8; ++trial) {
    dataset records(20 + bounded_uniform(gen, 20));
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].pid = "q" + std::to_string(i);
      for (char ch : std::string("abcde"))
        if (bounded_uniform(gen, 3) < 1) records[i].items.push_back({ch});
    }

    auto cfg = testutil::clinic6_config(protocol_kind::b, 3,
                                        1000 + trial);
    cfg.th = {0.3, 0.8};
    auto split = synth::split_round_robin(records, cfg.t);

    auto exact_out = protocol::run(cfg, split);
    auto naive_cfg = cfg;
    naive_cfg.mode = protocol::mining_mode::naive_union;
    auto naive_out = protocol::run(naive_cfg, split);

    CHECK(naive_out.result.frequent.total_transactions ==
          exact_out.result.frequent.total_transactions);
    for (const auto& [key, count] : naive_out.result.frequent.counts) {
      auto it = exact_out.result.frequent.counts.find(key);
      REQUIRE(it != exact_out.result.frequent.counts.end());
      CHECK(count <= it->second);
    }
    if (naive_out.result.frequent.counts.size() <
        exact_out.result.frequent.counts.size())
      saw_omission = true;
  }
  CHECK(saw_omission);  // at least one trial shows the blind spot
}

TEST_CASE("honest runs pass the privacy audit", "[protocol]") {
  auto per_dp = testutil::clinic6_split2();
  for (auto proto : {protocol_kind::a, protocol_kind::b}) {
    for (int c : {1, 2}) {
      auto cfg = testutil::clinic6_config(proto, c);
      auto out = protocol::run(cfg, per_dp);
      auto violations = protocol::audit_privacy(out.audit, cfg, per_dp);
      INFO("protocol " << protocol::to_string(proto) << ", c=" << c);
      CHECK(violations.empty());
    }
  }
}

TEST_CASE("the audit flags each leak class exactly once", "[protocol]") {
  auto cfg = testutil::clinic6_config(protocol_kind::a, 2);
  auto per_dp = testutil::clinic6_split2();

  auto make_msg = [](net::party_id from, net::party_id to,
                     net::message_kind kind, nlohmann::ordered_json payload) {
    net::protocol_message msg;
    msg.from = from;
    msg.to = to;
    msg.kind = kind;
    msg.round = 1;
    msg.payload = std::move(payload);
    return msg;
  };

  SECTION("P1: plaintext item sent to a miner") {
    std::vector<net::protocol_message> log = {make_msg(
        protocol::dp_id(0), protocol::cbm_id(1),
        net::message_kind::block_assign,
        {{"records", {{{"pid_hash", "beef"}, {"items", {"cold"}}}}}})};
    auto v = protocol::audit_privacy(log, cfg, per_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P1");
    CHECK(v[0].message_index == 0);
  }

  SECTION("P1: plaintext item embedded inside a longer string") {
    std::vector<net::protocol_message> log = {
        make_msg(protocol::dp_id(0), protocol::ccbr_id(),
                 net::message_kind::encrypted_counts,
                 {{"note", "prefix-fever-suffix"}})};
    auto v = protocol::audit_privacy(log, cfg, per_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P1");
  }

  SECTION("P2: raw identifier sent to a miner") {
    std::vector<net::protocol_message> log = {
        make_msg(protocol::dp_id(0), protocol::cbm_id(0),
                 net::message_kind::block_assign, {{"pid", "P3"}})};
    auto v = protocol::audit_privacy(log, cfg, per_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P2");
  }

  SECTION("P3: plain count visible to the consolidator") {
    std::vector<net::protocol_message> log = {
        make_msg(protocol::cbm_id(0), protocol::ccbr_id(),
                 net::message_kind::encrypted_counts, {{"count", 5}})};
    auto v = protocol::audit_privacy(log, cfg, per_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P3");
    CHECK(v[0].detail.find("count") != std::string::npos);
  }

  SECTION("P3: ciphertext degree fields are not plain counts") {
    std::vector<net::protocol_message> log = {make_msg(
        protocol::cbm_id(0), protocol::ccbr_id(),
        net::message_kind::encrypted_counts,
        {{"entries", {{{"v", "12345"}, {"e", 2}}}}})};
    CHECK(protocol::audit_privacy(log, cfg, per_dp).empty());
  }

  SECTION("P3: secret key fields sent to the consolidator") {
    std::vector<net::protocol_message> log = {
        make_msg(protocol::dp_id(0), protocol::ccbr_id(),
                 net::message_kind::key_distribution, {{"a", "77"}})};
    auto v = protocol::audit_privacy(log, cfg, per_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P3");

    auto kp = protocol::run_key_pair(cfg);
    std::vector<net::protocol_message> leak = {make_msg(
        protocol::dp_id(0), protocol::ccbr_id(),
        net::message_kind::encrypted_counts,
        {{"note", "x" + ehe::to_decimal(kp.sk.a) + "y"}})};
    auto v2 = protocol::audit_privacy(leak, cfg, per_dp);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].predicate == "P3");
  }

  SECTION("P4: identifier crossing between possessors") {
    std::vector<net::protocol_message> log = {
        make_msg(protocol::dp_id(1), protocol::dp_id(0),
                 net::message_kind::global_result, {{"pid", "P5"}})};
    auto v = protocol::audit_privacy(log, cfg, per_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P4");

    // a possessor's own identifier coming back is not a violation
    std::vector<net::protocol_message> own = {
        make_msg(protocol::dp_id(1), protocol::dp_id(0),
                 net::message_kind::global_result, {{"pid", "P1"}})};
    CHECK(protocol::audit_privacy(own, cfg, per_dp).empty());
  }

  SECTION("hash digests do not trip the embedded-word scan") {
    // Craft a vocabulary whose words are hex-only, so they can occur
    // inside SHA-256 digests by coincidence.
    std::vector<dataset> hex_dp = {{{"x1", {"ace", "bed"}}},
                                   {{"x2", {"ace"}}}};
    std::string digest = "ace";
    digest.append(61, '0');
    REQUIRE(digest.size() == 64);

    std::vector<net::protocol_message> log = {make_msg(
        protocol::dp_id(0), protocol::cbm_id(0),
        net::message_kind::block_assign, {{"pid_hash", digest}})};
    CHECK(protocol::audit_privacy(log, cfg, hex_dp).empty());

    // the very same substring outside a digest-shaped value is flagged
    std::vector<net::protocol_message> leak = {make_msg(
        protocol::dp_id(0), protocol::cbm_id(0),
        net::message_kind::block_assign, {{"pid_hash", digest + "0"}})};
    auto v = protocol::audit_privacy(leak, cfg, hex_dp);
    REQUIRE(v.size() == 1);
    CHECK(v[0].predicate == "P1");

    // real digests in honest block assignments stay clean too
    std::vector<net::protocol_message> honest = {make_msg(
        protocol::dp_id(0), protocol::cbm_id(0),
        net::message_kind::block_assign,
        {{"pid_hash", dsa::hash_pid("x1")}})};
    CHECK(protocol::audit_privacy(honest, cfg, hex_dp).empty());
  }
}

TEST_CASE("every possessor receives the identical published result",
          "[protocol]") {
  // run() itself throws if any possessor's result differs; a normal return
  // therefore certifies agreement.  Check determinism across repeat runs.
  auto cfg = testutil::clinic6_config(protocol_kind::a, 2);
  auto once = protocol::run(cfg, testutil::clinic6_split2());
  auto twice = protocol::run(cfg, testutil::clinic6_split2());
  CHECK(once.result == twice.result);
  CHECK(once.audit.size() == twice.audit.size());
  CHECK(once.stats.master_index == twice.stats.master_index);
}
