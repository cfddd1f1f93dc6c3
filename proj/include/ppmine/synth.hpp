#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppmine/dataset.hpp"
#include "ppmine/errors.hpp"
#include "ppmine/rng.hpp"

namespace ppmine::synth {

// Deterministic transaction-database generator.  Reproducible under seed;
// separate derived streams keep transaction sizes, item fills, and pattern
// planting independent of each other.

struct plant_spec {
  std::vector<std::string> items;
  double support = 0;  // fraction of transactions guaranteed to contain items
};

struct synth_config {
  std::size_t transactions = 1000;
  std::size_t vocabulary = 50;  // distinct random item names
  double mean_items = 4.0;      // average items per transaction
  std::vector<plant_spec> plants;
};

// Six-letter base-26 names: "aaaaaa", "aaaaab", ...  A vocabulary of fewer
// than 26^3 names therefore always starts with "aaa".
inline std::string item_name(std::size_t idx) {
  constexpr std::size_t limit = 26ull * 26 * 26 * 26 * 26 * 26;
  if (idx >= limit) throw invalid_input("item index out of range");
  std::string name(6, 'a');
  for (int pos = 5; pos >= 0; --pos) {
    name[static_cast<std::size_t>(pos)] =
        static_cast<char>('a' + static_cast<char>(idx % 26));
    idx /= 26;
  }
  return name;
}

inline void validate(const synth_config& cfg) {
  if (cfg.vocabulary < 1) throw config_error("vocabulary must be >= 1");
  if (cfg.vocabulary > 26ull * 26 * 26 * 26 * 26 * 26)
    throw config_error("vocabulary exceeds the name space");
  if (!(cfg.mean_items >= 1.0) ||
      cfg.mean_items > static_cast<double>(cfg.vocabulary))
    throw config_error("mean_items must be in [1, vocabulary]");
  for (const auto& plant : cfg.plants) {
    if (plant.items.empty()) throw config_error("planted pattern is empty");
    for (const auto& item : plant.items)
      if (!is_canonical_item(item) || item.empty())
        throw config_error("planted item '" + item +
                           "' is not a lowercase word");
    if (plant.support < 0.0 || plant.support > 1.0)
      throw config_error("planted support " + std::to_string(plant.support) +
                         " is outside [0, 1]");
  }
}

inline dataset generate(const synth_config& cfg, std::uint64_t seed) {
  validate(cfg);
  const std::size_t n = cfg.transactions;
  dataset records(n);

  int pid_width = 1;
  for (std::size_t v = n; v > 10; v /= 10) ++pid_width;
  for (std::size_t i = 0; i < n; ++i) {
    std::string digits = std::to_string(i);
    records[i].pid = "t" +
                     std::string(static_cast<std::size_t>(pid_width) -
                                     std::min(digits.size(),
                                              static_cast<std::size_t>(
                                                  pid_width)),
                                 '0') +
                     digits;
  }

  // Sizes uniform on [1, 2*mean-1] so the expectation is mean_items.
  auto size_gen = make_engine(derive_seed(seed, "sizes"));
  const std::uint64_t span = std::max<std::uint64_t>(
      1, 2 * static_cast<std::uint64_t>(std::llround(cfg.mean_items)) - 1);
  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i)
    sizes[i] = static_cast<std::size_t>(
        std::min<std::uint64_t>(1 + bounded_uniform(size_gen, span),
                                cfg.vocabulary));

  // Item fill: a partial Fisher-Yates pick of `size` distinct names.
  auto fill_gen = make_engine(derive_seed(seed, "fill"));
  std::vector<std::size_t> pool(cfg.vocabulary);
  for (std::size_t i = 0; i < cfg.vocabulary; ++i) pool[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    auto& items = records[i].items;
    items.reserve(sizes[i]);
    for (std::size_t pick = 0; pick < sizes[i]; ++pick) {
      std::size_t j =
          pick + static_cast<std::size_t>(bounded_uniform(
                     fill_gen,
                     static_cast<std::uint64_t>(cfg.vocabulary - pick)));
      std::swap(pool[pick], pool[j]);
      items.push_back(item_name(pool[pick]));
    }
    std::sort(items.begin(), items.end());
  }

  // Planting: union the pattern into ceil(support*n) distinct transactions.
  for (std::size_t p = 0; p < cfg.plants.size(); ++p) {
    const auto& plant = cfg.plants[p];
    std::size_t want = static_cast<std::size_t>(
        std::ceil(plant.support * static_cast<double>(n)));
    want = std::min(want, n);
    if (want == 0) continue;
    auto plant_gen =
        make_engine(derive_seed(seed, "plant-" + std::to_string(p)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t pick = 0; pick < want; ++pick) {
      std::size_t j = pick + static_cast<std::size_t>(bounded_uniform(
                                 plant_gen,
                                 static_cast<std::uint64_t>(n - pick)));
      std::swap(order[pick], order[j]);
      auto& items = records[order[pick]].items;
      items.insert(items.end(), plant.items.begin(), plant.items.end());
      std::sort(items.begin(), items.end());
      items.erase(std::unique(items.begin(), items.end()), items.end());
    }
  }
  return records;
}

// Round-robin t-way split, the harness's stand-in for "t possessors each
// holding a slice of one joint database".
inline std::vector<dataset> split_round_robin(const dataset& records, int t) {
  if (t < 1) throw config_error("split factor must be >= 1");
  std::vector<dataset> parts(static_cast<std::size_t>(t));
  for (std::size_t i = 0; i < records.size(); ++i)
    parts[i % static_cast<std::size_t>(t)].push_back(records[i]);
  return parts;
}

inline nlohmann::ordered_json synth_config_to_json(const synth_config& cfg) {
  nlohmann::ordered_json doc;
  doc["transactions"] = cfg.transactions;
  doc["vocabulary"] = cfg.vocabulary;
  doc["mean_items"] = cfg.mean_items;
  auto& plants = doc["plants"] = nlohmann::ordered_json::array();
  for (const auto& plant : cfg.plants)
    plants.push_back({{"items", plant.items}, {"support", plant.support}});
  return doc;
}

inline synth_config synth_config_from_json(const nlohmann::json& doc) {
  try {
    synth_config cfg;
    if (doc.contains("transactions"))
      cfg.transactions = doc["transactions"].get<std::size_t>();
    if (doc.contains("vocabulary"))
      cfg.vocabulary = doc["vocabulary"].get<std::size_t>();
    if (doc.contains("mean_items"))
      cfg.mean_items = doc["mean_items"].get<double>();
    if (doc.contains("plants"))
      for (const auto& entry : doc["plants"]) {
        plant_spec plant;
        plant.items = entry.at("items").get<std::vector<std::string>>();
        plant.support = entry.at("support").get<double>();
        cfg.plants.push_back(std::move(plant));
      }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad generator config: ") + e.what());
  }
}

}  // namespace ppmine::synth
