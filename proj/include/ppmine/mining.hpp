#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppmine/dataset.hpp"
#include "ppmine/ehe.hpp"
#include "ppmine/errors.hpp"

namespace ppmine::mining {

// Sorted, duplicate-free, nonempty token list.
using itemset = std::vector<std::string>;

inline std::string itemset_key(const itemset& items) {
  std::string key;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) key.push_back('|');
    key += items[i];
  }
  return key;
}

inline itemset itemset_from_key(std::string_view key) {
  itemset items;
  std::size_t start = 0;
  while (start <= key.size()) {
    std::size_t bar = key.find('|', start);
    if (bar == std::string_view::npos) bar = key.size();
    items.emplace_back(key.substr(start, bar - start));
    start = bar + 1;
  }
  return items;
}

inline bool is_canonical(const itemset& items) {
  if (items.empty()) return false;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].empty()) return false;
    if (items[i].find('|') != std::string::npos) return false;  // key separator
    if (i && items[i - 1] >= items[i]) return false;
  }
  return true;
}

inline void require_canonical(const itemset& items) {
  if (!is_canonical(items))
    throw invalid_input("itemset not canonical (sorted, distinct, nonempty): '" +
                        itemset_key(items) + "'");
}

struct support_table {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total_transactions = 0;

  bool operator==(const support_table&) const = default;
};

struct thresholds {
  double ts = 0.5;
  double tc = 0.8;

  bool operator==(const thresholds&) const = default;
};

inline void validate(const thresholds& th) {
  if (!std::isfinite(th.ts) || th.ts <= 0.0 || th.ts > 1.0)
    throw invalid_input("support threshold must be in (0, 1]");
  if (!std::isfinite(th.tc) || th.tc <= 0.0 || th.tc > 1.0)
    throw invalid_input("confidence threshold must be in (0, 1]");
}

// A threshold as the exact binary rational the double denotes, so
// "count >= ceil(th * base)" comparisons carry no float rounding at all.
class exact_threshold {
 public:
  explicit exact_threshold(double value) {
    if (!std::isfinite(value) || value <= 0.0 || value > 1.0)
      throw invalid_input("threshold must be in (0, 1]");
    int exp = 0;
    double frac = std::frexp(value, &exp);  // value = frac * 2^exp
    mantissa_ = ehe::bigint(static_cast<std::uint64_t>(std::ldexp(frac, 53)));
    shift_ = 53 - exp;  // value = mantissa / 2^shift
  }

  // count / base >= threshold, exactly.
  bool met_by(std::uint64_t count, std::uint64_t base) const {
    return (ehe::bigint(count) << shift_) >= mantissa_ * base;
  }

 private:
  ehe::bigint mantissa_;
  int shift_ = 0;
};

struct rational {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  bool operator==(const rational&) const = default;
};

struct association_rule {
  itemset antecedent;
  itemset consequent;
  rational support;     // count(A ∪ B) / total
  rational confidence;  // count(A ∪ B) / count(A)

  bool operator==(const association_rule&) const = default;
};

namespace detail {

// n choose k, saturating well above any useful candidate-list size.
inline std::uint64_t combinations(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    if (result > (std::uint64_t(1) << 40)) return std::uint64_t(1) << 40;
    result = result * (n - k + i) / i;
  }
  return result;
}

inline bool is_subset(const std::vector<std::uint32_t>& needle,
                      const std::vector<std::uint32_t>& haystack) {
  std::size_t i = 0, j = 0;
  while (i < needle.size() && j < haystack.size()) {
    if (needle[i] == haystack[j]) {
      ++i;
      ++j;
    } else if (needle[i] > haystack[j]) {
      ++j;
    } else {
      return false;
    }
  }
  return i == needle.size();
}

inline std::string id_bytes(const std::vector<std::uint32_t>& ids) {
  std::string key(ids.size() * sizeof(std::uint32_t), '\0');
  std::memcpy(key.data(), ids.data(), key.size());
  return key;
}

}  // namespace detail

// Per-candidate containment counts over one block of transactions.  Each
// transaction either enumerates its own k-subsets (narrow transactions) or
// is scanned per candidate (short candidate lists), whichever is cheaper.
inline support_table count_candidates(const dataset& records,
                                      const std::vector<itemset>& candidates) {
  support_table tbl;
  tbl.total_transactions = records.size();
  if (candidates.empty()) return tbl;

  std::unordered_map<std::string_view, std::uint32_t> token_ids;
  for (const auto& cand : candidates) {
    require_canonical(cand);
    for (const auto& tok : cand)
      token_ids.emplace(tok, static_cast<std::uint32_t>(token_ids.size()));
  }

  // Duplicate candidates share one counting slot.
  std::vector<std::size_t> alias(candidates.size());
  std::unordered_map<std::string, std::size_t> first_by_key;
  first_by_key.reserve(candidates.size() * 2);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    alias[i] = first_by_key.emplace(itemset_key(candidates[i]), i).first->second;

  // Group candidate indices by size; encode each candidate as sorted ids.
  std::vector<std::vector<std::uint32_t>> encoded(candidates.size());
  std::map<std::size_t, std::vector<std::size_t>> by_size;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (alias[i] != i) continue;
    auto& ids = encoded[i];
    ids.reserve(candidates[i].size());
    for (const auto& tok : candidates[i]) ids.push_back(token_ids.at(tok));
    std::sort(ids.begin(), ids.end());
    by_size[candidates[i].size()].push_back(i);
  }
  std::map<std::size_t, std::unordered_map<std::string, std::size_t>> luts;
  for (const auto& [k, idxs] : by_size) {
    auto& lut = luts[k];
    lut.reserve(idxs.size() * 2);
    for (std::size_t i : idxs) lut.emplace(detail::id_bytes(encoded[i]), i);
  }

  std::vector<std::uint64_t> counts(candidates.size(), 0);
  std::vector<std::uint32_t> tx_ids;
  std::vector<std::uint32_t> combo;
  for (const auto& rec : records) {
    tx_ids.clear();
    for (const auto& item : rec.items) {
      auto it = token_ids.find(item);
      if (it != token_ids.end()) tx_ids.push_back(it->second);
    }
    std::sort(tx_ids.begin(), tx_ids.end());
    tx_ids.erase(std::unique(tx_ids.begin(), tx_ids.end()), tx_ids.end());

    for (const auto& [k, idxs] : by_size) {
      if (tx_ids.size() < k) continue;
      std::uint64_t combos = detail::combinations(tx_ids.size(), k);
      if (combos <= idxs.size() * 2) {
        const auto& lut = luts.at(k);
        std::vector<std::size_t> pos(k);
        for (std::size_t i = 0; i < k; ++i) pos[i] = i;
        for (;;) {
          combo.clear();
          for (std::size_t p : pos) combo.push_back(tx_ids[p]);
          auto it = lut.find(detail::id_bytes(combo));
          if (it != lut.end()) ++counts[it->second];
          // advance the combination index vector
          std::size_t i = k;
          while (i > 0) {
            --i;
            if (pos[i] != i + tx_ids.size() - k) break;
            if (i == 0) {
              i = k;
              break;
            }
          }
          if (i == k) break;
          ++pos[i];
          for (std::size_t j = i + 1; j < k; ++j) pos[j] = pos[j - 1] + 1;
        }
      } else {
        for (std::size_t i : idxs)
          if (detail::is_subset(encoded[i], tx_ids)) ++counts[i];
      }
    }
  }

  for (std::size_t i = 0; i < candidates.size(); ++i)
    tbl.counts[itemset_key(candidates[i])] = counts[alias[i]];
  return tbl;
}

// Classic join + prune: all (k+1)-itemsets whose every k-subset is frequent.
inline std::vector<itemset> generate_candidates(
    const std::vector<itemset>& frequent_k) {
  if (frequent_k.empty()) return {};
  const std::size_t k = frequent_k.front().size();
  for (const auto& s : frequent_k) {
    require_canonical(s);
    if (s.size() != k)
      throw invalid_input("generate_candidates needs itemsets of equal size");
  }
  std::vector<itemset> sorted = frequent_k;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::set<std::string> frequent_keys;
  for (const auto& s : sorted) frequent_keys.insert(itemset_key(s));

  std::vector<itemset> out;
  itemset subset(k);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      if (!std::equal(sorted[i].begin(), sorted[i].end() - 1,
                      sorted[j].begin(), sorted[j].end() - 1))
        break;  // sorted order: once prefixes diverge, no more joins for i
      itemset cand = sorted[i];
      cand.push_back(sorted[j].back());
      bool keep = true;
      for (std::size_t drop = 0; keep && drop + 2 < cand.size(); ++drop) {
        // the two subsets dropping the last two positions are the joiners
        subset.clear();
        for (std::size_t m = 0; m < cand.size(); ++m)
          if (m != drop) subset.push_back(cand[m]);
        keep = frequent_keys.count(itemset_key(subset)) > 0;
      }
      if (keep) out.push_back(std::move(cand));
    }
  }
  return out;
}

inline support_table merge_tables(const std::vector<support_table>& tables) {
  support_table merged;
  for (const auto& tbl : tables) {
    merged.total_transactions += tbl.total_transactions;
    for (const auto& [key, count] : tbl.counts) merged.counts[key] += count;
  }
  return merged;
}

// Every rule A => B with A ∪ B frequent and confidence over threshold,
// sorted by antecedent then consequent.
inline std::vector<association_rule> derive_rules(const support_table& global,
                                                  const thresholds& th) {
  validate(th);
  if (global.total_transactions == 0)
    throw invalid_input("cannot derive rules from an empty table");
  exact_threshold ts(th.ts), tc(th.tc);

  std::vector<association_rule> rules;
  for (const auto& [key, count] : global.counts) {
    if (!ts.met_by(count, global.total_transactions)) continue;
    itemset items = itemset_from_key(key);
    const std::size_t n = items.size();
    if (n < 2) continue;
    if (n > 30)
      throw invalid_input("itemset of " + std::to_string(n) +
                          " items has too many rule splits to enumerate");
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      itemset antecedent, consequent;
      for (std::size_t i = 0; i < n; ++i)
        ((mask >> i) & 1 ? antecedent : consequent).push_back(items[i]);
      auto it = global.counts.find(itemset_key(antecedent));
      if (it == global.counts.end())
        throw invalid_input("support table lacks antecedent '" +
                            itemset_key(antecedent) +
                            "' (anti-monotonicity violated)");
      if (!tc.met_by(count, it->second)) continue;
      rules.push_back({std::move(antecedent),
                       std::move(consequent),
                       {count, global.total_transactions},
                       {count, it->second}});
    }
  }
  std::sort(rules.begin(), rules.end(),
            [](const association_rule& a, const association_rule& b) {
              if (a.antecedent != b.antecedent)
                return a.antecedent < b.antecedent;
              return a.consequent < b.consequent;
            });
  return rules;
}

namespace detail {

inline dataset normalize_items(const dataset& records) {
  dataset out = records;
  for (auto& rec : out) {
    std::sort(rec.items.begin(), rec.items.end());
    rec.items.erase(std::unique(rec.items.begin(), rec.items.end()),
                    rec.items.end());
  }
  return out;
}

}  // namespace detail

// Level-wise frequent-itemset table (frequent entries only, exact counts).
// Token-agnostic: works identically on plaintext items or cipher tokens.
inline support_table apriori_frequent(const dataset& records,
                                      const exact_threshold& ts, int max_k) {
  if (max_k < 1) throw invalid_input("max_k must be >= 1");
  dataset norm = detail::normalize_items(records);
  support_table out;
  out.total_transactions = norm.size();
  if (norm.empty()) return out;

  std::set<std::string> tokens;
  for (const auto& rec : norm)
    for (const auto& item : rec.items) tokens.insert(item);
  std::vector<itemset> candidates;
  for (const auto& tok : tokens) candidates.push_back({tok});

  for (int k = 1; k <= max_k && !candidates.empty(); ++k) {
    support_table level = count_candidates(norm, candidates);
    std::vector<itemset> frequent_k;
    for (const auto& cand : candidates) {
      std::uint64_t count = level.counts.at(itemset_key(cand));
      if (ts.met_by(count, out.total_transactions)) {
        out.counts[itemset_key(cand)] = count;
        frequent_k.push_back(cand);
      }
    }
    if (k == max_k) break;
    candidates = generate_candidates(frequent_k);
  }
  return out;
}

struct mining_result {
  support_table frequent;
  std::vector<association_rule> rules;

  bool operator==(const mining_result&) const = default;
};

// The reference the distributed protocols are measured against: plain
// level-wise Apriori over the whole dataset, then rule derivation.
inline mining_result single_machine_apriori(const dataset& records,
                                            const thresholds& th,
                                            int max_k = 8) {
  validate(th);
  mining_result result;
  result.frequent = apriori_frequent(records, exact_threshold(th.ts), max_k);
  if (result.frequent.total_transactions > 0 && !result.frequent.counts.empty())
    result.rules = derive_rules(result.frequent, th);
  return result;
}

inline nlohmann::ordered_json result_to_json(const mining_result& result) {
  nlohmann::ordered_json doc;
  auto& freq = doc["frequent"] = nlohmann::ordered_json::array();
  for (const auto& [key, count] : result.frequent.counts) {
    nlohmann::ordered_json entry;
    entry["itemset"] = itemset_from_key(key);
    entry["count"] = count;
    freq.push_back(std::move(entry));
  }
  auto& rules = doc["rules"] = nlohmann::ordered_json::array();
  for (const auto& rule : result.rules) {
    nlohmann::ordered_json entry;
    entry["antecedent"] = rule.antecedent;
    entry["consequent"] = rule.consequent;
    entry["support"] = {{"num", rule.support.num}, {"den", rule.support.den}};
    entry["confidence"] = {{"num", rule.confidence.num},
                           {"den", rule.confidence.den}};
    rules.push_back(std::move(entry));
  }
  doc["total"] = result.frequent.total_transactions;
  return doc;
}

inline mining_result result_from_json(const nlohmann::json& doc) {
  try {
    mining_result result;
    result.frequent.total_transactions = doc.at("total").get<std::uint64_t>();
    for (const auto& entry : doc.at("frequent")) {
      itemset items = entry.at("itemset").get<itemset>();
      require_canonical(items);
      result.frequent.counts[itemset_key(items)] =
          entry.at("count").get<std::uint64_t>();
    }
    for (const auto& entry : doc.at("rules")) {
      association_rule rule;
      rule.antecedent = entry.at("antecedent").get<itemset>();
      rule.consequent = entry.at("consequent").get<itemset>();
      require_canonical(rule.antecedent);
      require_canonical(rule.consequent);
      rule.support = {entry.at("support").at("num").get<std::uint64_t>(),
                      entry.at("support").at("den").get<std::uint64_t>()};
      rule.confidence = {entry.at("confidence").at("num").get<std::uint64_t>(),
                         entry.at("confidence").at("den").get<std::uint64_t>()};
      result.rules.push_back(std::move(rule));
    }
    return result;
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(std::string("bad result document: ") + e.what());
  }
}

}  // namespace ppmine::mining
