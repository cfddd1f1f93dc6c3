#pragma once

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ppmine/mining.hpp"

namespace ppmine::verify {

// Set-equality diff between two mining results: frequent itemsets with
// counts, rules with exact rational support and confidence.  Empty `lines`
// means the results agree.
struct diff_report {
  bool equal = true;
  std::vector<std::string> lines;

  void add(std::string line) {
    equal = false;
    lines.push_back(std::move(line));
  }
};

namespace detail {

inline bool same_value(const mining::rational& x, const mining::rational& y) {
  using boost::multiprecision::cpp_int;
  return cpp_int(x.num) * y.den == cpp_int(y.num) * x.den;
}

inline std::string show(const mining::rational& r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

inline std::string show_items(const mining::itemset& items) {
  std::string out = "{";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out + "}";
}

inline std::string rule_key(const mining::association_rule& r) {
  return mining::itemset_key(r.antecedent) + "=>" +
         mining::itemset_key(r.consequent);
}

}  // namespace detail

inline diff_report diff_results(const mining::mining_result& lhs,
                                const mining::mining_result& rhs,
                                const std::string& lhs_name = "left",
                                const std::string& rhs_name = "right") {
  diff_report report;

  if (lhs.frequent.total_transactions != rhs.frequent.total_transactions)
    report.add("transaction totals differ: " + lhs_name + " has " +
               std::to_string(lhs.frequent.total_transactions) + ", " +
               rhs_name + " has " +
               std::to_string(rhs.frequent.total_transactions));

  for (const auto& [key, count] : lhs.frequent.counts) {
    auto it = rhs.frequent.counts.find(key);
    if (it == rhs.frequent.counts.end())
      report.add("frequent itemset " +
                 detail::show_items(mining::itemset_from_key(key)) +
                 " (count " + std::to_string(count) + ") missing from " +
                 rhs_name);
    else if (it->second != count)
      report.add("count mismatch for " +
                 detail::show_items(mining::itemset_from_key(key)) + ": " +
                 lhs_name + " " + std::to_string(count) + ", " + rhs_name +
                 " " + std::to_string(it->second));
  }
  for (const auto& [key, count] : rhs.frequent.counts)
    if (!lhs.frequent.counts.count(key))
      report.add("frequent itemset " +
                 detail::show_items(mining::itemset_from_key(key)) +
                 " (count " + std::to_string(count) + ") missing from " +
                 lhs_name);

  std::map<std::string, const mining::association_rule*> lhs_rules, rhs_rules;
  for (const auto& rule : lhs.rules) lhs_rules[detail::rule_key(rule)] = &rule;
  for (const auto& rule : rhs.rules) rhs_rules[detail::rule_key(rule)] = &rule;
  if (lhs_rules.size() != lhs.rules.size() ||
      rhs_rules.size() != rhs.rules.size())
    report.add("duplicate rules present");
  for (const auto& [key, rule] : lhs_rules) {
    auto it = rhs_rules.find(key);
    std::string name = detail::show_items(rule->antecedent) + " => " +
                       detail::show_items(rule->consequent);
    if (it == rhs_rules.end()) {
      report.add("rule " + name + " missing from " + rhs_name);
      continue;
    }
    if (!detail::same_value(rule->support, it->second->support))
      report.add("support mismatch for " + name + ": " +
                 detail::show(rule->support) + " vs " +
                 detail::show(it->second->support));
    if (!detail::same_value(rule->confidence, it->second->confidence))
      report.add("confidence mismatch for " + name + ": " +
                 detail::show(rule->confidence) + " vs " +
                 detail::show(it->second->confidence));
  }
  for (const auto& [key, rule] : rhs_rules)
    if (!lhs_rules.count(key))
      report.add("rule " + detail::show_items(rule->antecedent) + " => " +
                 detail::show_items(rule->consequent) + " missing from " +
                 lhs_name);

  return report;
}

}  // namespace ppmine::verify
