#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ppmine/dataset.hpp"
#include "ppmine/errors.hpp"

namespace ppmine::vigenere {

inline void check_keyword(std::string_view keyword) {
  if (!is_canonical_item(keyword))
    throw invalid_input("keyword must be nonempty lowercase letters: '" +
                        std::string(keyword) + "'");
}

// Shift ciphertext: out[i] = (in[i] + key[i mod |key|]) mod 26.  The key
// position restarts at zero for every item.
inline std::string encrypt_item(std::string_view item,
                                std::string_view keyword) {
  check_keyword(keyword);
  if (!is_canonical_item(item))
    throw invalid_input("item must be nonempty lowercase letters: '" +
                        std::string(item) + "'");
  std::string out(item.size(), '\0');
  for (std::size_t i = 0; i < item.size(); ++i) {
    int plain = item[i] - 'a';
    int shift = keyword[i % keyword.size()] - 'a';
    out[i] = static_cast<char>('a' + (plain + shift) % 26);
  }
  return out;
}

inline std::string decrypt_item(std::string_view token,
                                std::string_view keyword) {
  check_keyword(keyword);
  if (!is_canonical_item(token))
    throw invalid_input("token must be nonempty lowercase letters: '" +
                        std::string(token) + "'");
  std::string out(token.size(), '\0');
  for (std::size_t i = 0; i < token.size(); ++i) {
    int cipher = token[i] - 'a';
    int shift = keyword[i % keyword.size()] - 'a';
    out[i] = static_cast<char>('a' + (cipher - shift + 26) % 26);
  }
  return out;
}

// Multi-round schedule: round r uses keywords[r]; encryption applies rounds
// in order, decryption in reverse.
class key_schedule {
 public:
  explicit key_schedule(std::vector<std::string> keywords)
      : keywords_(std::move(keywords)) {
    if (keywords_.empty())
      throw invalid_input("key schedule needs at least one keyword");
    for (const auto& kw : keywords_) check_keyword(kw);
  }

  // Self-keyed chain: keyword r+1 = encrypt(keyword r, keyword r).
  static key_schedule derived(std::string_view base, int rounds) {
    if (rounds < 1) throw invalid_input("rounds must be >= 1");
    check_keyword(base);
    std::vector<std::string> kws;
    kws.reserve(static_cast<std::size_t>(rounds));
    kws.emplace_back(base);
    for (int r = 1; r < rounds; ++r)
      kws.push_back(encrypt_item(kws.back(), kws.back()));
    return key_schedule(std::move(kws));
  }

  const std::vector<std::string>& keywords() const { return keywords_; }
  int rounds() const { return static_cast<int>(keywords_.size()); }

 private:
  std::vector<std::string> keywords_;
};

inline std::string encrypt_item(std::string_view item,
                                const key_schedule& schedule) {
  std::string cur(item);
  for (const auto& kw : schedule.keywords()) cur = encrypt_item(cur, kw);
  return cur;
}

inline std::string decrypt_item(std::string_view token,
                                const key_schedule& schedule) {
  std::string cur(token);
  const auto& kws = schedule.keywords();
  for (auto it = kws.rbegin(); it != kws.rend(); ++it)
    cur = decrypt_item(cur, *it);
  return cur;
}

// Items are re-sorted after substitution so a record's item order never
// leaks the original ordering.
inline transaction_record encrypt_record(const transaction_record& rec,
                                         const key_schedule& schedule) {
  transaction_record out;
  out.pid = rec.pid;
  out.items.reserve(rec.items.size());
  for (const auto& item : rec.items)
    out.items.push_back(encrypt_item(item, schedule));
  std::sort(out.items.begin(), out.items.end());
  return out;
}

inline transaction_record decrypt_record(const transaction_record& rec,
                                         const key_schedule& schedule) {
  transaction_record out;
  out.pid = rec.pid;
  out.items.reserve(rec.items.size());
  for (const auto& item : rec.items)
    out.items.push_back(decrypt_item(item, schedule));
  std::sort(out.items.begin(), out.items.end());
  return out;
}

inline dataset encrypt_dataset(const dataset& records,
                               const key_schedule& schedule) {
  dataset out;
  out.reserve(records.size());
  for (const auto& rec : records)
    out.push_back(encrypt_record(rec, schedule));
  return out;
}

inline dataset decrypt_dataset(const dataset& records,
                               const key_schedule& schedule) {
  dataset out;
  out.reserve(records.size());
  for (const auto& rec : records)
    out.push_back(decrypt_record(rec, schedule));
  return out;
}

}  // namespace ppmine::vigenere
