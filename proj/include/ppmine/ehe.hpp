#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "ppmine/errors.hpp"
#include "ppmine/rng.hpp"

namespace ppmine::ehe {

// Plain-value arithmetic (no expression templates): every operator returns
// a materialized integer, which keeps powm usable inside compound
// expressions across Boost versions.
using bigint =
    boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                  boost::multiprecision::et_off>;

// Bit budget for counts: q must hold any single support count (up to 72
// bits of data) plus headroom for the deepest fold the deployment will do.
inline constexpr int plaintext_bit_bound = 72;

inline int ceil_log2(std::uint64_t m) {
  int bits = 0;
  while ((std::uint64_t(1) << bits) < m) ++bits;
  return bits;
}

struct params {
  int lambda = 80;                    // target security level
  int p_bits = 192;                   // modulus size
  int q_bits = 96;                    // plaintext residue size
  int ra_bits = 40;                   // per-encryption mask size
  std::uint64_t max_additions = 1 << 16;  // deepest fold ever performed
  int max_degree = 16;                // ciphertext degree cap
  bool toy_override = false;          // permit demonstration-sized primes

  bool operator==(const params&) const = default;
};

inline void validate(const params& prm) {
  if (prm.p_bits < 3 || prm.q_bits < 2 || prm.ra_bits < 1)
    throw invalid_params("bit sizes too small");
  if (prm.max_additions < 1)
    throw invalid_params("max_additions must be >= 1");
  if (prm.max_degree < 1) throw invalid_params("max_degree must be >= 1");
  if (prm.q_bits >= prm.p_bits)
    throw invalid_params("q_bits must be below p_bits");
  if (prm.toy_override) return;
  int fold_bits = ceil_log2(prm.max_additions);
  if (prm.q_bits <= plaintext_bit_bound + fold_bits)
    throw invalid_params("q_bits must exceed the plaintext bit bound (" +
                         std::to_string(plaintext_bit_bound) +
                         ") plus fold headroom");
  if (prm.p_bits < prm.q_bits + prm.ra_bits + fold_bits + 8)
    throw invalid_params(
        "p_bits too small: need q_bits + ra_bits + fold headroom + 8 slack");
}

struct public_key {
  bigint p;
  bool operator==(const public_key&) const = default;
};

struct secret_key {
  bigint a;
  bigint q;
  bool operator==(const secret_key&) const = default;
};

struct key_pair {
  public_key pk;
  secret_key sk;
  params prm;
};

struct ciphertext {
  bigint v;
  int degree = 1;
  bool operator==(const ciphertext&) const = default;
};

namespace detail {

inline bigint random_below(std::mt19937_64& gen, const bigint& n) {
  if (n <= 0) throw invalid_params("random_below needs n > 0");
  // Enough 64-bit words to cover n with 64 spare bits; residue bias is
  // below 2^-64, which is fine for mask and base sampling.
  std::size_t words = (boost::multiprecision::msb(n) / 64) + 2;
  bigint acc = 0;
  for (std::size_t i = 0; i < words; ++i) {
    acc <<= 64;
    acc += gen();
  }
  return acc % n;
}

inline bigint random_bits(std::mt19937_64& gen, int bits) {
  bigint v = random_below(gen, bigint(1) << (bits - 1));
  v |= bigint(1) << (bits - 1);  // pin the width
  return v;
}

}  // namespace detail

// Miller-Rabin with uniformly drawn bases.
inline bool is_probable_prime(const bigint& n, std::mt19937_64& gen,
                              int rounds = 64) {
  if (n < 2) return false;
  for (int small : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n == small) return true;
    if (n % small == 0) return false;
  }
  bigint d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (int round = 0; round < rounds; ++round) {
    bigint base = 2 + detail::random_below(gen, n - 3);
    bigint x = boost::multiprecision::powm(base, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = x * x % n;
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

inline bigint random_prime(std::mt19937_64& gen, int bits) {
  if (bits < 2) throw invalid_params("prime width must be >= 2 bits");
  for (;;) {
    bigint cand = detail::random_bits(gen, bits);
    cand |= 1;
    if (is_probable_prime(cand, gen)) return cand;
  }
}

inline bigint mod_inverse(const bigint& value, const bigint& modulus) {
  bigint t = 0, new_t = 1;
  bigint r = modulus, new_r = value % modulus;
  if (new_r < 0) new_r += modulus;
  while (new_r != 0) {
    bigint quotient = r / new_r;
    bigint tmp = t - quotient * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - quotient * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (r != 1) throw invalid_params("value is not invertible mod modulus");
  if (t < 0) t += modulus;
  return t;
}

inline key_pair keygen(const params& prm, std::mt19937_64& gen) {
  validate(prm);
  key_pair kp;
  kp.prm = prm;
  kp.sk.q = random_prime(gen, prm.q_bits);
  do {
    kp.pk.p = random_prime(gen, prm.p_bits);
  } while (kp.pk.p == kp.sk.q);
  kp.sk.a = 2 + detail::random_below(gen, kp.pk.p - 2);  // uniform [2, p-1]
  return kp;
}

// Fixed demonstration key small enough to check every residue exhaustively.
inline key_pair toy_key() {
  key_pair kp;
  kp.pk.p = 10007;
  kp.sk.q = 101;
  kp.sk.a = 2;
  kp.prm = params{.lambda = 1,
                  .p_bits = 14,
                  .q_bits = 7,
                  .ra_bits = 3,
                  .max_additions = 2,
                  .max_degree = 16,
                  .toy_override = true};
  return kp;
}

inline void check_degree(const key_pair& kp, int degree) {
  if (degree < 1 || degree > kp.prm.max_degree)
    throw invalid_degree_error("degree " + std::to_string(degree) +
                               " outside [1, " +
                               std::to_string(kp.prm.max_degree) + "]");
}

// v = a^degree * (mask * q + b) mod p, with the mask supplied by the caller
// (test hooks pass explicit masks, including zero).
inline ciphertext encrypt_with_mask(const key_pair& kp, const bigint& b,
                                    int degree, const bigint& mask) {
  check_degree(kp, degree);
  if (b < 0 || b >= kp.sk.q)
    throw plaintext_range_error("plaintext outside [0, q)");
  if (mask < 0) throw invalid_params("mask must be >= 0");
  ciphertext ct;
  ct.degree = degree;
  ct.v = boost::multiprecision::powm(kp.sk.a, bigint(degree), kp.pk.p) *
         (mask * kp.sk.q + b) % kp.pk.p;
  return ct;
}

// Fresh mask of exactly ra_bits (top bit pinned) per call.
inline ciphertext encrypt(const key_pair& kp, const bigint& b, int degree,
                          std::mt19937_64& gen) {
  return encrypt_with_mask(kp, b, degree,
                           detail::random_bits(gen, kp.prm.ra_bits));
}

inline bigint decrypt(const key_pair& kp, const ciphertext& ct) {
  check_degree(kp, ct.degree);
  bigint a_inv = mod_inverse(kp.sk.a, kp.pk.p);
  bigint u = ct.v * boost::multiprecision::powm(a_inv, bigint(ct.degree), kp.pk.p) %
             kp.pk.p;
  return u % kp.sk.q;
}

// Caches the inverse of a, for parties that decrypt in bulk.
class decryptor {
 public:
  explicit decryptor(const key_pair& kp)
      : kp_(kp), a_inv_(mod_inverse(kp.sk.a, kp.pk.p)) {}

  bigint operator()(const ciphertext& ct) const {
    check_degree(kp_, ct.degree);
    bigint u = ct.v *
               boost::multiprecision::powm(a_inv_, bigint(ct.degree), kp_.pk.p) %
               kp_.pk.p;
    return u % kp_.sk.q;
  }

 private:
  key_pair kp_;
  bigint a_inv_;
};

inline ciphertext add(const public_key& pk, const ciphertext& lhs,
                      const ciphertext& rhs) {
  if (lhs.degree != rhs.degree)
    throw degree_mismatch_error("cannot add degree " +
                                std::to_string(lhs.degree) + " to degree " +
                                std::to_string(rhs.degree));
  return ciphertext{(lhs.v + rhs.v) % pk.p, lhs.degree};
}

inline ciphertext sum_all(const public_key& pk,
                          const std::vector<ciphertext>& cts) {
  if (cts.empty()) throw invalid_input("sum_all needs at least one ciphertext");
  ciphertext acc = cts.front();
  for (std::size_t i = 1; i < cts.size(); ++i) acc = add(pk, acc, cts[i]);
  return acc;
}

// Largest summand count m such that m masked residues are guaranteed to stay
// below p/2: m * 2^ra_bits * 2^q_bits + m * 2^q_bits < 2^(p_bits - 1).
inline bigint mask_budget(const params& prm) {
  bigint bound = bigint(1) << (prm.p_bits - 1);
  bigint per = (bigint(1) << (prm.ra_bits + prm.q_bits)) +
               (bigint(1) << prm.q_bits);
  return (bound - 1) / per;
}

inline std::string to_decimal(const bigint& v) { return v.str(); }

inline bigint from_decimal(const std::string& text) {
  if (text.empty()) throw invalid_input("empty integer field");
  std::size_t start = text[0] == '-' ? 1 : 0;
  if (start == text.size()) throw invalid_input("bad integer: '" + text + "'");
  for (std::size_t i = start; i < text.size(); ++i)
    if (text[i] < '0' || text[i] > '9')
      throw invalid_input("bad integer: '" + text + "'");
  return bigint(text);
}

inline nlohmann::ordered_json ciphertext_to_json(const ciphertext& ct) {
  nlohmann::ordered_json doc;
  doc["v"] = to_decimal(ct.v);
  doc["e"] = ct.degree;
  return doc;
}

inline ciphertext ciphertext_from_json(const nlohmann::json& doc) {
  try {
    return ciphertext{from_decimal(doc.at("v").get<std::string>()),
                      doc.at("e").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw codec_error(std::string("bad ciphertext: ") + e.what());
  }
}

inline nlohmann::ordered_json public_key_to_json(const public_key& pk) {
  nlohmann::ordered_json doc;
  doc["p"] = to_decimal(pk.p);
  return doc;
}

inline public_key public_key_from_json(const nlohmann::json& doc) {
  try {
    return public_key{from_decimal(doc.at("p").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw codec_error(std::string("bad public key: ") + e.what());
  }
}

inline nlohmann::ordered_json secret_key_to_json(const secret_key& sk) {
  nlohmann::ordered_json doc;
  doc["a"] = to_decimal(sk.a);
  doc["q"] = to_decimal(sk.q);
  return doc;
}

inline secret_key secret_key_from_json(const nlohmann::json& doc) {
  try {
    return secret_key{from_decimal(doc.at("a").get<std::string>()),
                      from_decimal(doc.at("q").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw codec_error(std::string("bad secret key: ") + e.what());
  }
}

}  // namespace ppmine::ehe
