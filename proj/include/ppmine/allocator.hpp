#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppmine/dataset.hpp"
#include "ppmine/errors.hpp"
#include "ppmine/rng.hpp"

namespace ppmine::dsa {

// SHA-256 of the identifier, as 64 lowercase hex characters.
inline std::string hash_pid(std::string_view pid) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, pid.data(), pid.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(len * 2, '\0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

struct keyed_record {
  std::uint64_t partition_key = 0;
  transaction_record record;
};

// Fresh uniform 64-bit partition key per record, in record order.
inline std::vector<keyed_record> assign_partition_keys(
    const dataset& records, std::mt19937_64& gen) {
  std::vector<keyed_record> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back({gen(), rec});
  return out;
}

// Block index for a partition key: FNV-1a over its 8 big-endian bytes,
// reduced mod the block count.
inline std::size_t block_index(std::uint64_t partition_key,
                               std::size_t n_blocks) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<unsigned char>(partition_key >> (56 - 8 * i));
  return static_cast<std::size_t>(fnv1a64(bytes, 8) % n_blocks);
}

struct block {
  std::size_t index = 0;
  dataset records;
};

inline std::vector<block> hash_partition(const std::vector<keyed_record>& keyed,
                                         std::size_t n_blocks) {
  if (n_blocks == 0) throw invalid_input("block count must be >= 1");
  std::vector<block> blocks(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) blocks[b].index = b;
  for (const auto& kr : keyed)
    blocks[block_index(kr.partition_key, n_blocks)].records.push_back(
        kr.record);
  return blocks;
}

// Bijection from block index to cloud-miner index.
struct block_assignment {
  std::vector<std::size_t> block_to_cbm;

  std::vector<std::size_t> cbm_to_block() const {
    std::vector<std::size_t> inverse(block_to_cbm.size());
    for (std::size_t b = 0; b < block_to_cbm.size(); ++b)
      inverse[block_to_cbm[b]] = b;
    return inverse;
  }

  bool operator==(const block_assignment&) const = default;
};

// Fisher-Yates pass over the block order; position p of the shuffled order
// is the block handed to cloud miner p.
inline block_assignment shamble(std::size_t n_blocks, std::mt19937_64& gen) {
  if (n_blocks == 0) throw invalid_input("block count must be >= 1");
  std::vector<std::size_t> order(n_blocks);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t d = n_blocks - 1; d >= 1; --d) {
    std::size_t j =
        static_cast<std::size_t>(bounded_uniform(gen, d + 1));
    std::swap(order[d], order[j]);
  }
  block_assignment assignment;
  assignment.block_to_cbm.resize(n_blocks);
  for (std::size_t p = 0; p < n_blocks; ++p)
    assignment.block_to_cbm[order[p]] = p;
  return assignment;
}

struct allocation {
  std::vector<block> blocks;  // indexed by block index
  block_assignment assignment;

  // Blocks reordered so entry i is what cloud miner i receives.
  std::vector<block> blocks_by_cbm() const {
    std::vector<block> out(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b)
      out[assignment.block_to_cbm[b]] = blocks[b];
    return out;
  }
};

// Full owner-side pipeline: key every record, hash-partition into one block
// per cloud miner, replace identifiers with digests, then shamble the
// block-to-miner mapping.
inline allocation allocate(const dataset& records, std::size_t n_cbm,
                           std::mt19937_64& gen) {
  if (n_cbm == 0) throw invalid_input("cloud miner count must be >= 1");
  auto keyed = assign_partition_keys(records, gen);
  allocation alloc;
  alloc.blocks = hash_partition(keyed, n_cbm);
  for (auto& blk : alloc.blocks)
    for (auto& rec : blk.records) rec.pid = hash_pid(rec.pid);
  alloc.assignment = shamble(n_cbm, gen);
  return alloc;
}

inline nlohmann::ordered_json manifest_to_json(const allocation& alloc,
                                               std::string_view run_id) {
  nlohmann::ordered_json doc;
  doc["run_id"] = std::string(run_id);
  doc["n_cbm"] = alloc.blocks.size();
  doc["assignment"] = alloc.assignment.block_to_cbm;
  auto& blocks = doc["blocks"] = nlohmann::ordered_json::array();
  for (const auto& blk : alloc.blocks) {
    nlohmann::ordered_json jb;
    jb["index"] = blk.index;
    auto& recs = jb["records"] = nlohmann::ordered_json::array();
    for (const auto& rec : blk.records) {
      nlohmann::ordered_json jr;
      jr["pid_hash"] = rec.pid;
      jr["items"] = rec.items;
      recs.push_back(std::move(jr));
    }
    blocks.push_back(std::move(jb));
  }
  return doc;
}

inline allocation manifest_from_json(const nlohmann::json& doc,
                                     std::string* run_id = nullptr) {
  try {
    if (run_id) *run_id = doc.at("run_id").get<std::string>();
    allocation alloc;
    alloc.assignment.block_to_cbm =
        doc.at("assignment").get<std::vector<std::size_t>>();
    std::size_t n_cbm = doc.at("n_cbm").get<std::size_t>();
    if (alloc.assignment.block_to_cbm.size() != n_cbm)
      throw invalid_input("manifest assignment size disagrees with n_cbm");
    for (const auto& jb : doc.at("blocks")) {
      block blk;
      blk.index = jb.at("index").get<std::size_t>();
      for (const auto& jr : jb.at("records")) {
        transaction_record rec;
        rec.pid = jr.at("pid_hash").get<std::string>();
        rec.items = jr.at("items").get<std::vector<std::string>>();
        blk.records.push_back(std::move(rec));
      }
      alloc.blocks.push_back(std::move(blk));
    }
    if (alloc.blocks.size() != n_cbm)
      throw invalid_input("manifest block count disagrees with n_cbm");
    return alloc;
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(std::string("bad block manifest: ") + e.what());
  }
}

}  // namespace ppmine::dsa
