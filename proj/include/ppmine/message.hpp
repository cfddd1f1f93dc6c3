#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ppmine/errors.hpp"

namespace ppmine::net {

enum class role { dp, cbm, ccbr };

inline std::string to_string(role r) {
  switch (r) {
    case role::dp: return "DP";
    case role::cbm: return "CBM";
    case role::ccbr: return "CCBR";
  }
  throw invalid_input("bad role enum");
}

inline role role_from_string(std::string_view text) {
  if (text == "DP") return role::dp;
  if (text == "CBM") return role::cbm;
  if (text == "CCBR") return role::ccbr;
  throw codec_error("unknown role '" + std::string(text) + "'");
}

struct party_id {
  role r = role::dp;
  int index = 0;

  auto operator<=>(const party_id&) const = default;
};

inline std::string to_string(const party_id& p) {
  return to_string(p.r) + ":" + std::to_string(p.index);
}

enum class message_kind {
  key_distribution,
  block_assign,
  candidate_broadcast,
  encrypted_counts,
  plain_counts,
  encrypted_global,
  global_result,
};

inline std::string to_string(message_kind k) {
  switch (k) {
    case message_kind::key_distribution: return "KeyDistribution";
    case message_kind::block_assign: return "BlockAssign";
    case message_kind::candidate_broadcast: return "CandidateBroadcast";
    case message_kind::encrypted_counts: return "EncryptedCounts";
    case message_kind::plain_counts: return "PlainCounts";
    case message_kind::encrypted_global: return "EncryptedGlobal";
    case message_kind::global_result: return "GlobalResult";
  }
  throw invalid_input("bad message kind enum");
}

inline message_kind kind_from_string(std::string_view text) {
  if (text == "KeyDistribution") return message_kind::key_distribution;
  if (text == "BlockAssign") return message_kind::block_assign;
  if (text == "CandidateBroadcast") return message_kind::candidate_broadcast;
  if (text == "EncryptedCounts") return message_kind::encrypted_counts;
  if (text == "PlainCounts") return message_kind::plain_counts;
  if (text == "EncryptedGlobal") return message_kind::encrypted_global;
  if (text == "GlobalResult") return message_kind::global_result;
  throw codec_error("unknown message kind '" + std::string(text) + "'");
}

struct protocol_message {
  party_id from;
  party_id to;
  message_kind kind = message_kind::key_distribution;
  int round = 0;
  nlohmann::ordered_json payload;

  bool operator==(const protocol_message&) const = default;
};

// One message per line: {"from":{...},"to":{...},"kind":...,"round":...,
// "payload":{...}}\n.  nlohmann escapes control characters, so the dumped
// body never contains a raw newline.
inline std::string encode_frame(const protocol_message& msg) {
  nlohmann::ordered_json doc;
  doc["from"] = {{"role", to_string(msg.from.r)}, {"index", msg.from.index}};
  doc["to"] = {{"role", to_string(msg.to.r)}, {"index", msg.to.index}};
  doc["kind"] = to_string(msg.kind);
  doc["round"] = msg.round;
  doc["payload"] = msg.payload;
  return doc.dump() + "\n";
}

namespace detail {

inline party_id party_from_json(const nlohmann::json& doc,
                                std::string_view field) {
  if (!doc.is_object())
    throw codec_error("field '" + std::string(field) + "' must be an object");
  if (!doc.contains("role") || !doc["role"].is_string())
    throw codec_error("field '" + std::string(field) + ".role' missing or not a string");
  if (!doc.contains("index") || !doc["index"].is_number_integer())
    throw codec_error("field '" + std::string(field) + ".index' missing or not an integer");
  return party_id{role_from_string(doc["role"].get<std::string>()),
                  doc["index"].get<int>()};
}

}  // namespace detail

inline protocol_message decode_frame(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.remove_suffix(1);
  nlohmann::ordered_json doc =
      nlohmann::ordered_json::parse(line, nullptr, false);
  if (doc.is_discarded()) throw codec_error("frame is not valid JSON");
  if (!doc.is_object()) throw codec_error("frame must be a JSON object");
  protocol_message msg;
  if (!doc.contains("from")) throw codec_error("field 'from' missing");
  msg.from = detail::party_from_json(doc["from"], "from");
  if (!doc.contains("to")) throw codec_error("field 'to' missing");
  msg.to = detail::party_from_json(doc["to"], "to");
  if (!doc.contains("kind") || !doc["kind"].is_string())
    throw codec_error("field 'kind' missing or not a string");
  msg.kind = kind_from_string(doc["kind"].get<std::string>());
  if (!doc.contains("round") || !doc["round"].is_number_integer())
    throw codec_error("field 'round' missing or not an integer");
  msg.round = doc["round"].get<int>();
  if (!doc.contains("payload"))
    throw codec_error("field 'payload' missing");
  msg.payload = doc["payload"];
  return msg;
}

}  // namespace ppmine::net
