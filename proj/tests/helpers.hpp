#pragma once
// Shared fixtures and process helpers for the test binaries.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppmine/ppmine.hpp"

namespace testutil {

// Six-transaction clinical fixture used throughout the suite, already in
// canonical form (lowercase, sorted, deduplicated).
inline ppmine::dataset clinic6() {
  return {
      {"P1", {"bodypain", "cold", "cough"}},
      {"P2", {"cold", "cough", "fever"}},
      {"P3", {"cold", "fever", "throatpain"}},
      {"P4", {"cold", "cough"}},
      {"P5", {"bodypain", "cold", "cough", "fever"}},
      {"P6", {"bodypain", "cold", "cough", "fever", "throatpain"}},
  };
}

// The same six transactions as a user would type them: mixed order,
// spaces inside item names.  Canonicalization maps this onto clinic6().
inline ppmine::dataset clinic6_raw() {
  return {
      {"P1", {"cold", "cough", "body pain"}},
      {"P2", {"cold", "fever", "cough"}},
      {"P3", {"throat pain", "cold", "fever"}},
      {"P4", {"cold", "cough"}},
      {"P5", {"cold", "fever", "cough", "body pain"}},
      {"P6", {"cold", "fever", "cough", "body pain", "throat pain"}},
  };
}

inline ppmine::mining::thresholds clinic6_thresholds() { return {0.5, 0.8}; }

// Hand-checked mining result for clinic6 at ts=0.5, tc=0.8: eleven frequent
// itemsets and nine rules, in the library's canonical sort order.
inline ppmine::mining::mining_result clinic6_expected() {
  using ppmine::mining::association_rule;
  ppmine::mining::mining_result expected;
  expected.frequent.total_transactions = 6;
  expected.frequent.counts = {
      {"bodypain", 3},
      {"bodypain|cold", 3},
      {"bodypain|cold|cough", 3},
      {"bodypain|cough", 3},
      {"cold", 6},
      {"cold|cough", 5},
      {"cold|cough|fever", 3},
      {"cold|fever", 4},
      {"cough", 5},
      {"cough|fever", 3},
      {"fever", 4},
  };
  expected.rules = {
      {{"bodypain"}, {"cold"}, {3, 6}, {3, 3}},
      {{"bodypain"}, {"cold", "cough"}, {3, 6}, {3, 3}},
      {{"bodypain"}, {"cough"}, {3, 6}, {3, 3}},
      {{"bodypain", "cold"}, {"cough"}, {3, 6}, {3, 3}},
      {{"bodypain", "cough"}, {"cold"}, {3, 6}, {3, 3}},
      {{"cold"}, {"cough"}, {5, 6}, {5, 6}},
      {{"cough"}, {"cold"}, {5, 6}, {5, 5}},
      {{"cough", "fever"}, {"cold"}, {3, 6}, {3, 3}},
      {{"fever"}, {"cold"}, {4, 6}, {4, 4}},
  };
  return expected;
}

// Path of the command-line binary, which is built into the same directory
// as the test executables.  PPMINE_BIN overrides the lookup.
inline std::string locate_cli() {
  if (const char* env = std::getenv("PPMINE_BIN"); env && *env) return env;
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (ec) return "ppmine";
  return (self.parent_path() / "ppmine").string();
}

struct command_result {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

// Run a shell command, capturing combined output and the exit code.
inline command_result run_command(const std::string& cmd) {
  command_result res;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0)
    res.output.append(buf, n);
  int status = ::pclose(pipe);
  if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
  return res;
}

// Self-cleaning scratch directory.
class temp_dir {
 public:
  explicit temp_dir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto cand = base / ("ppmine-" + tag + "-" + std::to_string(::getpid()) +
                          "-" + std::to_string(counter_++));
      std::error_code ec;
      if (std::filesystem::create_directory(cand, ec)) {
        path_ = cand;
        return;
      }
    }
    throw std::runtime_error("cannot create scratch directory");
  }
  temp_dir(const temp_dir&) = delete;
  temp_dir& operator=(const temp_dir&) = delete;
  ~temp_dir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Baseline loopback configuration for the clinic6 fixture.
inline ppmine::protocol::run_config clinic6_config(
    ppmine::protocol::protocol_kind proto, int c, std::uint64_t seed = 7) {
  ppmine::protocol::run_config cfg;
  cfg.t = 2;
  cfg.c = c;
  cfg.th = clinic6_thresholds();
  cfg.max_k = 8;
  cfg.protocol = proto;
  cfg.seed = seed;
  cfg.run_id = "clinic6";
  return cfg;
}

// Split the fixture between two possessors: P1-P3 and P4-P6.
inline std::vector<ppmine::dataset> clinic6_split2() {
  auto all = clinic6();
  return {{all[0], all[1], all[2]}, {all[3], all[4], all[5]}};
}

}  // namespace testutil
