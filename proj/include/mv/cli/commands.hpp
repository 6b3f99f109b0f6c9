#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mv::cli {

/// Exit code 0: no errors; 1: check or verification failure; 2: usage or IO error.
struct CommandOutcome {
  int exit_code = 0;
  std::string out;
  nlohmann::json report;
};

CommandOutcome cmd_check(const std::string& path);

struct RunOptions {
  std::string entry = "main";
  std::vector<std::string> args;
  std::uint64_t budget = 100000;
  bool trace = false;
};
CommandOutcome cmd_run(const std::string& path, const RunOptions& opts = {});

CommandOutcome cmd_vc(const std::string& path, const std::string& out_dir, int fuel = 1);

struct VerifyOptions {
  int width = 8;
  int fuel = 1;
  std::string function;  // empty: every function
  long long leaf_budget = 50'000'000;
  std::string solver;    // empty: oracle only
  int timeout = 30;
};
CommandOutcome cmd_verify(const std::string& path, const VerifyOptions& opts = {});

/// Writes to `out` when given, otherwise returns the erased program as output.
CommandOutcome cmd_erase(const std::string& path, const std::string& out = "");

struct MetaOptions {
  std::size_t size = 6;
  std::uint64_t budget = 100000;
  bool rich = false;
};
CommandOutcome cmd_meta(const MetaOptions& opts = {});

}  // namespace mv::cli
