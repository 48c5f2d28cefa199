// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "elastic/elastic.h"

namespace elastic_cli {

/// Parsed command line. Owns the strings the C config points into.
class RunConfig {
 public:
  RunConfig();
  RunConfig(const RunConfig& other);
  RunConfig& operator=(const RunConfig& other);

  /// Config with its borrowed pointers aimed at this object's storage.
  const elastic_run_config& config() const;
  elastic_run_config& raw() { return cfg_; }

  std::string class_name = "gradient";
  std::string out_dir = ".";
  std::vector<int> strides = {8, 32};
  std::vector<std::string> sweep_values;

 private:
  mutable elastic_run_config cfg_;
  mutable std::vector<const char*> value_ptrs_;
};

struct ParseResult {
  int exit_code = 0;     // meaningful when !run
  std::string message;   // help text or error
  bool run = false;
  RunConfig config;
};

enum ExitCode { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Parses argv (argv[0] is the program name) and validates every value.
ParseResult parse_config(int argc, const char* const* argv);

/// "HxW" with positive integers.
bool parse_dims(const std::string& text, int& h, int& w);

}  // namespace elastic_cli
