// SPDX-License-Identifier: Apache-2.0
#include <cstdio>

#include "cli_config.hpp"
#include "elastic/elastic.h"

int main(int argc, char** argv) {
  using namespace elastic_cli;
  const ParseResult parsed = parse_config(argc, argv);
  if (!parsed.run) {
    std::fputs(parsed.message.c_str(), parsed.exit_code == kExitOk ? stdout : stderr);
    return parsed.exit_code;
  }
  elastic_report* report = nullptr;
  const elastic_status status = elastic_run(&parsed.config.config(), &report);
  if (status != ELASTIC_OK) {
    std::fprintf(stderr, "error: %s: %s\n", elastic_status_name(status), elastic_last_error());
    return kExitRuntime;
  }
  std::fputs(elastic_report_text(report), stdout);
  elastic_report_destroy(report);
  return kExitOk;
}
