// SPDX-License-Identifier: Apache-2.0
// Links only the shared library; no C++ headers from the core.
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "elastic/elastic.h"

namespace fs = std::filesystem;

TEST_CASE("status names and last error") {
  CHECK(std::string(elastic_status_name(ELASTIC_OK)) == "ok");
  CHECK(std::string(elastic_status_name(ELASTIC_IO)) == "i/o error");
  CHECK(std::string(elastic_version()).size() > 0);
  elastic_dataset* ds = nullptr;
  CHECK(elastic_dataset_create(0, 0, 8, 8, &ds) == ELASTIC_INVALID_ARGUMENT);
  CHECK(ds == nullptr);
  CHECK(std::string(elastic_last_error()).size() > 0);
  CHECK(elastic_dataset_create(0, 1, 8, 8, &ds) == ELASTIC_OK);
  CHECK(std::string(elastic_last_error()).empty());
  elastic_dataset_destroy(ds);
  CHECK(elastic_dataset_create(0, 1, 8, 8, nullptr) == ELASTIC_INVALID_ARGUMENT);
}

TEST_CASE("config defaults and validation") {
  elastic_run_config cfg;
  elastic_run_config_init(&cfg);
  CHECK(cfg.steps == 50);
  CHECK(cfg.guidance == 7.0);
  CHECK(cfg.resample_fraction == 0.2);
  CHECK(cfg.rrg_delta == 200.0);
  CHECK(cfg.rrg_cutoff == 0.6);
  CHECK(cfg.resample_iters < 0);
  CHECK(cfg.target_h == 128);
  CHECK(elastic_run_config_validate(&cfg) == ELASTIC_OK);
  cfg.resample_fraction = 1.5;
  CHECK(elastic_run_config_validate(&cfg) == ELASTIC_INVALID_ARGUMENT);
  cfg.resample_fraction = 0.2;
  cfg.class_name = "cat";
  CHECK(elastic_run_config_validate(&cfg) == ELASTIC_INVALID_ARGUMENT);
  cfg.class_name = nullptr;
  CHECK(elastic_run_config_validate(&cfg) == ELASTIC_INVALID_ARGUMENT);
  CHECK(elastic_run_config_validate(nullptr) == ELASTIC_INVALID_ARGUMENT);
  cfg.class_name = "disk";
  cfg.strategy = static_cast<elastic_strategy>(17);
  CHECK(elastic_run_config_validate(&cfg) == ELASTIC_INVALID_ARGUMENT);
}

TEST_CASE("command text buffer") {
  elastic_run_config cfg;
  elastic_run_config_init(&cfg);
  size_t needed = 0;
  CHECK(elastic_run_config_command(&cfg, nullptr, 0, &needed) == ELASTIC_OK);
  REQUIRE(needed > 20);
  std::vector<char> buf(needed);
  CHECK(elastic_run_config_command(&cfg, buf.data(), buf.size(), nullptr) == ELASTIC_OK);
  CHECK(std::strlen(buf.data()) == needed - 1);
  CHECK(std::string(buf.data()).rfind("elastic generate", 0) == 0);
  char tiny[8];
  CHECK(elastic_run_config_command(&cfg, tiny, sizeof tiny, nullptr) == ELASTIC_OK);
  CHECK(std::string(tiny) == "elastic");
}

TEST_CASE("dataset, schedule and grid handles") {
  elastic_dataset* ds = nullptr;
  REQUIRE(elastic_dataset_create(1, 2, 8, 8, &ds) == ELASTIC_OK);
  CHECK(elastic_dataset_class_count(ds) == 4);
  CHECK(elastic_dataset_size(ds) == 8);
  CHECK(std::string(elastic_dataset_class_name(ds, 3)) == "checker");
  CHECK(elastic_dataset_class_name(ds, 4) == nullptr);
  CHECK(elastic_dataset_find_class(ds, "stripes") == 1);
  CHECK(elastic_dataset_find_class(ds, "cat") == -1);

  elastic_schedule* sched = nullptr;
  REQUIRE(elastic_schedule_create(1000, 1e-4, 2e-2, 50, &sched) == ELASTIC_OK);
  CHECK(elastic_schedule_step_count(sched) == 50);
  CHECK(elastic_schedule_step(sched, 0) == 1000);
  CHECK(elastic_schedule_step(sched, 50) == -1);
  double ab = 0.0;
  CHECK(elastic_schedule_alpha_bar(sched, 1, &ab) == ELASTIC_OK);
  CHECK(ab == doctest::Approx(0.9999));
  CHECK(elastic_schedule_alpha_bar(sched, 1001, &ab) == ELASTIC_OUT_OF_RANGE);

  elastic_grid* ex = nullptr;
  REQUIRE(elastic_dataset_exemplar(ds, 2, &ex) == ELASTIC_OK);
  CHECK(elastic_grid_height(ex) == 8);
  elastic_grid* missing = nullptr;
  CHECK(elastic_dataset_exemplar(ds, 8, &missing) == ELASTIC_OUT_OF_RANGE);
  CHECK(missing == nullptr);

  // eps at a clean, lightly scaled exemplar is ~0 under its own class
  std::vector<double> scaled(64);
  std::vector<double> rows(elastic_grid_data(ex), elastic_grid_data(ex) + 64);
  for (int i = 0; i < 64; ++i) scaled[i] = std::sqrt(ab) * rows[i];
  elastic_grid* x = nullptr;
  REQUIRE(elastic_grid_create(8, 8, 1, scaled.data(), &x) == ELASTIC_OK);
  elastic_grid* eps = nullptr;
  REQUIRE(elastic_denoise(ds, sched, x, 1, 2, &eps) == ELASTIC_OK);
  double norm = 0.0;
  for (int i = 0; i < 64; ++i) norm += elastic_grid_data(eps)[i] * elastic_grid_data(eps)[i];
  CHECK(std::sqrt(norm) < 1e-9);
  elastic_grid_destroy(eps);
  eps = nullptr;

  elastic_grid* wrong = nullptr;
  REQUIRE(elastic_grid_create(4, 4, 1, nullptr, &wrong) == ELASTIC_OK);
  CHECK(elastic_grid_data(wrong)[5] == 0.0);
  CHECK(elastic_denoise(ds, sched, wrong, 1, -1, &eps) == ELASTIC_SHAPE_MISMATCH);
  CHECK(eps == nullptr);
  CHECK(elastic_grid_create(0, 4, 1, nullptr, &wrong) == ELASTIC_INVALID_ARGUMENT);

  const auto dir = fs::temp_directory_path() / "elastic_capi";
  fs::create_directories(dir);
  CHECK(elastic_grid_save(ex, ELASTIC_FORMAT_PNG, (dir / "ex.png").string().c_str()) == ELASTIC_OK);
  CHECK(fs::file_size(dir / "ex.png") > 8);
  CHECK(elastic_grid_save(ex, ELASTIC_FORMAT_PGM, "/nonexistent/dir/x.pgm") == ELASTIC_IO);

  elastic_grid_destroy(x);
  elastic_grid_destroy(ex);
  elastic_schedule_destroy(sched);
  elastic_dataset_destroy(ds);
  elastic_grid_destroy(nullptr);
  elastic_report_destroy(nullptr);
}

TEST_CASE("sampling through the C API") {
  elastic_dataset* ds = nullptr;
  elastic_schedule* sched = nullptr;
  REQUIRE(elastic_dataset_create(0, 2, 16, 16, &ds) == ELASTIC_OK);
  REQUIRE(elastic_schedule_create(1000, 1e-4, 2e-2, 5, &sched) == ELASTIC_OK);
  elastic_run_config cfg;
  elastic_run_config_init(&cfg);
  cfg.target_h = 24;
  cfg.target_w = 32;
  cfg.class_name = "disk";
  elastic_grid* a = nullptr;
  elastic_grid* b = nullptr;
  REQUIRE(elastic_sample(ds, sched, &cfg, &a) == ELASTIC_OK);
  REQUIRE(elastic_sample(ds, sched, &cfg, &b) == ELASTIC_OK);
  CHECK(elastic_grid_height(a) == 24);
  CHECK(elastic_grid_width(a) == 32);
  CHECK(std::memcmp(elastic_grid_data(a), elastic_grid_data(b), 24 * 32 * sizeof(double)) == 0);
  cfg.class_name = "cat";
  elastic_grid* c = nullptr;
  CHECK(elastic_sample(ds, sched, &cfg, &c) == ELASTIC_INVALID_ARGUMENT);
  elastic_grid_destroy(a);
  elastic_grid_destroy(b);
  elastic_schedule_destroy(sched);
  elastic_dataset_destroy(ds);
}

TEST_CASE("run reports through the C API") {
  const auto dir = fs::temp_directory_path() / "elastic_capi_run";
  fs::remove_all(dir);
  const std::string out = dir.string();
  elastic_run_config cfg;
  elastic_run_config_init(&cfg);
  cfg.command = ELASTIC_CMD_COMPARE_FUSION;
  cfg.steps = 4;
  cfg.native_h = cfg.native_w = 16;
  cfg.target_h = cfg.target_w = 32;
  const int strides[] = {2};
  cfg.strides = strides;
  cfg.stride_count = 1;
  cfg.out_dir = out.c_str();
  elastic_report* r = nullptr;
  REQUIRE(elastic_run(&cfg, &r) == ELASTIC_OK);
  CHECK(elastic_report_rows(r) == 3);
  CHECK(elastic_report_columns(r) == 3);
  CHECK(std::string(elastic_report_column(r, 1)) == "calls");
  CHECK(std::string(elastic_report_cell(r, 1, 1)) == "81");
  CHECK(std::string(elastic_report_cell(r, 2, 0)) == "implicit");
  CHECK(std::string(elastic_report_cell(r, 2, 1)) == "9");
  CHECK(elastic_report_cell(r, 3, 0) == nullptr);
  CHECK(std::string(elastic_report_get(r, "kind")) == "compare-fusion");
  CHECK(elastic_report_get(r, "missing") == nullptr);
  CHECK(std::string(elastic_report_text(r)).rfind("# elastic-report v1", 0) == 0);
  elastic_report_destroy(r);

  cfg.command = ELASTIC_CMD_SWEEP;
  const char* values[] = {"0", "1"};
  cfg.sweep_values = values;
  cfg.sweep_value_count = 2;
  REQUIRE(elastic_run(&cfg, &r) == ELASTIC_OK);
  CHECK(elastic_report_rows(r) == 2);
  elastic_report_destroy(r);

  cfg.command = ELASTIC_CMD_GENERATE;
  cfg.out_dir = "/proc/elastic-cannot-exist";
  CHECK(elastic_run(&cfg, &r) == ELASTIC_IO);
  CHECK(r == nullptr);
}
