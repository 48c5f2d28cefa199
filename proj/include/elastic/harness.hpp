// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elastic/denoiser.hpp"
#include "elastic/image_io.hpp"
#include "elastic/report.hpp"
#include "elastic/sampler.hpp"
#include "elastic/schedule.hpp"

namespace elastic {

enum class SweepAxis { resample_iters, rrg_delta, target };

SweepAxis parse_sweep_axis(const std::string& text);
std::string to_string(SweepAxis axis);

/// Everything needed to reproduce one CLI run.
struct RunSettings {
  std::string command = "generate";  // generate | compare-fusion | sweep | dump-dataset
  ElasticConfig sampler;
  std::string class_name = "gradient";
  int steps = 50;
  int train_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::uint64_t dataset_seed = 0;
  int per_class = 4;
  int native_h = 64;
  int native_w = 64;
  std::string out_dir = ".";
  ImageFormat format = ImageFormat::pgm;
  bool trace = false;
  bool timing = false;

  // compare-fusion
  std::vector<int> compare_strides = {8, 32};
  int fusion_step = -1;  // index into the DDIM steps; -1 = midpoint

  // sweep
  SweepAxis sweep_axis = SweepAxis::resample_iters;
  std::vector<std::string> sweep_values;

  void validate() const;
};

/// Flags that re-create `s` when parsed by the CLI. The output directory is
/// left out so reports from different directories compare equal.
std::string canonical_command(const RunSettings& s);

/// "HxW" -> (H, W); throws on malformed text.
std::pair<int, int> parse_dims(const std::string& text);

/// Dataset, schedule and model for a settings block.
class Workbench {
 public:
  explicit Workbench(const RunSettings& s);

  const AnalyticDataset& dataset() const { return dataset_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const AnalyticDenoiser& model() const { return model_; }
  int class_id(const std::string& name) const;

 private:
  AnalyticDataset dataset_;
  NoiseSchedule schedule_;
  AnalyticDenoiser model_;
};

struct FusionRow {
  FusionStrategy strategy;
  long calls = 0;
  double seam = 0.0;
  Grid score;
};

/// Unconditional score of one noised latent under each strategy: no_overlap,
/// explicit at every configured stride, then implicit. The latent is a class
/// exemplar resized to the target and noised to the chosen DDIM step.
std::vector<FusionRow> compare_fusion(const RunSettings& s, const Workbench& bench);

RunReport sample_report(const RunSettings& s, const Workbench& bench, const SampleResult& result);

/// Writes DIR/generate.{pgm,png} and DIR/generate.report (plus reference
/// snapshots under DIR/generate_trace/ when tracing).
RunReport run_generate(const RunSettings& s);
/// Writes DIR/compare-fusion.report and one score image per strategy.
RunReport run_compare_fusion(const RunSettings& s);
/// One sample per sweep value: DIR/sweep_<i>.{image,report}, plus the summary
/// DIR/sweep.report, which is also the returned first element.
std::vector<RunReport> run_sweep(const RunSettings& s);
/// Writes every exemplar image and DIR/dataset.report.
RunReport run_dump_dataset(const RunSettings& s);

}  // namespace elastic
