// SPDX-License-Identifier: Apache-2.0
#include "elastic/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "elastic/error.hpp"

namespace elastic {

namespace fs = std::filesystem;

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "R") return SweepAxis::resample_iters;
  if (text == "delta") return SweepAxis::rrg_delta;
  if (text == "target") return SweepAxis::target;
  fail(Errc::invalid_argument, "unknown sweep axis '" + text + "' (expected R, delta or target)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::resample_iters:
      return "R";
    case SweepAxis::rrg_delta:
      return "delta";
    case SweepAxis::target:
      return "target";
  }
  return "?";
}

std::pair<int, int> parse_dims(const std::string& text) {
  const auto x = text.find('x');
  auto digits = [](const std::string& s) {
    return !s.empty() && s.size() < 7 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (x != std::string::npos) {
    const std::string h = text.substr(0, x), w = text.substr(x + 1);
    if (digits(h) && digits(w)) {
      const int hv = std::stoi(h), wv = std::stoi(w);
      if (hv >= 1 && wv >= 1) return {hv, wv};
    }
  }
  fail(Errc::invalid_argument, "expected dimensions as HxW, got '" + text + "'");
}

namespace {

const std::vector<std::string> kCommands = {"generate", "compare-fusion", "sweep", "dump-dataset"};

double to_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) fail(Errc::invalid_argument, what + " value '" + text + "' is not a number");
  return v;
}

int to_int(const std::string& text, const std::string& what) {
  const double v = to_double(text, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) fail(Errc::invalid_argument, what + " value '" + text + "' is not an integer");
  return int(v);
}

}  // namespace

void RunSettings::validate() const {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    fail(Errc::invalid_argument, "unknown command '" + command + "'");
  }
  sampler.validate();
  if (steps < 1 || steps > train_steps) fail(Errc::invalid_argument, "steps must lie in [1, train steps]");
  if (per_class < 1) fail(Errc::invalid_argument, "per-class count must be positive");
  if (native_h < 1 || native_w < 1) fail(Errc::invalid_argument, "native size must be positive");
  const auto& names = procedural_class_names();
  if (command != "dump-dataset" && std::find(names.begin(), names.end(), class_name) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    fail(Errc::invalid_argument, "unknown class '" + class_name + "' (known: " + known + ")");
  }
  if (sampler.strategy.kind == FusionStrategy::Kind::explicit_overlap &&
      sampler.strategy.stride > std::min(native_h, native_w)) {
    fail(Errc::invalid_argument, "explicit stride exceeds the native size");
  }
  if (command == "compare-fusion") {
    if (sampler.target_h <= native_h && sampler.target_w <= native_w) {
      fail(Errc::invalid_argument, "compare-fusion needs a target larger than the native size");
    }
    if (sampler.target_h < native_h || sampler.target_w < native_w) {
      fail(Errc::invalid_argument, "compare-fusion needs a target at least native size on both axes");
    }
    for (int stride : compare_strides) {
      if (stride < 1 || stride > std::min(native_h, native_w)) {
        fail(Errc::invalid_argument, "compare stride " + std::to_string(stride) + " outside [1, native size]");
      }
    }
    if (fusion_step >= steps) fail(Errc::invalid_argument, "fusion step index beyond the DDIM steps");
  }
  if (command == "sweep") {
    if (sweep_values.empty()) fail(Errc::invalid_argument, "sweep needs at least one value");
    for (const auto& v : sweep_values) {
      switch (sweep_axis) {
        case SweepAxis::resample_iters:
          if (to_int(v, "R") < 0) fail(Errc::invalid_argument, "R values must be non-negative");
          break;
        case SweepAxis::rrg_delta:
          if (to_double(v, "delta") < 0.0) fail(Errc::invalid_argument, "delta values must be non-negative");
          break;
        case SweepAxis::target:
          parse_dims(v);
          break;
      }
    }
  }
}

std::string canonical_command(const RunSettings& s) {
  const ElasticConfig& c = s.sampler;
  std::string out = "elastic " + s.command;
  auto flag = [&out](const std::string& name, const std::string& value) { out += " --" + name + "=" + value; };
  auto num = [](double v) { return format_number(v); };
  flag("target", std::to_string(c.target_h) + "x" + std::to_string(c.target_w));
  flag("class", s.class_name);
  flag("steps", std::to_string(s.steps));
  flag("guidance", num(c.guidance));
  flag("resample-iters", c.resample_iters ? std::to_string(*c.resample_iters) : "auto");
  flag("resample-fraction", num(c.resample_fraction));
  flag("rrg-delta", num(c.rrg_initial));
  flag("rrg-cutoff", num(c.rrg_cutoff));
  flag("background", num(c.background_low) + ":" + num(c.background_high));
  flag("seed", std::to_string(c.seed));
  flag("strategy", c.strategy.name());
  flag("format", s.format == ImageFormat::pgm ? "pgm" : "png");
  flag("dataset-seed", std::to_string(s.dataset_seed));
  flag("per-class", std::to_string(s.per_class));
  flag("native", std::to_string(s.native_h) + "x" + std::to_string(s.native_w));
  if (s.command == "compare-fusion") {
    std::string strides;
    for (std::size_t i = 0; i < s.compare_strides.size(); ++i) strides += (i ? "," : "") + std::to_string(s.compare_strides[i]);
    flag("strides", strides);
    flag("fusion-step", std::to_string(s.fusion_step));
  }
  if (s.command == "sweep") {
    std::string values;
    for (std::size_t i = 0; i < s.sweep_values.size(); ++i) values += (i ? "," : "") + s.sweep_values[i];
    flag("axis", to_string(s.sweep_axis));
    flag("values", values);
  }
  if (s.trace) out += " --trace";
  if (s.timing) out += " --timing";
  return out;
}

Workbench::Workbench(const RunSettings& s)
    : dataset_(make_procedural_dataset(s.dataset_seed, s.per_class, s.native_h, s.native_w)),
      schedule_(make_linear_schedule(s.train_steps, s.beta_start, s.beta_end, s.steps)),
      model_(dataset_, schedule_) {}

int Workbench::class_id(const std::string& name) const {
  const auto id = dataset_.find_class(name);
  if (!id) {
    std::string known;
    for (const auto& n : dataset_.class_names) known += (known.empty() ? "" : ", ") + n;
    fail(Errc::invalid_argument, "unknown class '" + name + "' (known: " + known + ")");
  }
  return *id;
}

std::vector<FusionRow> compare_fusion(const RunSettings& s, const Workbench& bench) {
  const AnalyticDataset& ds = bench.dataset();
  const NoiseSchedule& sched = bench.schedule();
  const int th = s.sampler.target_h, tw = s.sampler.target_w;
  const int class_id = bench.class_id(s.class_name);

  std::vector<int> members;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] == class_id) members.push_back(int(i));
  }
  const Grid& exemplar = ds.exemplars[members[s.sampler.seed % members.size()]];
  const int step_index = s.fusion_step >= 0 ? s.fusion_step : int(sched.ddim_steps().size()) / 2;
  const int t = sched.ddim_steps().at(step_index);
  RandomStream noise_rng(s.sampler.seed, "fusion");
  const Grid latent = forward_noise(resize_nearest(exemplar, th, tw), t, noise_rng.normal_grid(th, tw, ds.channels), sched);

  std::vector<FusionStrategy> strategies = {FusionStrategy::none()};
  for (int stride : s.compare_strides) strategies.push_back(FusionStrategy::explicit_overlap(stride));
  strategies.push_back(FusionStrategy::implicit());

  std::vector<FusionRow> rows;
  for (const auto& strategy : strategies) {
    CountingModel counter(bench.model());
    FusionRow row;
    row.strategy = strategy;
    row.score = fused_unconditional(latent, t, strategy, counter, s.sampler.parallel);
    row.calls = counter.single_calls();
    row.seam = seam_discontinuity(row.score, strategy_seams(strategy, th, tw, ds.native_h, ds.native_w));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void echo_settings(RunReport& r, const RunSettings& s) {
  const ElasticConfig& c = s.sampler;
  r.set("kind", s.command);
  r.set("command", canonical_command(s));
  r.set("seed", std::to_string(c.seed));
  r.set("target", std::to_string(c.target_h) + "x" + std::to_string(c.target_w));
  r.set("class", s.class_name);
  r.set("steps", s.steps);
  r.set("train_steps", s.train_steps);
  r.set("beta_start", s.beta_start);
  r.set("beta_end", s.beta_end);
  r.set("guidance", c.guidance);
  r.set("resample_fraction", c.resample_fraction);
  r.set("rrg_delta", c.rrg_initial);
  r.set("rrg_cutoff", c.rrg_cutoff);
  r.set("background_low", c.background_low);
  r.set("background_high", c.background_high);
  r.set("strategy", c.strategy.name());
  r.set("dataset_seed", std::to_string(s.dataset_seed));
  r.set("per_class", s.per_class);
  r.set("native", std::to_string(s.native_h) + "x" + std::to_string(s.native_w));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(Errc::io, "cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

}  // namespace

RunReport sample_report(const RunSettings& s, const Workbench& bench, const SampleResult& result) {
  RunReport r;
  echo_settings(r, s);
  r.set("reference", std::to_string(result.frame.ref.n) + "x" + std::to_string(result.frame.ref.m));
  r.set("resample_iters", result.resample_iters);
  r.set("resample_per_iter", result.resample_per_iter);
  const double ref_area = double(result.frame.ref.n) * result.frame.ref.m;
  r.set("resampled_fraction", double(result.resample_iters) * result.resample_per_iter / ref_area);
  std::string colour;
  for (double v : result.frame.background) colour += (colour.empty() ? "" : ":") + format_number(v);
  r.set("background_colour", colour);

  const NearestExemplar nearest = nearest_exemplar(result.image, bench.dataset());
  r.set("nearest_exemplar", nearest.index);
  r.set("nearest_class", bench.dataset().class_names[nearest.label]);
  r.set("nearest_exemplar_rms", nearest.rms);
  const SeamLines seams = strategy_seams(s.sampler.strategy, std::max(s.sampler.target_h, s.native_h),
                                         std::max(s.sampler.target_w, s.native_w), s.native_h, s.native_w);
  r.set("final_seam", s.sampler.target_h >= s.native_h && s.sampler.target_w >= s.native_w
                          ? seam_discontinuity(result.image, seams)
                          : 0.0);

  std::vector<std::string> columns = {"step",        "t",    "delta", "reference_pairs", "resample_pairs",
                                      "patch_calls", "seam", "rrg_norm"};
  if (s.timing) columns.push_back("wall_ms");
  r.set_columns(columns);
  for (const StepRecord& rec : result.trace) {
    std::vector<std::string> row = {std::to_string(rec.index),
                                    std::to_string(rec.t),
                                    format_number(rec.delta),
                                    std::to_string(rec.reference_pairs),
                                    std::to_string(rec.resample_pairs),
                                    std::to_string(rec.patch_calls),
                                    format_number(rec.seam),
                                    format_number(rec.rrg_norm)};
    if (s.timing) row.push_back(format_number(rec.wall_ms));
    r.add_row(std::move(row));
  }
  return r;
}

namespace {

SampleResult sample(const RunSettings& s, const Workbench& bench) {
  ElasticConfig cfg = s.sampler;
  cfg.keep_snapshots = s.trace;
  return elastic_sample(cfg, bench.class_id(s.class_name), bench.model(), bench.schedule());
}

void write_sample(const RunSettings& s, const SampleResult& result, const RunReport& report, const std::string& stem) {
  write_file(join(s.out_dir, stem + extension(s.format)), render_image(result.image, s.format));
  report.save(join(s.out_dir, stem + ".report"));
  if (!s.trace) return;
  const std::string trace_dir = join(s.out_dir, stem + "_trace");
  ensure_dir(trace_dir);
  for (const StepRecord& rec : result.trace) {
    if (!rec.reference_prediction) continue;
    char name[64];
    std::snprintf(name, sizeof name, "step_%03d_reference", rec.index);
    write_file(join(trace_dir, name + extension(s.format)), render_image(*rec.reference_prediction, s.format));
  }
}

}  // namespace

RunReport run_generate(const RunSettings& s) {
  s.validate();
  const Workbench bench(s);
  bench.class_id(s.class_name);
  ensure_dir(s.out_dir);
  const SampleResult result = sample(s, bench);
  RunReport report = sample_report(s, bench, result);
  write_sample(s, result, report, "generate");
  return report;
}

RunReport run_compare_fusion(const RunSettings& s) {
  s.validate();
  const Workbench bench(s);
  ensure_dir(s.out_dir);
  const auto rows = compare_fusion(s, bench);
  RunReport report;
  echo_settings(report, s);
  const int step_index = s.fusion_step >= 0 ? s.fusion_step : s.steps / 2;
  report.set("fusion_step", step_index);
  report.set("fusion_t", bench.schedule().ddim_steps().at(step_index));
  report.set_columns({"strategy", "calls", "seam"});
  for (const FusionRow& row : rows) {
    report.add_row({row.strategy.name(), std::to_string(row.calls), format_number(row.seam)});
    std::string stem = "fusion_" + row.strategy.name();
    std::replace(stem.begin(), stem.end(), ':', '_');
    // Scores are roughly unit variance; halve them so most values fit [-1, 1].
    write_file(join(s.out_dir, stem + extension(s.format)), render_image(0.5 * row.score, s.format));
  }
  report.save(join(s.out_dir, "compare-fusion.report"));
  return report;
}

std::vector<RunReport> run_sweep(const RunSettings& s) {
  s.validate();
  const Workbench base_bench(s);
  base_bench.class_id(s.class_name);
  ensure_dir(s.out_dir);

  RunReport summary;
  echo_settings(summary, s);
  summary.set("axis", to_string(s.sweep_axis));
  summary.set_columns({"value", "target", "resample_iters", "resampled_fraction", "delta_start", "patch_calls",
                       "nearest_exemplar_rms", "final_seam"});
  std::vector<RunReport> reports(1);

  for (std::size_t i = 0; i < s.sweep_values.size(); ++i) {
    RunSettings item = s;
    item.command = "generate";
    const std::string& value = s.sweep_values[i];
    switch (s.sweep_axis) {
      case SweepAxis::resample_iters:
        item.sampler.resample_iters = to_int(value, "R");
        break;
      case SweepAxis::rrg_delta:
        item.sampler.rrg_initial = to_double(value, "delta");
        break;
      case SweepAxis::target: {
        const auto [h, w] = parse_dims(value);
        item.sampler.target_h = h;
        item.sampler.target_w = w;
        break;
      }
    }
    item.validate();
    const SampleResult result = sample(item, base_bench);
    RunReport report = sample_report(item, base_bench, result);
    write_sample(item, result, report, "sweep_" + std::to_string(i));
    summary.add_row({value, *report.get("target"), *report.get("resample_iters"), *report.get("resampled_fraction"),
                     format_number(result.trace.front().delta), std::to_string(result.trace.front().patch_calls),
                     *report.get("nearest_exemplar_rms"), *report.get("final_seam")});
    reports.push_back(std::move(report));
  }
  summary.save(join(s.out_dir, "sweep.report"));
  reports.front() = std::move(summary);
  return reports;
}

RunReport run_dump_dataset(const RunSettings& s) {
  s.validate();
  const AnalyticDataset ds = make_procedural_dataset(s.dataset_seed, s.per_class, s.native_h, s.native_w);
  ensure_dir(s.out_dir);
  RunReport report;
  report.set("kind", "dump-dataset");
  report.set("command", canonical_command(s));
  report.set("dataset_seed", std::to_string(s.dataset_seed));
  report.set("per_class", s.per_class);
  report.set("native", std::to_string(s.native_h) + "x" + std::to_string(s.native_w));
  report.set_columns({"index", "class", "file"});
  std::vector<int> seen(ds.class_count(), 0);
  for (std::size_t i = 0; i < ds.exemplars.size(); ++i) {
    const std::string& cls = ds.class_names[ds.labels[i]];
    const std::string file = cls + "_" + std::to_string(seen[ds.labels[i]]++) + extension(s.format);
    write_file(join(s.out_dir, file), render_image(ds.exemplars[i], s.format));
    report.add_row({std::to_string(i), cls, file});
  }
  report.save(join(s.out_dir, "dataset.report"));
  return report;
}

}  // namespace elastic
