// SPDX-License-Identifier: Apache-2.0
#include "cli_config.hpp"

#include <CLI11.hpp>

#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>

namespace elastic_cli {

RunConfig::RunConfig() { elastic_run_config_init(&cfg_); }

RunConfig::RunConfig(const RunConfig& other)
    : class_name(other.class_name),
      out_dir(other.out_dir),
      strides(other.strides),
      sweep_values(other.sweep_values),
      cfg_(other.cfg_) {}

RunConfig& RunConfig::operator=(const RunConfig& other) {
  class_name = other.class_name;
  out_dir = other.out_dir;
  strides = other.strides;
  sweep_values = other.sweep_values;
  cfg_ = other.cfg_;
  return *this;
}

const elastic_run_config& RunConfig::config() const {
  value_ptrs_.clear();
  for (const auto& v : sweep_values) value_ptrs_.push_back(v.c_str());
  cfg_.class_name = class_name.c_str();
  cfg_.out_dir = out_dir.c_str();
  cfg_.strides = strides.data();
  cfg_.stride_count = strides.size();
  cfg_.sweep_values = value_ptrs_.data();
  cfg_.sweep_value_count = value_ptrs_.size();
  return cfg_;
}

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && s.size() < 7 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

struct Flags {
  std::string target;
  std::string class_name;
  std::optional<int> steps;
  std::optional<double> guidance;
  std::string resample_iters;
  std::optional<double> resample_fraction;
  std::optional<double> rrg_delta;
  std::optional<double> rrg_cutoff;
  std::string background;
  std::optional<std::uint64_t> seed;
  std::string strategy;
  std::string format;
  std::optional<std::uint64_t> dataset_seed;
  std::optional<int> per_class;
  std::string native;
  bool trace = false;
  bool timing = false;
  std::string out;
  std::vector<int> strides;
  std::optional<int> fusion_step;
  std::string axis;
  std::vector<std::string> values;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--target", f.target, "Output size HxW (default 128x128)");
  app->add_option("--class", f.class_name, "Class name: gradient, stripes, disk, checker");
  app->add_option("--steps", f.steps, "DDIM steps (default 50)");
  app->add_option("--guidance", f.guidance, "Classifier-free guidance scale (default 7.0)");
  app->add_option("--resample-iters", f.resample_iters, "Resampling iterations R, or 'auto'");
  app->add_option("--resample-fraction", f.resample_fraction, "Reference share resampled per iteration (default 0.20)")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--rrg-delta", f.rrg_delta, "Initial guidance weight (default 200)");
  app->add_option("--rrg-cutoff", f.rrg_cutoff, "Progress where the weight reaches zero (default 0.6)");
  app->add_option("--background", f.background, "Background colour range LOW:HIGH (default -1:1)");
  app->add_option("--seed", f.seed, "Sampling seed");
  app->add_option("--strategy", f.strategy, "implicit | explicit:STRIDE | none");
  app->add_option("--format", f.format, "pgm | png")->check(CLI::IsMember({"pgm", "png"}));
  app->add_option("--dataset-seed", f.dataset_seed, "Procedural dataset seed (default 0)");
  app->add_option("--per-class", f.per_class, "Exemplars per class (default 4)");
  app->add_option("--native", f.native, "Model native size HxW (default 64x64)");
  app->add_option("--out", f.out, "Output directory (default .)");
  app->add_flag("--trace", f.trace, "Write per-step reference predictions");
  app->add_flag("--timing", f.timing, "Record wall time per step (reports stop being byte-stable)");
}

void usage(const std::string& what) { throw CLI::ValidationError(what); }

void apply(const Flags& f, const std::string& command, RunConfig& rc) {
  elastic_run_config& c = rc.raw();
  if (command == "generate") c.command = ELASTIC_CMD_GENERATE;
  if (command == "compare-fusion") c.command = ELASTIC_CMD_COMPARE_FUSION;
  if (command == "sweep") c.command = ELASTIC_CMD_SWEEP;
  if (command == "dump-dataset") c.command = ELASTIC_CMD_DUMP_DATASET;

  if (!f.target.empty() && !parse_dims(f.target, c.target_h, c.target_w)) usage("--target expects HxW, got " + f.target);
  if (!f.native.empty() && !parse_dims(f.native, c.native_h, c.native_w)) usage("--native expects HxW, got " + f.native);
  if (!f.class_name.empty()) rc.class_name = f.class_name;
  if (f.steps) c.steps = *f.steps;
  if (f.guidance) c.guidance = *f.guidance;
  if (!f.resample_iters.empty()) {
    if (f.resample_iters == "auto") {
      c.resample_iters = -1;
    } else if (all_digits(f.resample_iters)) {
      c.resample_iters = std::stoi(f.resample_iters);
    } else {
      usage("--resample-iters expects a non-negative integer or 'auto'");
    }
  }
  if (f.resample_fraction) c.resample_fraction = *f.resample_fraction;
  if (f.rrg_delta) c.rrg_delta = *f.rrg_delta;
  if (f.rrg_cutoff) c.rrg_cutoff = *f.rrg_cutoff;
  if (!f.background.empty()) {
    const auto colon = f.background.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("colon");
      std::size_t used_lo = 0, used_hi = 0;
      const std::string lo = f.background.substr(0, colon), hi = f.background.substr(colon + 1);
      c.background_low = std::stod(lo, &used_lo);
      c.background_high = std::stod(hi, &used_hi);
      if (used_lo != lo.size() || used_hi != hi.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      usage("--background expects LOW:HIGH, got " + f.background);
    }
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.strategy.empty()) {
    const std::string prefix = "explicit:";
    if (f.strategy == "implicit") {
      c.strategy = ELASTIC_STRATEGY_IMPLICIT;
    } else if (f.strategy == "none") {
      c.strategy = ELASTIC_STRATEGY_NONE;
    } else if (f.strategy.rfind(prefix, 0) == 0 && all_digits(f.strategy.substr(prefix.size()))) {
      c.strategy = ELASTIC_STRATEGY_EXPLICIT;
      c.strategy_stride = std::stoi(f.strategy.substr(prefix.size()));
    } else {
      usage("--strategy expects implicit, none or explicit:STRIDE, got " + f.strategy);
    }
  }
  if (f.format == "png") c.format = ELASTIC_FORMAT_PNG;
  if (f.dataset_seed) {
    c.dataset_seed = *f.dataset_seed;
  } else if (command == "dump-dataset" && f.seed) {
    c.dataset_seed = *f.seed;
  }
  if (f.per_class) c.per_class = *f.per_class;
  c.trace = f.trace;
  c.timing = f.timing;
  if (!f.out.empty()) rc.out_dir = f.out;
  if (!f.strides.empty()) rc.strides = f.strides;
  if (f.fusion_step) c.fusion_step = *f.fusion_step;
  if (command == "sweep") {
    if (f.axis == "R") c.sweep_axis = ELASTIC_SWEEP_R;
    if (f.axis == "delta") c.sweep_axis = ELASTIC_SWEEP_DELTA;
    if (f.axis == "target") c.sweep_axis = ELASTIC_SWEEP_TARGET;
    rc.sweep_values = f.values;
  }
}

}  // namespace

bool parse_dims(const std::string& text, int& h, int& w) {
  const auto x = text.find('x');
  if (x == std::string::npos) return false;
  const std::string hs = text.substr(0, x), ws = text.substr(x + 1);
  if (!all_digits(hs) || !all_digits(ws)) return false;
  const int hv = std::stoi(hs), wv = std::stoi(ws);
  if (hv < 1 || wv < 1) return false;
  h = hv;
  w = wv;
  return true;
}

ParseResult parse_config(int argc, const char* const* argv) {
  CLI::App app{"Arbitrary-size sampling from a fixed-size diffusion model", "elastic"};
  app.require_subcommand(1);
  app.set_version_flag("--version", elastic_version());

  Flags f;
  auto* generate = app.add_subcommand("generate", "Sample one image");
  auto* compare = app.add_subcommand("compare-fusion", "Compare patch fusion strategies on one latent");
  auto* sweep = app.add_subcommand("sweep", "Sample once per value of one parameter");
  auto* dump = app.add_subcommand("dump-dataset", "Write the procedural exemplars");
  for (auto* sub : {generate, compare, sweep, dump}) add_common(sub, f);
  compare->add_option("--strides", f.strides, "Explicit strides to compare (default 8,32)")->delimiter(',');
  compare->add_option("--fusion-step", f.fusion_step, "DDIM step index of the latent (default midpoint)");
  sweep->add_option("--axis", f.axis, "R | delta | target")->required()->check(CLI::IsMember({"R", "delta", "target"}));
  sweep->add_option("--values", f.values, "Values to sweep (space or comma separated)")->required()->delimiter(',');

  ParseResult result;
  try {
    app.parse(argc, argv);
    std::string command;
    for (auto* sub : {generate, compare, sweep, dump}) {
      if (sub->parsed()) command = sub->get_name();
    }
    apply(f, command, result.config);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    const int code = app.exit(e, out, err);
    result.exit_code = code == 0 ? kExitOk : kExitUsage;
    result.message = out.str() + err.str();
    return result;
  }

  if (elastic_run_config_validate(&result.config.config()) != ELASTIC_OK) {
    result.exit_code = kExitUsage;
    result.message = std::string("error: ") + elastic_last_error() + "\n";
    return result;
  }
  result.run = true;
  return result;
}

}  // namespace elastic_cli
