// SPDX-License-Identifier: Apache-2.0
#include "elastic/elastic.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "elastic/denoiser.hpp"
#include "elastic/error.hpp"
#include "elastic/harness.hpp"
#include "elastic/image_io.hpp"
#include "elastic/sampler.hpp"
#include "elastic/schedule.hpp"

struct elastic_dataset {
  elastic::AnalyticDataset ds;
};

struct elastic_schedule {
  elastic::NoiseSchedule sched;
};

struct elastic_grid {
  elastic::Grid grid;
};

struct elastic_report {
  elastic::RunReport report;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

elastic_status record(elastic_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
elastic_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ELASTIC_OK;
  } catch (const elastic::Error& e) {
    switch (e.code()) {
      case elastic::Errc::invalid_argument:
        return record(ELASTIC_INVALID_ARGUMENT, e.what());
      case elastic::Errc::shape_mismatch:
        return record(ELASTIC_SHAPE_MISMATCH, e.what());
      case elastic::Errc::out_of_range:
        return record(ELASTIC_OUT_OF_RANGE, e.what());
      case elastic::Errc::io:
        return record(ELASTIC_IO, e.what());
    }
    return record(ELASTIC_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return record(ELASTIC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(ELASTIC_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (!p) elastic::fail(elastic::Errc::invalid_argument, std::string(what) + " is null");
}

elastic::FusionStrategy to_strategy(elastic_strategy kind, int stride) {
  switch (kind) {
    case ELASTIC_STRATEGY_NONE:
      return elastic::FusionStrategy::none();
    case ELASTIC_STRATEGY_EXPLICIT:
      return elastic::FusionStrategy::explicit_overlap(stride);
    case ELASTIC_STRATEGY_IMPLICIT:
      return elastic::FusionStrategy::implicit();
  }
  elastic::fail(elastic::Errc::invalid_argument, "unknown strategy");
}

elastic::ElasticConfig to_sampler(const elastic_run_config& c) {
  elastic::ElasticConfig s;
  s.target_h = c.target_h;
  s.target_w = c.target_w;
  s.guidance = c.guidance;
  s.resample_fraction = c.resample_fraction;
  if (c.resample_iters >= 0) s.resample_iters = c.resample_iters;
  s.rrg_initial = c.rrg_delta;
  s.rrg_cutoff = c.rrg_cutoff;
  s.background_low = c.background_low;
  s.background_high = c.background_high;
  s.seed = c.seed;
  s.strategy = to_strategy(c.strategy, c.strategy_stride);
  s.parallel = c.parallel != 0;
  return s;
}

elastic::RunSettings to_settings(const elastic_run_config* c) {
  require(c, "config");
  elastic::RunSettings s;
  switch (c->command) {
    case ELASTIC_CMD_GENERATE:
      s.command = "generate";
      break;
    case ELASTIC_CMD_COMPARE_FUSION:
      s.command = "compare-fusion";
      break;
    case ELASTIC_CMD_SWEEP:
      s.command = "sweep";
      break;
    case ELASTIC_CMD_DUMP_DATASET:
      s.command = "dump-dataset";
      break;
    default:
      elastic::fail(elastic::Errc::invalid_argument, "unknown command");
  }
  s.sampler = to_sampler(*c);
  require(c->class_name, "class name");
  s.class_name = c->class_name;
  s.steps = c->steps;
  s.dataset_seed = c->dataset_seed;
  s.per_class = c->per_class;
  s.native_h = c->native_h;
  s.native_w = c->native_w;
  s.out_dir = c->out_dir ? c->out_dir : ".";
  if (c->format != ELASTIC_FORMAT_PGM && c->format != ELASTIC_FORMAT_PNG) {
    elastic::fail(elastic::Errc::invalid_argument, "unknown image format");
  }
  s.format = c->format == ELASTIC_FORMAT_PNG ? elastic::ImageFormat::png : elastic::ImageFormat::pgm;
  s.trace = c->trace != 0;
  s.timing = c->timing != 0;
  if (c->stride_count) {
    require(c->strides, "strides");
    s.compare_strides.assign(c->strides, c->strides + c->stride_count);
  } else {
    s.compare_strides.clear();
  }
  s.fusion_step = c->fusion_step < 0 ? -1 : c->fusion_step;
  switch (c->sweep_axis) {
    case ELASTIC_SWEEP_R:
      s.sweep_axis = elastic::SweepAxis::resample_iters;
      break;
    case ELASTIC_SWEEP_DELTA:
      s.sweep_axis = elastic::SweepAxis::rrg_delta;
      break;
    case ELASTIC_SWEEP_TARGET:
      s.sweep_axis = elastic::SweepAxis::target;
      break;
    default:
      elastic::fail(elastic::Errc::invalid_argument, "unknown sweep axis");
  }
  if (c->sweep_value_count) require(c->sweep_values, "sweep values");
  for (std::size_t i = 0; i < c->sweep_value_count; ++i) {
    require(c->sweep_values[i], "sweep value");
    s.sweep_values.emplace_back(c->sweep_values[i]);
  }
  return s;
}

elastic_report* wrap(elastic::RunReport r) {
  auto* out = new elastic_report{std::move(r), {}};
  out->text = out->report.serialize();
  return out;
}

}  // namespace

extern "C" {

const char* elastic_version(void) { return "1.0.0"; }

const char* elastic_status_name(elastic_status status) {
  switch (status) {
    case ELASTIC_OK:
      return "ok";
    case ELASTIC_INVALID_ARGUMENT:
      return "invalid argument";
    case ELASTIC_SHAPE_MISMATCH:
      return "shape mismatch";
    case ELASTIC_OUT_OF_RANGE:
      return "out of range";
    case ELASTIC_IO:
      return "i/o error";
    case ELASTIC_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* elastic_last_error(void) { return g_last_error.c_str(); }

void elastic_run_config_init(elastic_run_config* cfg) {
  if (!cfg) return;
  const elastic::RunSettings d;
  std::memset(cfg, 0, sizeof *cfg);
  cfg->command = ELASTIC_CMD_GENERATE;
  cfg->target_h = d.sampler.target_h;
  cfg->target_w = d.sampler.target_w;
  cfg->class_name = "gradient";
  cfg->steps = d.steps;
  cfg->guidance = d.sampler.guidance;
  cfg->resample_fraction = d.sampler.resample_fraction;
  cfg->resample_iters = -1;
  cfg->rrg_delta = d.sampler.rrg_initial;
  cfg->rrg_cutoff = d.sampler.rrg_cutoff;
  cfg->background_low = d.sampler.background_low;
  cfg->background_high = d.sampler.background_high;
  cfg->seed = 0;
  cfg->strategy = ELASTIC_STRATEGY_IMPLICIT;
  cfg->strategy_stride = 32;
  cfg->dataset_seed = d.dataset_seed;
  cfg->per_class = d.per_class;
  cfg->native_h = d.native_h;
  cfg->native_w = d.native_w;
  cfg->out_dir = ".";
  cfg->format = ELASTIC_FORMAT_PGM;
  cfg->parallel = 1;
  static const int kStrides[] = {8, 32};
  cfg->strides = kStrides;
  cfg->stride_count = 2;
  cfg->fusion_step = -1;
  cfg->sweep_axis = ELASTIC_SWEEP_R;
}

elastic_status elastic_run_config_validate(const elastic_run_config* cfg) {
  return guarded([&] { to_settings(cfg).validate(); });
}

elastic_status elastic_run_config_command(const elastic_run_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    const std::string text = elastic::canonical_command(to_settings(cfg));
    if (needed) *needed = text.size() + 1;
    if (buf && cap) {
      const std::size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

elastic_status elastic_run(const elastic_run_config* cfg, elastic_report** out) {
  return guarded([&] {
    require(out, "output");
    *out = nullptr;
    const elastic::RunSettings s = to_settings(cfg);
    if (s.command == "generate") {
      *out = wrap(elastic::run_generate(s));
    } else if (s.command == "compare-fusion") {
      *out = wrap(elastic::run_compare_fusion(s));
    } else if (s.command == "sweep") {
      *out = wrap(std::move(elastic::run_sweep(s).front()));
    } else {
      *out = wrap(elastic::run_dump_dataset(s));
    }
  });
}

void elastic_report_destroy(elastic_report* report) { delete report; }

const char* elastic_report_text(const elastic_report* report) { return report ? report->text.c_str() : ""; }

const char* elastic_report_get(const elastic_report* report, const char* key) {
  if (!report || !key) return nullptr;
  for (const auto& [k, v] : report->report.header()) {
    if (k == key) return v.c_str();
  }
  return nullptr;
}

size_t elastic_report_rows(const elastic_report* report) { return report ? report->report.rows().size() : 0; }

size_t elastic_report_columns(const elastic_report* report) {
  return report ? report->report.columns().size() : 0;
}

const char* elastic_report_column(const elastic_report* report, size_t col) {
  if (!report || col >= report->report.columns().size()) return nullptr;
  return report->report.columns()[col].c_str();
}

const char* elastic_report_cell(const elastic_report* report, size_t row, size_t col) {
  if (!report || row >= report->report.rows().size() || col >= report->report.columns().size()) return nullptr;
  return report->report.rows()[row][col].c_str();
}

elastic_status elastic_dataset_create(uint64_t seed, int per_class, int native_h, int native_w,
                                      elastic_dataset** out) {
  return guarded([&] {
    require(out, "output");
    *out = nullptr;
    *out = new elastic_dataset{elastic::make_procedural_dataset(seed, per_class, native_h, native_w)};
  });
}

void elastic_dataset_destroy(elastic_dataset* ds) { delete ds; }

int elastic_dataset_class_count(const elastic_dataset* ds) { return ds ? ds->ds.class_count() : 0; }

const char* elastic_dataset_class_name(const elastic_dataset* ds, int class_id) {
  if (!ds || class_id < 0 || class_id >= ds->ds.class_count()) return nullptr;
  return ds->ds.class_names[class_id].c_str();
}

int elastic_dataset_find_class(const elastic_dataset* ds, const char* name) {
  if (!ds || !name) return -1;
  return ds->ds.find_class(name).value_or(-1);
}

size_t elastic_dataset_size(const elastic_dataset* ds) { return ds ? ds->ds.exemplars.size() : 0; }

elastic_status elastic_dataset_exemplar(const elastic_dataset* ds, size_t index, elastic_grid** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "output");
    *out = nullptr;
    if (index >= ds->ds.exemplars.size()) elastic::fail(elastic::Errc::out_of_range, "exemplar index out of range");
    *out = new elastic_grid{ds->ds.exemplars[index]};
  });
}

elastic_status elastic_schedule_create(int train_steps, double beta_start, double beta_end, int ddim_steps,
                                       elastic_schedule** out) {
  return guarded([&] {
    require(out, "output");
    *out = nullptr;
    *out = new elastic_schedule{elastic::make_linear_schedule(train_steps, beta_start, beta_end, ddim_steps)};
  });
}

void elastic_schedule_destroy(elastic_schedule* sched) { delete sched; }

elastic_status elastic_schedule_alpha_bar(const elastic_schedule* sched, int t, double* out) {
  return guarded([&] {
    require(sched, "schedule");
    require(out, "output");
    *out = sched->sched.alpha_bar(t);
  });
}

size_t elastic_schedule_step_count(const elastic_schedule* sched) {
  return sched ? sched->sched.ddim_steps().size() : 0;
}

int elastic_schedule_step(const elastic_schedule* sched, size_t index) {
  if (!sched || index >= sched->sched.ddim_steps().size()) return -1;
  return sched->sched.ddim_steps()[index];
}

elastic_status elastic_grid_create(int h, int w, int c, const double* data, elastic_grid** out) {
  return guarded([&] {
    require(out, "output");
    *out = nullptr;
    elastic::Grid g(h, w, c);
    if (data) std::memcpy(g.values().data(), data, g.size() * sizeof(double));
    *out = new elastic_grid{std::move(g)};
  });
}

void elastic_grid_destroy(elastic_grid* grid) { delete grid; }

int elastic_grid_height(const elastic_grid* grid) { return grid ? grid->grid.height() : 0; }
int elastic_grid_width(const elastic_grid* grid) { return grid ? grid->grid.width() : 0; }
int elastic_grid_channels(const elastic_grid* grid) { return grid ? grid->grid.channels() : 0; }
const double* elastic_grid_data(const elastic_grid* grid) { return grid ? grid->grid.values().data() : nullptr; }

elastic_status elastic_grid_save(const elastic_grid* grid, elastic_format format, const char* path) {
  return guarded([&] {
    require(grid, "grid");
    require(path, "path");
    if (format != ELASTIC_FORMAT_PGM && format != ELASTIC_FORMAT_PNG) {
      elastic::fail(elastic::Errc::invalid_argument, "unknown image format");
    }
    const auto f = format == ELASTIC_FORMAT_PNG ? elastic::ImageFormat::png : elastic::ImageFormat::pgm;
    elastic::write_file(path, elastic::render_image(grid->grid, f));
  });
}

elastic_status elastic_denoise(const elastic_dataset* ds, const elastic_schedule* sched, const elastic_grid* x, int t,
                               int class_id, elastic_grid** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(sched, "schedule");
    require(x, "grid");
    require(out, "output");
    *out = nullptr;
    const elastic::DenoiserQuery q{x->grid, t, class_id < 0 ? std::nullopt : std::optional<int>(class_id)};
    *out = new elastic_grid{elastic::eps_star(q, ds->ds, sched->sched)};
  });
}

elastic_status elastic_sample(const elastic_dataset* ds, const elastic_schedule* sched, const elastic_run_config* cfg,
                              elastic_grid** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(sched, "schedule");
    require(cfg, "config");
    require(out, "output");
    require(cfg->class_name, "class name");
    *out = nullptr;
    const auto class_id = ds->ds.find_class(cfg->class_name);
    if (!class_id) elastic::fail(elastic::Errc::invalid_argument, std::string("unknown class '") + cfg->class_name + "'");
    const elastic::AnalyticDenoiser model(ds->ds, sched->sched);
    elastic::SampleResult r = elastic::elastic_sample(to_sampler(*cfg), *class_id, model, sched->sched);
    *out = new elastic_grid{std::move(r.image)};
  });
}

}  // extern "C"
