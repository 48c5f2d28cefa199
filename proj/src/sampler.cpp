// SPDX-License-Identifier: Apache-2.0
#include "elastic/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "elastic/error.hpp"

namespace elastic {

void ElasticConfig::validate() const {
  auto bad = [](const std::string& what) { fail(Errc::invalid_argument, what); };
  if (target_h < 1 || target_w < 1) bad("target dimensions must be positive");
  if (!(guidance >= 0.0) || !std::isfinite(guidance)) bad("guidance must be a finite non-negative number");
  if (!(resample_fraction >= 0.0 && resample_fraction <= 1.0)) bad("resample fraction must lie in [0, 1]");
  if (resample_iters && *resample_iters < 0) bad("resample iterations must be non-negative");
  if (!(rrg_initial >= 0.0) || !std::isfinite(rrg_initial)) bad("rrg weight must be a finite non-negative number");
  if (!(rrg_cutoff > 0.0 && rrg_cutoff <= 1.0)) bad("rrg cutoff must lie in (0, 1]");
  if (!(background_low <= background_high) || !std::isfinite(background_low) || !std::isfinite(background_high)) {
    bad("background range must be finite with low <= high");
  }
  if (strategy.kind == FusionStrategy::Kind::explicit_overlap && strategy.stride < 1) {
    bad("explicit stride must be positive");
  }
}

ReferenceDims choose_reference_dims(int target_h, int target_w, int native_h, int native_w) {
  if (target_h < 1 || target_w < 1 || native_h < 1 || native_w < 1) {
    fail(Errc::invalid_argument, "reference dims need positive sizes");
  }
  if (target_h <= native_h && target_w <= native_w) return {target_h, target_w};
  // Integer arithmetic keeps ratios such as 4:3 exact.
  const std::int64_t m = std::clamp<std::int64_t>(std::int64_t(native_h) * target_w / target_h, 1, native_w);
  const std::int64_t n = std::clamp<std::int64_t>(std::int64_t(target_h) * m / target_w, 1, native_h);
  return {int(n), int(m)};
}

int resample_count(double fraction, ReferenceDims ref) {
  return int(std::lround(fraction * double(ref.n) * double(ref.m)));
}

int default_resample_iters(int target_h, int target_w, ReferenceDims ref, double fraction) {
  const std::int64_t target_area = std::int64_t(target_h) * target_w;
  const std::int64_t ref_area = std::int64_t(ref.n) * ref.m;
  if (target_area <= ref_area) return 0;
  const std::int64_t growth = 4 * (target_area - ref_area);
  int iters = int(std::min<std::int64_t>(8, (growth + ref_area - 1) / ref_area));
  const int per_iter = resample_count(fraction, ref);
  if (per_iter > 0) iters = std::min<int>(iters, int(ref_area / per_iter));
  return iters;
}

GlobalFrame make_global_frame(ReferenceDims ref, int native_h, int native_w, std::vector<double> background) {
  if (ref.n < 1 || ref.m < 1 || ref.n > native_h || ref.m > native_w) {
    fail(Errc::invalid_argument, "reference " + std::to_string(ref.n) + "x" + std::to_string(ref.m) +
                                     " does not fit native size");
  }
  if (background.empty()) fail(Errc::invalid_argument, "background needs one value per channel");
  GlobalFrame frame;
  frame.ref = ref;
  frame.native_h = native_h;
  frame.native_w = native_w;
  frame.placement = {(native_h - ref.n) / 2, (native_w - ref.m) / 2, ref.n, ref.m};
  frame.background = std::move(background);
  return frame;
}

ReferenceScores pad_and_crop_score(const Grid& x_ref, int t, int class_id, const GlobalFrame& frame,
                                   const Grid& noise, const ScoreModel& model, const NoiseSchedule& sched) {
  if (x_ref.height() != frame.ref.n || x_ref.width() != frame.ref.m) {
    fail(Errc::shape_mismatch, "reference latent " + x_ref.shape_string() + " does not match frame");
  }
  if (int(frame.background.size()) != x_ref.channels()) {
    fail(Errc::shape_mismatch, "background has wrong channel count");
  }
  Grid colour(frame.native_h, frame.native_w, x_ref.channels());
  for (int y = 0; y < colour.height(); ++y) {
    for (int x = 0; x < colour.width(); ++x) {
      for (int c = 0; c < colour.channels(); ++c) colour.at(y, x, c) = frame.background[c];
    }
  }
  const Grid fill = forward_noise(colour, t, noise, sched);
  PadResult padded = pad_center(x_ref, frame.native_h, frame.native_w, fill);
  EpsPair pair = model.eps_pair(padded.grid, t, class_id);
  return {crop(pair.cond, padded.placement), crop(pair.uncond, padded.placement), std::move(padded.grid)};
}

int footprint_center(int ref_index, int ref_size, int target_size) {
  // Target rows y with floor(y * ref_size / target_size) == ref_index.
  auto first = [&](int i) { return int((std::int64_t(i) * target_size + ref_size - 1) / ref_size); };
  const int begin = first(ref_index);
  const int end = first(ref_index + 1);
  return begin + (end - begin) / 2;
}

ResamplePlan plan_resampling(ReferenceDims ref, int target_h, int target_w, int iterations, int per_iteration,
                             RandomStream& rng) {
  const int area = ref.n * ref.m;
  if (iterations < 0 || per_iteration < 0) fail(Errc::invalid_argument, "negative resampling plan size");
  if (std::int64_t(iterations) * per_iteration > area) {
    fail(Errc::invalid_argument, std::to_string(iterations) + " resampling iterations of " +
                                     std::to_string(per_iteration) + " pixels exceed the " + std::to_string(area) +
                                     " reference positions");
  }
  if (ref.n > target_h || ref.m > target_w) fail(Errc::invalid_argument, "reference larger than target");

  std::vector<int> order(area);
  std::iota(order.begin(), order.end(), 0);
  const int draws = iterations * per_iteration;
  for (int i = 0; i < draws; ++i) {
    const int j = i + int(rng.below(std::uint64_t(area - i)));
    std::swap(order[i], order[j]);
  }

  ResamplePlan plan;
  for (int r = 0; r < iterations; ++r) {
    BinaryMask mask(target_h, target_w);
    std::vector<Substitution> subs;
    for (int k = 0; k < per_iteration; ++k) {
      const int pos = order[r * per_iteration + k];
      Substitution s;
      s.ref_y = pos / ref.m;
      s.ref_x = pos % ref.m;
      s.target_y = footprint_center(s.ref_y, ref.n, target_h);
      s.target_x = footprint_center(s.ref_x, ref.m, target_w);
      mask.set(s.target_y, s.target_x);
      subs.push_back(s);
    }
    plan.masks.push_back(std::move(mask));
    plan.substitutions.push_back(std::move(subs));
  }
  return plan;
}

Grid resample_step(const Grid& s_d_prev, const Grid& x_bar, const Grid& x_ref, int iter, const ResamplePlan& plan,
                   int t, int class_id, const GlobalFrame& frame, const Grid& noise, const ScoreModel& model,
                   const NoiseSchedule& sched) {
  if (iter < 0 || iter >= plan.iterations()) {
    fail(Errc::out_of_range, "resampling iteration " + std::to_string(iter) + " outside plan");
  }
  require_same_shape(s_d_prev, x_bar, "resample_step");
  if (plan.substitutions[iter].empty()) return s_d_prev;

  Grid refined = x_ref;
  for (int r = 0; r <= iter; ++r) {
    for (const Substitution& s : plan.substitutions[r]) {
      for (int c = 0; c < refined.channels(); ++c) refined.at(s.ref_y, s.ref_x, c) = x_bar.at(s.target_y, s.target_x, c);
    }
  }
  const ReferenceScores scores = pad_and_crop_score(refined, t, class_id, frame, noise, model, sched);
  const Grid direction = upsample_nearest(scores.cond - scores.uncond, x_bar.height(), x_bar.width());
  return blend_masked(s_d_prev, direction, plan.masks[iter]);
}

Grid rrg_gradient(const Grid& x_bar, const Grid& eps_full, const Grid& x0_ref_hat, int t,
                  const NoiseSchedule& sched) {
  const Grid x0 = predict_x0(x_bar, eps_full, t, sched);
  const Grid reference = upsample_nearest(x0_ref_hat, x_bar.height(), x_bar.width());
  Grid diff = x0 - reference;
  const double norm = frobenius_norm(diff);
  if (norm == 0.0) return Grid(x_bar.height(), x_bar.width(), x_bar.channels());
  return (1.0 / (std::sqrt(sched.alpha_bar(t)) * norm)) * diff;
}

double rrg_weight(int step_index, int total_steps, const ElasticConfig& cfg) {
  if (total_steps < 1 || step_index < 0 || step_index >= total_steps) {
    fail(Errc::out_of_range, "step index " + std::to_string(step_index) + " outside [0, " +
                                 std::to_string(total_steps) + ")");
  }
  // delta0 * (1 - (i / total) / cutoff), rearranged so integer-valued weights come out exact.
  const double span = cfg.rrg_cutoff * double(total_steps);
  if (double(step_index) >= span) return 0.0;
  return cfg.rrg_initial * (span - double(step_index)) / span;
}

Grid fused_unconditional(const Grid& x, int t, const FusionStrategy& strategy, const ScoreModel& model,
                         bool parallel) {
  const NativeScore uncond = [&model](const Grid& window, int step) { return model.eps(window, step, std::nullopt); };
  const int nh = model.native_height(), nw = model.native_width();
  switch (strategy.kind) {
    case FusionStrategy::Kind::implicit_context:
      return score_implicit(x, t, plan_implicit(x.height(), x.width(), nh, nw), uncond, parallel);
    case FusionStrategy::Kind::explicit_overlap:
      return score_explicit(x, t, plan_explicit(x.height(), x.width(), nh, nw, strategy.stride), uncond, parallel);
    case FusionStrategy::Kind::no_overlap:
      return score_explicit(x, t, plan_no_overlap(x.height(), x.width(), nh, nw), uncond, parallel);
  }
  fail(Errc::invalid_argument, "unknown fusion strategy");
}

SeamLines strategy_seams(const FusionStrategy& strategy, int height, int width, int native_h, int native_w) {
  switch (strategy.kind) {
    case FusionStrategy::Kind::implicit_context:
      return seams_of(plan_implicit(height, width, native_h, native_w));
    case FusionStrategy::Kind::explicit_overlap:
      return seams_of(plan_explicit(height, width, native_h, native_w, strategy.stride), height, width);
    case FusionStrategy::Kind::no_overlap:
      return seams_of(plan_no_overlap(height, width, native_h, native_w), height, width);
  }
  return {};
}

namespace {

Grid constant_grid(int h, int w, const std::vector<double>& colour) {
  Grid g(h, w, int(colour.size()));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < g.channels(); ++c) g.at(y, x, c) = colour[c];
    }
  }
  return g;
}

void check_model_class(const ScoreModel& model, int class_id) {
  if (class_id < 0 || class_id >= model.class_count()) {
    fail(Errc::invalid_argument, "unknown class id " + std::to_string(class_id));
  }
}

}  // namespace

SampleResult elastic_sample(const ElasticConfig& cfg, int class_id, const ScoreModel& model,
                            const NoiseSchedule& sched) {
  cfg.validate();
  check_model_class(model, class_id);
  const int nh = model.native_height(), nw = model.native_width(), channels = model.channels();
  const int th = cfg.target_h, tw = cfg.target_w;

  const ReferenceDims ref = choose_reference_dims(th, tw, nh, nw);
  const int per_iter = resample_count(cfg.resample_fraction, ref);
  const int iters = cfg.resample_iters.value_or(default_resample_iters(th, tw, ref, cfg.resample_fraction));
  if (std::int64_t(iters) * per_iter > std::int64_t(ref.n) * ref.m) {
    fail(Errc::invalid_argument, std::to_string(iters) + " resampling iterations at fraction " +
                                     std::to_string(cfg.resample_fraction) + " exceed the reference area");
  }

  RandomStream init_rng(cfg.seed, "init");
  RandomStream background_rng(cfg.seed, "background");
  RandomStream padding_rng(cfg.seed, "padding");
  RandomStream context_rng(cfg.seed, "context");
  RandomStream resample_rng(cfg.seed, "resample");

  std::vector<double> colour(channels);
  for (double& c : colour) c = background_rng.uniform(cfg.background_low, cfg.background_high);

  SampleResult result;
  result.frame = make_global_frame(ref, nh, nw, colour);
  result.resample_iters = iters;
  result.resample_per_iter = per_iter;

  // The unconditional score is computed on a canvas at least native-size per
  // axis; smaller targets sit centred in a noised background.
  const int canvas_h = std::max(th, nh), canvas_w = std::max(tw, nw);
  const bool needs_canvas = canvas_h != th || canvas_w != tw;
  const SeamLines seams = strategy_seams(cfg.strategy, canvas_h, canvas_w, nh, nw);
  const Grid canvas_colour = needs_canvas ? constant_grid(canvas_h, canvas_w, colour) : Grid();

  CountingModel counter(model);
  const auto& steps = sched.ddim_steps();
  const int total = int(steps.size());

  Grid x = init_rng.normal_grid(th, tw, channels);
  for (int i = 0; i < total; ++i) {
    const auto started = std::chrono::steady_clock::now();
    const int t = steps[i];
    const int t_prev = sched.previous_step(t);
    StepRecord rec;
    rec.index = i;
    rec.t = t;

    const Grid x_ref = downsample_nearest(x, ref.n, ref.m);
    const Grid noise = padding_rng.normal_grid(nh, nw, channels);

    counter.reset();
    const ReferenceScores scores = pad_and_crop_score(x_ref, t, class_id, result.frame, noise, counter, sched);
    const GuidedScore reference = cfg_combine(scores.uncond, scores.cond, GuidanceConfig{cfg.guidance});
    rec.reference_pairs = counter.pair_calls();

    Grid s_d = upsample_nearest(reference.class_direction, th, tw);
    counter.reset();
    if (iters > 0 && per_iter > 0) {
      const ResamplePlan plan = plan_resampling(ref, th, tw, iters, per_iter, resample_rng);
      for (int r = 0; r < iters; ++r) {
        s_d = resample_step(s_d, x, x_ref, r, plan, t, class_id, result.frame, noise, counter, sched);
      }
    }
    rec.resample_pairs = counter.pair_calls();

    counter.reset();
    Grid s_u;
    if (needs_canvas) {
      const Grid fill = forward_noise(canvas_colour, t, context_rng.normal_grid(canvas_h, canvas_w, channels), sched);
      const PadResult canvas = pad_center(x, canvas_h, canvas_w, fill);
      const Grid full = fused_unconditional(canvas.grid, t, cfg.strategy, counter, cfg.parallel);
      rec.seam = seam_discontinuity(full, seams);
      s_u = crop(full, canvas.placement);
    } else {
      s_u = fused_unconditional(x, t, cfg.strategy, counter, cfg.parallel);
      rec.seam = seam_discontinuity(s_u, seams);
    }
    rec.patch_calls = counter.single_calls();

    const Grid eps_full = add_scaled(s_u, cfg.guidance, s_d);
    Grid next = ddim_step(x, eps_full, t, t_prev, sched);

    rec.delta = rrg_weight(i, total, cfg);
    const Grid x0_ref = predict_x0(x_ref, reference.eps_hat, t, sched);
    if (rec.delta > 0.0) {
      const Grid grad = rrg_gradient(x, eps_full, x0_ref, t, sched);
      rec.rrg_norm = rec.delta * frobenius_norm(grad);
      next = add_scaled(next, -rec.delta, grad);
    }
    if (cfg.keep_snapshots) rec.reference_prediction = x0_ref;
    if (!next.all_finite()) fail(Errc::out_of_range, "non-finite latent at step " + std::to_string(t));

    x = std::move(next);
    if (cfg.keep_trajectory) result.trajectory.push_back(x);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    result.trace.push_back(std::move(rec));
  }
  result.image = std::move(x);
  return result;
}

SampleResult plain_cfg_sample(double guidance, std::uint64_t seed, int class_id, const ScoreModel& model,
                              const NoiseSchedule& sched, bool keep_trajectory) {
  check_model_class(model, class_id);
  RandomStream init_rng(seed, "init");
  Grid x = init_rng.normal_grid(model.native_height(), model.native_width(), model.channels());
  SampleResult result;
  for (int t : sched.ddim_steps()) {
    const EpsPair pair = model.eps_pair(x, t, class_id);
    const GuidedScore guided = cfg_combine(pair.uncond, pair.cond, GuidanceConfig{guidance});
    x = ddim_step(x, guided.eps_hat, t, sched.previous_step(t), sched);
    if (keep_trajectory) result.trajectory.push_back(x);
  }
  result.image = std::move(x);
  return result;
}

}  // namespace elastic
