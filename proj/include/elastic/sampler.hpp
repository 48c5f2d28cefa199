// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "elastic/denoiser.hpp"
#include "elastic/grid.hpp"
#include "elastic/patching.hpp"
#include "elastic/rng.hpp"
#include "elastic/schedule.hpp"

namespace elastic {

/// Knobs for arbitrary-size sampling with a fixed-size model.
struct ElasticConfig {
  int target_h = 128;
  int target_w = 128;
  double guidance = 7.0;            // multiplier on the class direction
  double resample_fraction = 0.20;  // share of reference pixels replaced per iteration
  std::optional<int> resample_iters;  // nullopt: default_resample_iters()
  double rrg_initial = 200.0;       // guidance weight at the first step
  double rrg_cutoff = 0.6;          // progress at which the weight reaches zero
  double background_low = -1.0;
  double background_high = 1.0;
  std::uint64_t seed = 0;
  FusionStrategy strategy = FusionStrategy::implicit();

  bool keep_snapshots = false;   // store per-step reference predictions
  bool keep_trajectory = false;  // store the latent after every step
  bool parallel = true;

  /// Throws Errc::invalid_argument on out-of-range values.
  void validate() const;
};

struct ReferenceDims {
  int n = 0;  // rows
  int m = 0;  // cols
  bool operator==(const ReferenceDims&) const = default;
};

/// Largest aspect-preserving reference size that fits the native size. When
/// the target already fits, the reference is the target itself.
ReferenceDims choose_reference_dims(int target_h, int target_w, int native_h, int native_w);

/// Pixels substituted per resampling iteration: round(fraction * N * M).
int resample_count(double fraction, ReferenceDims ref);

/// min(8, ceil(4 * (area_ratio - 1))), further capped so every iteration can
/// draw fresh reference positions.
int default_resample_iters(int target_h, int target_w, ReferenceDims ref, double fraction);

/// Where the reference sits inside the native-size denoiser input and the
/// constant colour used around it.
struct GlobalFrame {
  ReferenceDims ref;
  int native_h = 0;
  int native_w = 0;
  Rect placement;
  std::vector<double> background;  // one value per channel
};

GlobalFrame make_global_frame(ReferenceDims ref, int native_h, int native_w, std::vector<double> background);

struct ReferenceScores {
  Grid cond;    // N x M
  Grid uncond;  // N x M
  Grid padded;  // native-size denoiser input
};

/// Embeds x_ref in a noised constant background (sqrt(ab) * A + sqrt(1-ab) * noise),
/// runs one conditional/unconditional pair and crops both back to N x M.
/// `noise` is native-size standard normal.
ReferenceScores pad_and_crop_score(const Grid& x_ref, int t, int class_id, const GlobalFrame& frame,
                                   const Grid& noise, const ScoreModel& model, const NoiseSchedule& sched);

/// Reference pixel (ref_y, ref_x) takes the value of target pixel (target_y, target_x).
struct Substitution {
  int ref_y = 0;
  int ref_x = 0;
  int target_y = 0;
  int target_x = 0;
};

struct ResamplePlan {
  std::vector<BinaryMask> masks;                        // target dims, one per iteration
  std::vector<std::vector<Substitution>> substitutions;  // one list per iteration

  int iterations() const { return int(masks.size()); }
};

/// Target pixel at the centre of the nearest-upsample footprint of a reference pixel.
int footprint_center(int ref_index, int ref_size, int target_size);

/// Draws `iterations` disjoint batches of reference positions, uniformly
/// without replacement.
ResamplePlan plan_resampling(ReferenceDims ref, int target_h, int target_w, int iterations, int per_iteration,
                             RandomStream& rng);

/// One refinement of the upsampled class direction. The reference gets the
/// substitutions of iterations 0..iter, its class direction is recomputed and
/// only the target pixels in masks[iter] take the new value.
Grid resample_step(const Grid& s_d_prev, const Grid& x_bar, const Grid& x_ref, int iter, const ResamplePlan& plan,
                   int t, int class_id, const GlobalFrame& frame, const Grid& noise, const ScoreModel& model,
                   const NoiseSchedule& sched);

/// Gradient w.r.t. x_bar of ||predict_x0(x_bar, eps_full) - upsample(x0_ref_hat)||
/// with eps_full held fixed. Zero when the two predictions agree.
Grid rrg_gradient(const Grid& x_bar, const Grid& eps_full, const Grid& x0_ref_hat, int t,
                  const NoiseSchedule& sched);

/// rrg_initial * max(0, 1 - progress / rrg_cutoff), progress = step_index / total_steps.
double rrg_weight(int step_index, int total_steps, const ElasticConfig& cfg);

struct StepRecord {
  int index = 0;
  int t = 0;
  double delta = 0.0;
  long reference_pairs = 0;
  long resample_pairs = 0;
  long patch_calls = 0;
  double seam = 0.0;       // seam_discontinuity of the unconditional score
  double rrg_norm = 0.0;   // Frobenius norm of the applied correction
  double wall_ms = 0.0;
  std::optional<Grid> reference_prediction;
};

struct SampleResult {
  Grid image;
  GlobalFrame frame;
  int resample_iters = 0;
  int resample_per_iter = 0;
  std::vector<StepRecord> trace;
  std::vector<Grid> trajectory;
};

SampleResult elastic_sample(const ElasticConfig& cfg, int class_id, const ScoreModel& model,
                            const NoiseSchedule& sched);

/// Classifier-free-guided DDIM at the model's native size, no patching.
/// Uses the same initial-noise stream as elastic_sample.
SampleResult plain_cfg_sample(double guidance, std::uint64_t seed, int class_id, const ScoreModel& model,
                              const NoiseSchedule& sched, bool keep_trajectory = false);

/// Full-size unconditional score for a grid at least native-size along
/// each axis, assembled with the given strategy.
Grid fused_unconditional(const Grid& x, int t, const FusionStrategy& strategy, const ScoreModel& model,
                         bool parallel = true);

/// Seam lines where the given strategy can introduce discontinuities.
SeamLines strategy_seams(const FusionStrategy& strategy, int height, int width, int native_h, int native_w);

}  // namespace elastic
