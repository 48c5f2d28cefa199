// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "elastic/error.hpp"
#include "elastic/sampler.hpp"
#include "oracles.hpp"

using namespace elastic;

namespace {

/// cond(x) = x, uncond(x) = 0 at a fixed native size.
class StubModel final : public ScoreModel {
 public:
  StubModel(int h, int w) : h_(h), w_(w) {}
  int native_height() const override { return h_; }
  int native_width() const override { return w_; }
  int channels() const override { return 1; }
  int class_count() const override { return 1; }
  Grid eps(const Grid& x, int, std::optional<int> class_id) const override {
    if (x.height() != h_ || x.width() != w_) fail(Errc::shape_mismatch, "stub size");
    return class_id ? x : Grid(h_, w_, 1, 0.0);
  }

 private:
  int h_, w_;
};

struct Fixture {
  AnalyticDataset ds = make_procedural_dataset(0, 2, 16, 16);
  NoiseSchedule sched = make_linear_schedule(1000, 1e-4, 2e-2, 20);
  AnalyticDenoiser model{ds, sched};
};

ElasticConfig config(int h, int w) {
  ElasticConfig cfg;
  cfg.target_h = h;
  cfg.target_w = w;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("reference dims") {
  CHECK(choose_reference_dims(128, 128, 64, 64) == ReferenceDims{64, 64});
  CHECK(choose_reference_dims(128, 64, 64, 64) == ReferenceDims{64, 32});
  CHECK(choose_reference_dims(64, 128, 64, 64) == ReferenceDims{32, 64});
  CHECK(choose_reference_dims(32, 32, 64, 64) == ReferenceDims{32, 32});
  CHECK(choose_reference_dims(64, 64, 64, 64) == ReferenceDims{64, 64});
  CHECK_THROWS_AS(choose_reference_dims(0, 64, 64, 64), Error);
}

TEST_CASE("reference dims follow the floor rule when no exact ratio fits") {
  // r = 0.8: M = min(64, floor(64 / 0.8)) = 64, N = floor(0.8 * 64) = 51
  CHECK(choose_reference_dims(80, 100, 64, 64) == ReferenceDims{51, 64});
  // r = 10/7: M = floor(64 * 7 / 10) = 44, N = floor(10 * 44 / 7) = 62
  CHECK(choose_reference_dims(100, 70, 64, 64) == ReferenceDims{62, 44});
}

TEST_CASE("reference dims agree with enumeration for exact ratios") {
  for (auto [th, tw] : {std::pair{128, 64}, std::pair{64, 128}, std::pair{96, 128}, std::pair{128, 96},
                        std::pair{120, 90}}) {
    const auto best = oracle::best_reference(th, tw, 64, 64);
    const ReferenceDims got = choose_reference_dims(th, tw, 64, 64);
    CAPTURE(th);
    CAPTURE(tw);
    if (best.first > 0) {
      CHECK(got.n == best.first);
      CHECK(got.m == best.second);
    }
    CHECK(got.n <= 64);
    CHECK(got.m <= 64);
  }
}

TEST_CASE("resampling budget") {
  CHECK(resample_count(0.2, {64, 64}) == 819);
  CHECK(resample_count(0.0, {64, 64}) == 0);
  CHECK(resample_count(0.2, {2, 2}) == 1);
  CHECK(default_resample_iters(64, 64, {64, 64}, 0.2) == 0);
  CHECK(default_resample_iters(128, 128, {64, 64}, 0.2) == 5);
  CHECK(default_resample_iters(128, 128, {64, 64}, 0.1) == 8);
  CHECK(default_resample_iters(80, 64, {64, 64}, 0.1) == 1);
  CHECK(default_resample_iters(96, 64, {64, 64}, 0.1) == 2);
}

TEST_CASE("global frame placement") {
  const GlobalFrame f = make_global_frame({64, 32}, 64, 64, {0.5});
  CHECK(f.placement == Rect{0, 16, 64, 32});
  CHECK_THROWS_AS(make_global_frame({65, 32}, 64, 64, {0.5}), Error);
  CHECK_THROWS_AS(make_global_frame({8, 8}, 64, 64, {}), Error);
}

TEST_CASE("pad_and_crop_score") {
  Fixture fx;
  RandomStream rng(1, "test");
  const Grid x_full = rng.normal_grid(16, 16, 1);
  const Grid noise = rng.normal_grid(16, 16, 1);

  const GlobalFrame full = make_global_frame({16, 16}, 16, 16, {0.3});
  const ReferenceScores same = pad_and_crop_score(x_full, 500, 1, full, noise, fx.model, fx.sched);
  const EpsPair direct = eps_pair(x_full, 500, 1, fx.ds, fx.sched);
  CHECK(same.cond == direct.cond);
  CHECK(same.uncond == direct.uncond);
  CHECK(same.padded == x_full);

  const GlobalFrame frame = make_global_frame({8, 16}, 16, 16, {0.3});
  const Grid x_ref = rng.normal_grid(8, 16, 1);
  const ReferenceScores a = pad_and_crop_score(x_ref, 500, 1, frame, noise, fx.model, fx.sched);
  const ReferenceScores b = pad_and_crop_score(x_ref, 500, 1, frame, noise, fx.model, fx.sched);
  CHECK(a.cond == b.cond);
  CHECK(a.uncond == b.uncond);
  CHECK(a.cond.height() == 8);
  CHECK(crop(a.padded, frame.placement) == x_ref);
  const EpsPair padded = eps_pair(a.padded, 500, 1, fx.ds, fx.sched);
  CHECK(crop(padded.cond, frame.placement) == a.cond);

  const ReferenceScores quiet = pad_and_crop_score(x_ref, 1, 1, frame, Grid(16, 16, 1, 0.0), fx.model, fx.sched);
  const double edge = std::sqrt(fx.sched.alpha_bar(1)) * 0.3;
  CHECK(quiet.padded.at(0, 0) == edge);
  CHECK(quiet.padded.at(15, 15) == edge);
  CHECK(quiet.padded.at(0, 0) == doctest::Approx(0.3).epsilon(1e-4));
  CHECK_THROWS_AS(pad_and_crop_score(x_full, 500, 1, frame, noise, fx.model, fx.sched), Error);
}

TEST_CASE("footprint centres") {
  CHECK(footprint_center(0, 2, 4) == 1);
  CHECK(footprint_center(1, 2, 4) == 3);
  CHECK(footprint_center(0, 64, 128) == 1);
  for (int ref = 1; ref <= 9; ++ref)
    for (int target = ref; target <= 3 * ref + 2; ++target)
      for (int i = 0; i < ref; ++i) CHECK(int(std::int64_t(footprint_center(i, ref, target)) * ref / target) == i);
}

TEST_CASE("resampling plan bookkeeping") {
  RandomStream rng(4, "resample");
  const ReferenceDims ref{64, 64};
  const ResamplePlan plan = plan_resampling(ref, 128, 128, 5, 819, rng);
  REQUIRE(plan.iterations() == 5);
  std::set<std::pair<int, int>> used;
  for (int r = 0; r < 5; ++r) {
    CHECK(plan.masks[r].count() == 819);
    CHECK(plan.substitutions[r].size() == 819);
    for (const Substitution& s : plan.substitutions[r]) {
      CHECK(plan.masks[r].test(s.target_y, s.target_x));
      CHECK(used.insert({s.ref_y, s.ref_x}).second);
    }
    for (int q = 0; q < r; ++q) CHECK_FALSE(plan.masks[r].intersects(plan.masks[q]));
  }
  CHECK(double(used.size()) / (64 * 64) == 5.0 * 819 / 4096);

  RandomStream again(4, "resample");
  const ResamplePlan twin = plan_resampling(ref, 128, 128, 5, 819, again);
  CHECK(twin.substitutions[4].back().ref_x == plan.substitutions[4].back().ref_x);
  CHECK_THROWS_AS(plan_resampling(ref, 128, 128, 6, 819, again), Error);
  CHECK(plan_resampling({4, 4}, 8, 8, 16, 1, again).iterations() == 16);
}

TEST_CASE("resample_step hand trace") {
  const StubModel stub(2, 2);
  const NoiseSchedule sched = make_linear_schedule(10, 1e-3, 2e-2, 10);
  const GlobalFrame frame = make_global_frame({2, 2}, 2, 2, {0.0});
  const Grid x_ref(2, 2, 1, {1, 2, 3, 4});
  Grid x_bar = upsample_nearest(x_ref, 4, 4);
  x_bar.at(1, 1) = 9.0;
  const Grid s_d = upsample_nearest(x_ref, 4, 4);

  ResamplePlan plan;
  BinaryMask mask(4, 4);
  mask.set(1, 1);
  plan.masks = {mask};
  plan.substitutions = {{Substitution{0, 0, 1, 1}}};
  const Grid out = resample_step(s_d, x_bar, x_ref, 0, plan, 5, 0, frame, Grid(2, 2, 1, 0.0), stub, sched);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(out.at(y, x) == (y == 1 && x == 1 ? 9.0 : s_d.at(y, x)));
  CHECK_THROWS_AS(resample_step(s_d, x_bar, x_ref, 1, plan, 5, 0, frame, Grid(2, 2, 1), stub, sched), Error);
}

TEST_CASE("resample_step no-ops") {
  Fixture fx;
  RandomStream rng(2, "test");
  const GlobalFrame frame = make_global_frame({8, 8}, 16, 16, {-0.2});
  const Grid x_ref = rng.normal_grid(8, 8, 1), noise = rng.normal_grid(16, 16, 1);
  const ReferenceScores base = pad_and_crop_score(x_ref, 400, 2, frame, noise, fx.model, fx.sched);
  const Grid s_d = upsample_nearest(base.cond - base.uncond, 16, 16);
  const Grid x_bar = upsample_nearest(x_ref, 16, 16);

  RandomStream prng(2, "resample");
  const ResamplePlan plan = plan_resampling({8, 8}, 16, 16, 3, 13, prng);
  for (int r = 0; r < 3; ++r) {
    CHECK(resample_step(s_d, x_bar, x_ref, r, plan, 400, 2, frame, noise, fx.model, fx.sched) == s_d);
  }
  const ResamplePlan empty = plan_resampling({8, 8}, 16, 16, 3, 0, prng);
  const Grid other = rng.normal_grid(16, 16, 1);
  CHECK(resample_step(s_d, other, x_ref, 2, empty, 400, 2, frame, noise, fx.model, fx.sched) == s_d);
}

TEST_CASE("rrg gradient") {
  const NoiseSchedule quarter({0.75}, 1);  // alpha_bar(1) = 0.25
  const Grid g = rrg_gradient(Grid(1, 1, 1, 1.5), Grid(1, 1, 1, 0.0), Grid(1, 1, 1, 0.0), 1, quarter);
  CHECK(g.at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));

  const NoiseSchedule sched = make_linear_schedule(1000, 1e-4, 2e-2, 50);
  RandomStream rng(3, "test");
  const Grid ref = rng.normal_grid(4, 4, 1), eps = rng.normal_grid(8, 8, 1);
  const int t = 600;
  const double s = std::sqrt(sched.alpha_bar(t));
  // x_bar whose x0 prediction equals the upsampled reference exactly: 0.5 * ref / sqrt(0.25)
  const Grid x_at = 0.5 * upsample_nearest(ref, 8, 8);
  CHECK(frobenius_norm(rrg_gradient(x_at, Grid(8, 8, 1), ref, 1, quarter)) == 0.0);

  const Grid x = rng.normal_grid(8, 8, 1);
  const Grid grad = rrg_gradient(x, eps, ref, t, sched);
  CHECK(frobenius_norm(grad) == doctest::Approx(1.0 / s).epsilon(1e-12));
}

TEST_CASE("rrg weight schedule") {
  const ElasticConfig cfg;
  CHECK(rrg_weight(0, 50, cfg) == 200.0);
  CHECK(rrg_weight(15, 50, cfg) == doctest::Approx(100.0).epsilon(1e-12));
  for (int i = 30; i < 50; ++i) CHECK(rrg_weight(i, 50, cfg) == 0.0);
  for (int i = 1; i < 30; ++i) CHECK(rrg_weight(i, 50, cfg) < rrg_weight(i - 1, 50, cfg));
  CHECK_THROWS_AS(rrg_weight(50, 50, cfg), Error);
}

TEST_CASE("config validation") {
  ElasticConfig cfg;
  cfg.validate();
  cfg.resample_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.rrg_cutoff = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.background_low = 1.0;
  cfg.background_high = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.resample_iters = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("native-size elastic sampling equals plain guided DDIM") {
  Fixture fx;
  ElasticConfig cfg = config(16, 16);
  cfg.resample_iters = 0;
  cfg.rrg_initial = 0.0;
  cfg.keep_trajectory = true;
  const SampleResult elastic = elastic_sample(cfg, 1, fx.model, fx.sched);
  const SampleResult plain = plain_cfg_sample(7.0, cfg.seed, 1, fx.model, fx.sched, true);
  REQUIRE(elastic.trajectory.size() == plain.trajectory.size());
  for (std::size_t i = 0; i < plain.trajectory.size(); ++i) CHECK(elastic.trajectory[i] == plain.trajectory[i]);
  CHECK(elastic.image == plain.image);
}

TEST_CASE("per-step call counts") {
  Fixture fx;
  ElasticConfig cfg = config(32, 32);
  cfg.resample_iters = 3;
  const SampleResult r = elastic_sample(cfg, 0, fx.model, fx.sched);
  CHECK(r.frame.ref == ReferenceDims{16, 16});
  CHECK(r.resample_per_iter == 51);
  for (const StepRecord& rec : r.trace) {
    CHECK(rec.reference_pairs == 1);
    CHECK(rec.resample_pairs == 3);
    CHECK(rec.patch_calls == 9);
  }
  cfg.strategy = FusionStrategy::explicit_overlap(2);
  CHECK(elastic_sample(cfg, 0, fx.model, fx.sched).trace[0].patch_calls == 81);
}

TEST_CASE("elastic sampling is deterministic") {
  Fixture fx;
  ElasticConfig cfg = config(24, 20);
  cfg.keep_snapshots = true;
  const SampleResult a = elastic_sample(cfg, 2, fx.model, fx.sched);
  cfg.parallel = false;
  const SampleResult b = elastic_sample(cfg, 2, fx.model, fx.sched);
  CHECK(a.image == b.image);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].seam == b.trace[i].seam);
    CHECK(a.trace[i].rrg_norm == b.trace[i].rrg_norm);
    CHECK(*a.trace[i].reference_prediction == *b.trace[i].reference_prediction);
  }
  cfg.seed = 4;
  CHECK_FALSE(elastic_sample(cfg, 2, fx.model, fx.sched).image == a.image);
}

TEST_CASE("trace fields follow the configuration") {
  Fixture fx;
  ElasticConfig cfg = config(32, 16);
  const SampleResult r = elastic_sample(cfg, 0, fx.model, fx.sched);
  CHECK(r.frame.ref == ReferenceDims{16, 8});
  REQUIRE(r.trace.size() == 20);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].t == fx.sched.ddim_steps()[i]);
    CHECK(r.trace[i].delta == rrg_weight(int(i), 20, cfg));
    if (r.trace[i].delta == 0.0) CHECK(r.trace[i].rrg_norm == 0.0);
  }
  CHECK(r.trace[0].rrg_norm == doctest::Approx(200.0 / std::sqrt(fx.sched.alpha_bar(1000))));
  CHECK(r.image.height() == 32);
  CHECK(r.image.width() == 16);
  CHECK(r.image.all_finite());
}

TEST_CASE("single-class data makes resampling a no-op") {
  AnalyticDataset ds = make_procedural_dataset(0, 2, 16, 16);
  std::fill(ds.labels.begin(), ds.labels.end(), 0);
  ds.class_names = {"all"};
  const NoiseSchedule sched = make_linear_schedule(1000, 1e-4, 2e-2, 10);
  const AnalyticDenoiser model(ds, sched);
  ElasticConfig cfg = config(32, 32);
  cfg.resample_iters = 0;
  const Grid none = elastic_sample(cfg, 0, model, sched).image;
  cfg.resample_iters = 4;
  CHECK(elastic_sample(cfg, 0, model, sched).image == none);
}

TEST_CASE("single exemplar per class converges to it at native size") {
  AnalyticDataset ds = make_procedural_dataset(2, 1, 16, 16);
  const NoiseSchedule sched = make_linear_schedule(1000, 1e-4, 2e-2, 50);
  const AnalyticDenoiser model(ds, sched);
  for (int cls = 0; cls < 4; ++cls) {
    ElasticConfig cfg = config(16, 16);
    const SampleResult r = elastic_sample(cfg, cls, model, sched);
    CHECK(rms_distance(r.image, ds.exemplars[cls]) < 1e-3);
  }
}

TEST_CASE("targets smaller than native use a padded canvas") {
  Fixture fx;
  const SampleResult r = elastic_sample(config(8, 12), 3, fx.model, fx.sched);
  CHECK(r.image.height() == 8);
  CHECK(r.image.width() == 12);
  CHECK(r.frame.ref == ReferenceDims{8, 12});
  CHECK(r.trace[0].patch_calls == 1);
  CHECK(r.image.all_finite());
}

TEST_CASE("sampler rejects bad inputs") {
  Fixture fx;
  CHECK_THROWS_AS(elastic_sample(config(32, 32), 9, fx.model, fx.sched), Error);
  ElasticConfig cfg = config(32, 32);
  cfg.resample_iters = 6;
  cfg.resample_fraction = 0.2;
  CHECK_THROWS_AS(elastic_sample(cfg, 0, fx.model, fx.sched), Error);
  cfg.resample_fraction = 0.0;
  CHECK_NOTHROW(elastic_sample(cfg, 0, fx.model, fx.sched));
}

TEST_CASE("fused unconditional scores") {
  Fixture fx;
  RandomStream rng(6, "test");
  const Grid x = rng.normal_grid(32, 32, 1);
  const Grid none = fused_unconditional(x, 300, FusionStrategy::none(), fx.model);
  CHECK(fused_unconditional(x, 300, FusionStrategy::explicit_overlap(16), fx.model) == none);
  const Grid native = rng.normal_grid(16, 16, 1);
  const Grid one = fx.model.eps(native, 300, std::nullopt);
  for (auto s : {FusionStrategy::none(), FusionStrategy::implicit(), FusionStrategy::explicit_overlap(4)}) {
    CHECK(fused_unconditional(native, 300, s, fx.model) == one);
  }
  CHECK(strategy_seams(FusionStrategy::implicit(), 16, 16, 16, 16).rows.empty());
}
