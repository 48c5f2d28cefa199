// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "elastic/grid.hpp"
#include "elastic/schedule.hpp"

namespace elastic {

/// Finite labelled set of native-size images with values in [-1, 1].
struct AnalyticDataset {
  int native_h = 0;
  int native_w = 0;
  int channels = 1;
  std::vector<Grid> exemplars;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  int class_count() const { return int(class_names.size()); }
  std::optional<int> find_class(const std::string& name) const;
  /// Throws unless dimensions, labels and class coverage are consistent.
  void validate() const;
};

const std::vector<std::string>& procedural_class_names();

/// Procedural classes: "gradient", "stripes", "disk", "checker". Each class
/// gets `per_class` exemplars with seeded random orientation, phase and size.
AnalyticDataset make_procedural_dataset(std::uint64_t seed, int per_class, int native_h = 64, int native_w = 64,
                                        int channels = 1);

/// Input to the denoiser: a native-size latent, a step and an optional class.
struct DenoiserQuery {
  Grid x;
  int t = 0;
  std::optional<int> class_id;  // nullopt = unconditional
};

/// Posterior over exemplars for the point-mass mixture noised to step t.
/// Ineligible exemplars (other classes when conditioned) get weight 0.
std::vector<double> posterior_weights(const DenoiserQuery& q, const AnalyticDataset& ds, const NoiseSchedule& sched);

/// Bayes-optimal noise prediction (x - sqrt(ab) * E[x0 | x]) / sqrt(1 - ab).
Grid eps_star(const DenoiserQuery& q, const AnalyticDataset& ds, const NoiseSchedule& sched);

struct EpsPair {
  Grid uncond;
  Grid cond;
};

EpsPair eps_pair(const Grid& x, int t, int class_id, const AnalyticDataset& ds, const NoiseSchedule& sched);

/// A noise predictor that only accepts grids of its native size.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual int native_height() const = 0;
  virtual int native_width() const = 0;
  virtual int channels() const = 0;
  virtual int class_count() const = 0;

  virtual Grid eps(const Grid& x, int t, std::optional<int> class_id) const = 0;
  virtual EpsPair eps_pair(const Grid& x, int t, int class_id) const {
    return {eps(x, t, std::nullopt), eps(x, t, class_id)};
  }
};

/// ScoreModel backed by eps_star over an AnalyticDataset. Thread-safe.
class AnalyticDenoiser final : public ScoreModel {
 public:
  AnalyticDenoiser(const AnalyticDataset& ds, const NoiseSchedule& sched);

  int native_height() const override { return ds_.native_h; }
  int native_width() const override { return ds_.native_w; }
  int channels() const override { return ds_.channels; }
  int class_count() const override { return ds_.class_count(); }

  Grid eps(const Grid& x, int t, std::optional<int> class_id) const override;
  EpsPair eps_pair(const Grid& x, int t, int class_id) const override;

  const AnalyticDataset& dataset() const { return ds_; }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  const AnalyticDataset& ds_;
  const NoiseSchedule& sched_;
};

/// Wraps another model and counts single calls and pair calls.
class CountingModel final : public ScoreModel {
 public:
  explicit CountingModel(const ScoreModel& inner) : inner_(inner) {}

  int native_height() const override { return inner_.native_height(); }
  int native_width() const override { return inner_.native_width(); }
  int channels() const override { return inner_.channels(); }
  int class_count() const override { return inner_.class_count(); }

  Grid eps(const Grid& x, int t, std::optional<int> class_id) const override;
  EpsPair eps_pair(const Grid& x, int t, int class_id) const override;

  long single_calls() const { return singles_.load(); }
  long pair_calls() const { return pairs_.load(); }
  void reset() {
    singles_ = 0;
    pairs_ = 0;
  }

 private:
  const ScoreModel& inner_;
  mutable std::atomic<long> singles_{0};
  mutable std::atomic<long> pairs_{0};
};

/// Index and RMS distance of the exemplar closest to g. If g is not native
/// size, each exemplar is nearest-resized to g's size first.
struct NearestExemplar {
  int index = -1;
  int label = -1;
  double rms = 0.0;
};

NearestExemplar nearest_exemplar(const Grid& g, const AnalyticDataset& ds);

}  // namespace elastic
