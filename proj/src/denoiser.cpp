// SPDX-License-Identifier: Apache-2.0
#include "elastic/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "elastic/error.hpp"
#include "elastic/rng.hpp"

namespace elastic {

std::optional<int> AnalyticDataset::find_class(const std::string& name) const {
  for (int i = 0; i < class_count(); ++i) {
    if (class_names[i] == name) return i;
  }
  return std::nullopt;
}

void AnalyticDataset::validate() const {
  if (native_h < 1 || native_w < 1 || channels < 1) fail(Errc::invalid_argument, "dataset dimensions must be positive");
  if (exemplars.empty()) fail(Errc::invalid_argument, "dataset has no exemplars");
  if (exemplars.size() != labels.size()) fail(Errc::invalid_argument, "one label per exemplar required");
  std::vector<int> per_class(class_names.size(), 0);
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const Grid& e = exemplars[i];
    if (e.height() != native_h || e.width() != native_w || e.channels() != channels) {
      fail(Errc::shape_mismatch, "exemplar " + std::to_string(i) + " is " + e.shape_string());
    }
    if (labels[i] < 0 || labels[i] >= class_count()) {
      fail(Errc::invalid_argument, "exemplar " + std::to_string(i) + " has unknown label");
    }
    ++per_class[labels[i]];
  }
  for (int c = 0; c < class_count(); ++c) {
    if (per_class[c] == 0) fail(Errc::invalid_argument, "class '" + class_names[c] + "' has no exemplars");
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Pixel centre in [-1, 1].
double unit_coord(int i, int n) { return (2.0 * (i + 0.5)) / n - 1.0; }

template <class F>
Grid render(int h, int w, int channels, F&& f) {
  Grid g(h, w, channels);
  for (int y = 0; y < h; ++y) {
    const double v = unit_coord(y, h);
    for (int x = 0; x < w; ++x) {
      const double u = unit_coord(x, w);
      const double value = std::clamp(f(u, v), -1.0, 1.0);
      for (int c = 0; c < channels; ++c) g.at(y, x, c) = value;
    }
  }
  return g;
}

}  // namespace

const std::vector<std::string>& procedural_class_names() {
  static const std::vector<std::string> names = {"gradient", "stripes", "disk", "checker"};
  return names;
}

AnalyticDataset make_procedural_dataset(std::uint64_t seed, int per_class, int native_h, int native_w, int channels) {
  if (per_class < 1) fail(Errc::invalid_argument, "per_class must be at least 1");
  AnalyticDataset ds;
  ds.native_h = native_h;
  ds.native_w = native_w;
  ds.channels = channels;
  ds.class_names = procedural_class_names();

  RandomStream rng(seed, "dataset");
  for (int k = 0; k < per_class; ++k) {
    // gradient: linear ramp at a random angle
    {
      const double angle = rng.uniform(0.0, kTwoPi);
      const double slope = rng.uniform(0.7, 1.0);
      const double cu = std::cos(angle), cv = std::sin(angle);
      ds.exemplars.push_back(render(native_h, native_w, channels, [&](double u, double v) {
        return slope * (cu * u + cv * v);
      }));
      ds.labels.push_back(0);
    }
    // stripes: horizontal sinusoid with random frequency and phase
    {
      const double cycles = rng.uniform(1.5, 3.5);
      const double phase = rng.uniform(0.0, kTwoPi);
      const double amp = rng.uniform(0.7, 0.95);
      ds.exemplars.push_back(render(native_h, native_w, channels, [&](double, double v) {
        return amp * std::sin(std::numbers::pi * cycles * v + phase);
      }));
      ds.labels.push_back(1);
    }
    // disk: bright soft-edged disk near the centre on a dark field
    {
      const double radius = rng.uniform(0.35, 0.65);
      const double cu = rng.uniform(-0.15, 0.15), cv = rng.uniform(-0.15, 0.15);
      const double inside = rng.uniform(0.6, 0.95), outside = -rng.uniform(0.6, 0.95);
      const double edge = 0.08;
      ds.exemplars.push_back(render(native_h, native_w, channels, [&](double u, double v) {
        const double r = std::hypot(u - cu, v - cv);
        const double s = 0.5 * (1.0 - std::tanh((r - radius) / edge));
        return outside + (inside - outside) * s;
      }));
      ds.labels.push_back(2);
    }
    // checker: axis-aligned board with random cell count and offset
    {
      const int cells = 2 + int(rng.below(3));  // 2..4 cells per axis
      const double off_u = rng.uniform(0.0, 1.0), off_v = rng.uniform(0.0, 1.0);
      const double amp = rng.uniform(0.7, 0.95);
      ds.exemplars.push_back(render(native_h, native_w, channels, [&](double u, double v) {
        const int iu = int(std::floor((u + 1.0) * 0.5 * cells + off_u));
        const int iv = int(std::floor((v + 1.0) * 0.5 * cells + off_v));
        return ((iu + iv) % 2 == 0) ? amp : -amp;
      }));
      ds.labels.push_back(3);
    }
  }
  ds.validate();
  return ds;
}

namespace {

void check_query(const Grid& x, int t, const AnalyticDataset& ds, const NoiseSchedule& sched) {
  if (x.height() != ds.native_h || x.width() != ds.native_w || x.channels() != ds.channels) {
    fail(Errc::shape_mismatch, "denoiser input " + x.shape_string() + " is not native size " +
                                   std::to_string(ds.native_h) + "x" + std::to_string(ds.native_w));
  }
  if (t < 1 || t > sched.train_steps()) {
    fail(Errc::out_of_range, "denoiser step " + std::to_string(t) + " outside schedule");
  }
}

// Log-likelihood (up to a shared constant) of x under each noised exemplar.
std::vector<double> log_likelihoods(const Grid& x, int t, const AnalyticDataset& ds, const NoiseSchedule& sched) {
  const double ab = sched.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double denom = 2.0 * (1.0 - ab);
  std::vector<double> out(ds.exemplars.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < ds.exemplars.size(); ++i) {
    auto ev = ds.exemplars[i].values();
    double acc = 0.0;
    for (std::size_t j = 0; j < xv.size(); ++j) {
      const double d = xv[j] - signal * ev[j];
      acc += d * d;
    }
    out[i] = -acc / denom;
  }
  return out;
}

std::vector<double> softmax_eligible(const std::vector<double>& logits, const AnalyticDataset& ds,
                                     std::optional<int> class_id) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!class_id || ds.labels[i] == *class_id) peak = std::max(peak, logits[i]);
  }
  if (peak == -std::numeric_limits<double>::infinity()) {
    fail(Errc::invalid_argument, "no eligible exemplars for the requested class");
  }
  std::vector<double> w(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (class_id && ds.labels[i] != *class_id) continue;
    w[i] = std::exp(logits[i] - peak);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

Grid eps_from_weights(const Grid& x, int t, const std::vector<double>& w, const AnalyticDataset& ds,
                      const NoiseSchedule& sched) {
  const double ab = sched.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  std::vector<double> mean(x.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    auto ev = ds.exemplars[i].values();
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += w[i] * ev[j];
  }
  Grid out = x;
  auto o = out.values();
  for (std::size_t j = 0; j < o.size(); ++j) o[j] = (o[j] - signal * mean[j]) / noise;
  return out;
}

void check_class(std::optional<int> class_id, const AnalyticDataset& ds) {
  if (class_id && (*class_id < 0 || *class_id >= ds.class_count())) {
    fail(Errc::invalid_argument, "unknown class id " + std::to_string(*class_id));
  }
}

}  // namespace

std::vector<double> posterior_weights(const DenoiserQuery& q, const AnalyticDataset& ds, const NoiseSchedule& sched) {
  check_query(q.x, q.t, ds, sched);
  check_class(q.class_id, ds);
  return softmax_eligible(log_likelihoods(q.x, q.t, ds, sched), ds, q.class_id);
}

Grid eps_star(const DenoiserQuery& q, const AnalyticDataset& ds, const NoiseSchedule& sched) {
  return eps_from_weights(q.x, q.t, posterior_weights(q, ds, sched), ds, sched);
}

EpsPair eps_pair(const Grid& x, int t, int class_id, const AnalyticDataset& ds, const NoiseSchedule& sched) {
  check_query(x, t, ds, sched);
  check_class(class_id, ds);
  const auto logits = log_likelihoods(x, t, ds, sched);
  return {eps_from_weights(x, t, softmax_eligible(logits, ds, std::nullopt), ds, sched),
          eps_from_weights(x, t, softmax_eligible(logits, ds, class_id), ds, sched)};
}

AnalyticDenoiser::AnalyticDenoiser(const AnalyticDataset& ds, const NoiseSchedule& sched) : ds_(ds), sched_(sched) {
  ds_.validate();
}

Grid AnalyticDenoiser::eps(const Grid& x, int t, std::optional<int> class_id) const {
  return eps_star(DenoiserQuery{x, t, class_id}, ds_, sched_);
}

EpsPair AnalyticDenoiser::eps_pair(const Grid& x, int t, int class_id) const {
  return elastic::eps_pair(x, t, class_id, ds_, sched_);
}

Grid CountingModel::eps(const Grid& x, int t, std::optional<int> class_id) const {
  ++singles_;
  return inner_.eps(x, t, class_id);
}

EpsPair CountingModel::eps_pair(const Grid& x, int t, int class_id) const {
  ++pairs_;
  return inner_.eps_pair(x, t, class_id);
}

NearestExemplar nearest_exemplar(const Grid& g, const AnalyticDataset& ds) {
  NearestExemplar best;
  best.rms = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.exemplars.size(); ++i) {
    const Grid& e = ds.exemplars[i];
    const double rms = (e.height() == g.height() && e.width() == g.width())
                           ? rms_distance(g, e)
                           : rms_distance(g, resize_nearest(e, g.height(), g.width()));
    if (rms < best.rms) best = {int(i), ds.labels[i], rms};
  }
  return best;
}

}  // namespace elastic
