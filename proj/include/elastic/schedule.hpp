// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "elastic/grid.hpp"

namespace elastic {

/// Discrete noise schedule plus the DDIM step subsequence.
///
/// Steps are 1-based: alpha_bar(t) for t in [1, train_steps], and
/// alpha_bar(0) == 1 denotes clean data. ddim_steps() is strictly decreasing
/// and starts at train_steps.
class NoiseSchedule {
 public:
  /// betas[i] is the variance for step i + 1.
  NoiseSchedule(std::vector<double> betas, int ddim_count);

  int train_steps() const { return int(beta_.size()) - 1; }
  double beta(int t) const;
  double alpha_bar(int t) const;
  const std::vector<int>& ddim_steps() const { return ddim_steps_; }

  bool is_ddim_step(int t) const;
  /// Next-smaller selected step, or 0 after the last one.
  int previous_step(int t) const;

 private:
  void check_step(int t) const;

  std::vector<double> beta_;       // index 0 unused (0.0)
  std::vector<double> alpha_bar_;  // index 0 == 1.0
  std::vector<int> ddim_steps_;
};

NoiseSchedule make_linear_schedule(int train_steps, double beta_start, double beta_end, int ddim_count);

/// Multiplier applied to the class direction; the (1 + w) of classifier-free
/// guidance. 1.0 reproduces the conditional prediction.
struct GuidanceConfig {
  double scale = 7.0;
};

Grid forward_noise(const Grid& x0, int t, const Grid& z, const NoiseSchedule& sched);
Grid predict_x0(const Grid& x_t, const Grid& eps_hat, int t, const NoiseSchedule& sched);

/// Deterministic DDIM update from t to t_prev (0 = final clean estimate).
Grid ddim_step(const Grid& x_t, const Grid& eps_hat, int t, int t_prev, const NoiseSchedule& sched);

struct GuidedScore {
  Grid eps_hat;
  Grid class_direction;
};

GuidedScore cfg_combine(const Grid& eps_uncond, const Grid& eps_cond, GuidanceConfig g);

}  // namespace elastic
