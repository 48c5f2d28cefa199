// SPDX-License-Identifier: Apache-2.0
#include "elastic/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elastic/error.hpp"

namespace elastic {

NoiseSchedule::NoiseSchedule(std::vector<double> betas, int ddim_count) {
  const int steps = int(betas.size());
  if (steps < 1) fail(Errc::invalid_argument, "schedule needs at least one step");
  if (ddim_count < 1 || ddim_count > steps) {
    fail(Errc::invalid_argument, "ddim_count " + std::to_string(ddim_count) + " outside [1, " +
                                     std::to_string(steps) + "]");
  }
  beta_.assign(1, 0.0);
  alpha_bar_.assign(1, 1.0);
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) fail(Errc::invalid_argument, "beta must lie in (0, 1)");
    beta_.push_back(b);
    alpha_bar_.push_back(alpha_bar_.back() * (1.0 - b));
  }
  for (int k = 0; k < ddim_count; ++k) {
    ddim_steps_.push_back(steps - int(std::int64_t(k) * steps / ddim_count));
  }
}

void NoiseSchedule::check_step(int t) const {
  if (t < 0 || t > train_steps()) {
    fail(Errc::out_of_range, "step " + std::to_string(t) + " outside schedule [0, " + std::to_string(train_steps()) +
                                 "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_step(t);
  return beta_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(t);
  return alpha_bar_[t];
}

bool NoiseSchedule::is_ddim_step(int t) const {
  return std::find(ddim_steps_.begin(), ddim_steps_.end(), t) != ddim_steps_.end();
}

int NoiseSchedule::previous_step(int t) const {
  auto it = std::find(ddim_steps_.begin(), ddim_steps_.end(), t);
  if (it == ddim_steps_.end()) fail(Errc::out_of_range, "step " + std::to_string(t) + " is not a DDIM step");
  ++it;
  return it == ddim_steps_.end() ? 0 : *it;
}

NoiseSchedule make_linear_schedule(int train_steps, double beta_start, double beta_end, int ddim_count) {
  if (train_steps < 1) fail(Errc::invalid_argument, "train_steps must be positive");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail(Errc::invalid_argument, "need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(train_steps);
  for (int i = 0; i < train_steps; ++i) {
    const double frac = train_steps == 1 ? 0.0 : double(i) / double(train_steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * frac;
  }
  return NoiseSchedule(std::move(betas), ddim_count);
}

Grid forward_noise(const Grid& x0, int t, const Grid& z, const NoiseSchedule& sched) {
  require_same_shape(x0, z, "forward_noise");
  const double ab = sched.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Grid out = x0;
  auto o = out.values();
  auto zv = z.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = signal * o[i] + noise * zv[i];
  return out;
}

Grid predict_x0(const Grid& x_t, const Grid& eps_hat, int t, const NoiseSchedule& sched) {
  require_same_shape(x_t, eps_hat, "predict_x0");
  const double ab = sched.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Grid out = x_t;
  auto o = out.values();
  auto e = eps_hat.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (o[i] - noise * e[i]) / signal;
  return out;
}

Grid ddim_step(const Grid& x_t, const Grid& eps_hat, int t, int t_prev, const NoiseSchedule& sched) {
  if (!sched.is_ddim_step(t)) fail(Errc::out_of_range, "step " + std::to_string(t) + " is not a DDIM step");
  if (t_prev < 0 || t_prev >= t || (t_prev != 0 && !sched.is_ddim_step(t_prev))) {
    fail(Errc::out_of_range, "invalid previous step " + std::to_string(t_prev) + " for " + std::to_string(t));
  }
  Grid x0 = predict_x0(x_t, eps_hat, t, sched);
  if (t_prev == 0) return x0;
  const double ab_prev = sched.alpha_bar(t_prev);
  const double signal = std::sqrt(ab_prev);
  const double noise = std::sqrt(1.0 - ab_prev);
  auto o = x0.values();
  auto e = eps_hat.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = signal * o[i] + noise * e[i];
  return x0;
}

GuidedScore cfg_combine(const Grid& eps_uncond, const Grid& eps_cond, GuidanceConfig g) {
  require_same_shape(eps_uncond, eps_cond, "cfg_combine");
  if (!(g.scale >= 0.0)) fail(Errc::invalid_argument, "guidance scale must be non-negative");
  Grid direction = eps_cond - eps_uncond;
  Grid eps = add_scaled(eps_uncond, g.scale, direction);
  return {std::move(eps), std::move(direction)};
}

}  // namespace elastic
