#include "minedispatch/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minedispatch {

double clipped_surrogate_loss(std::span<const double> new_log_probs,
                              std::span<const double> old_log_probs,
                              std::span<const double> advantages, double clip_eps) {
  if (new_log_probs.size() != old_log_probs.size() || new_log_probs.size() != advantages.size())
    throw std::invalid_argument("clipped_surrogate_loss: length mismatch");
  if (new_log_probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < new_log_probs.size(); ++i) {
    const double ratio = std::exp(new_log_probs[i] - old_log_probs[i]);
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    sum += -std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return sum / static_cast<double>(new_log_probs.size());
}

double guide_loss(std::span<const double> teacher_log_probs) {
  if (teacher_log_probs.empty()) return 0.0;
  double sum = 0.0;
  for (double lp : teacher_log_probs) sum += lp;
  return sum / static_cast<double>(teacher_log_probs.size());
}

double c_teacher(std::span<const double> teacher_log_probs) {
  if (teacher_log_probs.empty()) return 0.0;
  double sum = 0.0;
  for (double lp : teacher_log_probs) sum += std::exp(lp);
  return std::clamp(sum / static_cast<double>(teacher_log_probs.size()), 0.0, 1.0);
}

double GuidanceState::update(double tons, double base_tons, double alpha, double c) {
  c_teacher = c;
  last_episode_tons = tons;
  if (tons >= base_tons) active = false;
  guide_coef = active ? alpha * (1.0 - std::clamp(c, 0.0, 1.0)) : 0.0;
  return guide_coef;
}

double td_target(double reward, double gamma, double delta_t, double next_value, bool done) {
  return reward + std::pow(gamma, delta_t) * next_value * (done ? 0.0 : 1.0);
}

}  // namespace minedispatch
