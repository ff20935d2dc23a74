#include "minedispatch/reward.hpp"

#include <cmath>

namespace minedispatch {

RewardConfig RewardConfig::sparse() {
  RewardConfig c;
  c.mode = RewardMode::kSparse;
  c.delta_tons = 0.0;
  c.wait = 0.0;
  c.service = 0.0;
  c.jam = 0.0;
  c.move = 0.0;
  return c;
}

RewardConfig RewardConfig::dense() { return RewardConfig{}; }

std::optional<RewardMode> reward_mode_from_name(std::string_view name) {
  if (name == "sparse") return RewardMode::kSparse;
  if (name == "dense") return RewardMode::kDense;
  return std::nullopt;
}

double step_reward(const StepInfo& info, const RewardConfig& c) {
  double r = 0.0;
  if (c.mode == RewardMode::kDense) {
    r = c.delta_tons * std::log(info.delta_tons + 1.0) + c.wait * info.wait_duration +
        c.service * info.service_duration + c.jam * info.jam_duration +
        c.move * info.move_duration;
  }
  if (info.episode_done) r += c.final_tons * info.final_tons;
  return r;
}

}  // namespace minedispatch
