#ifndef MINEDISPATCH_REWARD_HPP
#define MINEDISPATCH_REWARD_HPP

#include <optional>
#include <string_view>

#include "minedispatch/sim.hpp"

namespace minedispatch {

enum class RewardMode { kSparse, kDense };

/// Per-decision reward weights. The defaults are the dense weights; sparse
/// mode keeps only the terminal production bonus.
struct RewardConfig {
  RewardMode mode = RewardMode::kDense;
  double final_tons = 0.1;
  double delta_tons = 2.0;   // applied to log(delta_tons + 1)
  double wait = -0.5;
  double service = -0.1;
  double jam = -0.1;
  double move = -0.01;

  static RewardConfig sparse();
  static RewardConfig dense();
};

std::optional<RewardMode> reward_mode_from_name(std::string_view name);

double step_reward(const StepInfo& info, const RewardConfig& config);

}  // namespace minedispatch

#endif  // MINEDISPATCH_REWARD_HPP
