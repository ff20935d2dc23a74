#include <doctest.h>

#include <random>

#include "minedispatch/dispatchers.hpp"
#include "minedispatch/reward.hpp"
#include "oracles.hpp"

using namespace minedispatch;

TEST_CASE("sparse reward") {
  StepInfo info;
  info.wait_duration = 3.0;
  info.move_duration = 7.0;
  info.delta_tons = 40.0;
  CHECK(step_reward(info, RewardConfig::sparse()) == 0.0);
  info.episode_done = true;
  info.final_tons = 100.0;
  CHECK(step_reward(info, RewardConfig::sparse()) == doctest::Approx(10.0));
}

TEST_CASE("sparse mode zeroes the shaping weights") {
  const RewardConfig s = RewardConfig::sparse();
  CHECK(s.final_tons == 0.1);
  CHECK(s.delta_tons == 0.0);
  CHECK(s.wait == 0.0);
  CHECK(s.service == 0.0);
  CHECK(s.jam == 0.0);
  CHECK(s.move == 0.0);
  CHECK(reward_mode_from_name("dense") == RewardMode::kDense);
  CHECK_FALSE(reward_mode_from_name("shaped"));
}

TEST_CASE("dense reward arithmetic") {
  StepInfo info;
  info.wait_duration = 2.0;
  info.move_duration = 10.0;
  CHECK(step_reward(info, RewardConfig::dense()) == doctest::Approx(-1.1));
  info = StepInfo{};
  CHECK(step_reward(info, RewardConfig::dense()) == 0.0);
}

TEST_CASE("dense reward matches the hand-written weights") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    StepInfo s;
    s.delta_tons = i % 3 == 0 ? 0.0 : u(rng);
    s.wait_duration = u(rng);
    s.service_duration = u(rng);
    s.jam_duration = i % 2 ? u(rng) : 0.0;
    s.move_duration = u(rng);
    s.episode_done = i % 7 == 0;
    s.final_tons = s.episode_done ? 10 * u(rng) : 0.0;
    CHECK(step_reward(s, RewardConfig::dense()) ==
          doctest::Approx(oracle::dense_reward(s.delta_tons, s.wait_duration, s.service_duration,
                                               s.jam_duration, s.move_duration, s.episode_done,
                                               s.final_tons))
              .epsilon(1e-12));
  }
}

TEST_CASE("sparse episode return is a tenth of production") {
  Simulator sim(reduced_scenario(2, 2, 8, 60), 6);
  Dispatcher d(DispatcherKind::kSptf, 0);
  double total = 0.0;
  while (!sim.done()) total += step_reward(sim.step(d(sim)).info, RewardConfig::sparse());
  CHECK(sim.produced_tons() > 0.0);
  CHECK(std::abs(total - 0.1 * sim.produced_tons()) < 1e-9);
}

TEST_CASE("dense reward is monotone in each term") {
  StepInfo base;
  base.delta_tons = 20.0;
  base.wait_duration = base.service_duration = base.jam_duration = base.move_duration = 1.0;
  const RewardConfig c = RewardConfig::dense();
  const double r0 = step_reward(base, c);
  StepInfo s = base;
  s.delta_tons += 1.0;
  CHECK(step_reward(s, c) > r0);
  for (double StepInfo::*f : {&StepInfo::wait_duration, &StepInfo::service_duration,
                              &StepInfo::jam_duration, &StepInfo::move_duration}) {
    s = base;
    s.*f += 1.0;
    CHECK(step_reward(s, c) < r0);
  }
}
