#include <doctest.h>

#include <cmath>
#include <numeric>

#include "minedispatch/dispatchers.hpp"
#include "minedispatch/observation.hpp"

using namespace minedispatch;

TEST_CASE("observation length") {
  CHECK(obs_dim(5, 5) == 69);
  CHECK(obs_dim(1, 1) == 21);
  CHECK(obs_dim(2, 5) == 66);
  CHECK(obs_layout(5, 5).size == 69);
  CHECK(obs_layout(2, 5).size == 66);
  CHECK(obs_layout(2, 5).width == 5);
}

TEST_CASE("episode start encoding") {
  Simulator sim(default_scenario(), 3);
  const Observation o = encode(sim);
  const ObsLayout l = obs_layout(5, 5);
  REQUIRE(o.size() == 69u);
  CHECK(o[l.event_onehot] == 1.0);
  CHECK(o[l.event_onehot + 1] == 0.0);
  CHECK(o[l.event_onehot + 2] == 0.0);
  CHECK(o[l.time_now] == 0.0);
  CHECK(o[l.time_left] == 1.0);
  // Nothing produced yet anywhere.
  for (int i = 0; i < l.width; ++i) CHECK(o[l.produced_tons + i] == 0.0);
  CHECK(encode(sim) == o);
}

TEST_CASE("masks follow the event type") {
  CHECK(mask_for(EventType::kInit, 5, 5) == ActionMask{1, 1, 1, 1, 1});
  CHECK(mask_for(EventType::kHaul, 5, 3) == ActionMask{1, 1, 1, 0, 0});
  CHECK(mask_for(EventType::kLoad, 2, 5) == ActionMask{1, 1, 0, 0, 0});
  CHECK(mask_for(EventType::kInit, 2, 5) == ActionMask{1, 1, 0, 0, 0});
}

TEST_CASE("encodings are finite with clean one-hots and padding") {
  const ScenarioConfig c = reduced_scenario(2, 4, 6, 120);
  const ObsLayout l = obs_layout(2, 4);
  Simulator sim(c, 21);
  Dispatcher d(DispatcherKind::kRandom, 4);
  int seen = 0;
  while (!sim.done()) {
    const Observation o = encode(sim);
    const ActionMask m = mask(sim);
    for (double x : o) REQUIRE(std::isfinite(x));
    CHECK(std::accumulate(o.begin() + l.event_onehot, o.begin() + l.event_onehot + 3, 0.0) == 1.0);
    CHECK(std::accumulate(o.begin() + l.location_onehot, o.begin() + l.location_onehot + 7, 0.0) ==
          1.0);
    const int legal = sim.num_targets();
    CHECK(std::accumulate(m.begin(), m.end(), 0) == legal);
    const int blocks[] = {l.travel_time, l.truck_counts, l.road_dist, l.road_jam, l.est_wait,
                          l.tar_wait_time, l.queue_lens, l.tar_capa, l.ability_ratio,
                          l.produced_tons};
    for (int b : blocks)
      for (int i = legal; i < l.width; ++i) CHECK(o[b + i] == 0.0);
    sim.step(d(sim));
    ++seen;
  }
  CHECK(seen > 20);
}
