#ifndef MINEDISPATCH_OBSERVATION_HPP
#define MINEDISPATCH_OBSERVATION_HPP

#include <cstdint>
#include <vector>

#include "minedispatch/sim.hpp"

namespace minedispatch {

using Observation = std::vector<double>;
/// One byte per action slot; 1 = legal.
using ActionMask = std::vector<std::uint8_t>;

/// 8 + (m + n + 1) + 10 * max(m, n).
int obs_dim(int m, int n);

/// Offsets of each feature block inside the observation vector.
struct ObsLayout {
  int event_onehot = 0;
  int time_delta = 0;
  int time_now = 0;
  int time_left = 0;
  int location_onehot = 0;
  int truck_features = 0;
  int travel_time = 0;
  int truck_counts = 0;
  int road_dist = 0;
  int road_jam = 0;
  int est_wait = 0;
  int tar_wait_time = 0;
  int queue_lens = 0;
  int tar_capa = 0;
  int ability_ratio = 0;
  int produced_tons = 0;
  int size = 0;
  int width = 0;  // max(m, n)
};

ObsLayout obs_layout(int m, int n);

Observation encode(const Simulator& sim);
ActionMask mask(const Simulator& sim);
ActionMask mask_for(EventType event, int m, int n);

}  // namespace minedispatch

#endif  // MINEDISPATCH_OBSERVATION_HPP
