#include "minedispatch/observation.hpp"

#include <algorithm>
#include <cmath>

namespace minedispatch {

int obs_dim(int m, int n) { return 8 + (m + n + 1) + 10 * std::max(m, n); }

ObsLayout obs_layout(int m, int n) {
  ObsLayout l;
  l.width = std::max(m, n);
  int at = 0;
  auto take = [&at](int len) {
    const int here = at;
    at += len;
    return here;
  };
  l.event_onehot = take(3);
  l.time_delta = take(1);
  l.time_now = take(1);
  l.time_left = take(1);
  l.location_onehot = take(m + n + 1);
  l.truck_features = take(2);
  l.travel_time = take(l.width);
  l.truck_counts = take(l.width);
  l.road_dist = take(l.width);
  l.road_jam = take(l.width);
  l.est_wait = take(l.width);
  l.tar_wait_time = take(l.width);
  l.queue_lens = take(l.width);
  l.tar_capa = take(l.width);
  l.ability_ratio = take(l.width);
  l.produced_tons = take(l.width);
  l.size = at;
  return l;
}

Observation encode(const Simulator& sim) {
  const auto& cfg = sim.config();
  const auto& req = sim.pending();
  const auto& truck = sim.truck(req.truck_index);
  const ObsLayout l = obs_layout(cfg.num_load_sites, cfg.num_dump_sites);
  const double k = static_cast<double>(sim.num_trucks());
  auto log1 = [](double x) { return std::log(x + 1.0); };

  Observation obs(static_cast<std::size_t>(l.size), 0.0);
  auto at = [&obs](int i) -> double& { return obs[static_cast<std::size_t>(i)]; };

  at(l.event_onehot + static_cast<int>(req.event_type)) = 1.0;
  at(l.time_delta) = req.time_delta / 60.0;
  const double now = std::clamp(req.clock / cfg.episode_minutes, 0.0, 1.0);
  at(l.time_now) = now;
  at(l.time_left) = 1.0 - now;
  at(l.location_onehot + location_slot(truck.location, cfg.num_load_sites)) = 1.0;
  at(l.truck_features) = log1(truck.load_tons);
  at(l.truck_features + 1) = log1(truck.last_cycle_minutes);

  const auto targets = sim.target_estimates();
  for (int i = 0; i < static_cast<int>(targets.size()); ++i) {
    const auto& e = targets[static_cast<std::size_t>(i)];
    at(l.travel_time + i) = log1(e.travel_minutes);
    at(l.truck_counts + i) = e.trucks_on_route / k;
    at(l.road_dist + i) = log1(e.distance_km);
    at(l.road_jam + i) = e.jams_on_route;
    at(l.est_wait + i) = log1(e.est_wait);
    at(l.tar_wait_time + i) = log1(e.queue_wait_now);
    at(l.queue_lens + i) = e.queue_len / k;
    at(l.tar_capa + i) = log1(e.servers);
    at(l.ability_ratio + i) = e.ability_ratio;
    at(l.produced_tons + i) = log1(e.produced_tons);
  }
  return obs;
}

ActionMask mask_for(EventType event, int m, int n) {
  const int width = std::max(m, n);
  const int legal = event == EventType::kHaul ? n : m;
  ActionMask out(static_cast<std::size_t>(width), 0);
  std::fill(out.begin(), out.begin() + legal, std::uint8_t{1});
  return out;
}

ActionMask mask(const Simulator& sim) {
  return mask_for(sim.pending().event_type, sim.config().num_load_sites,
                  sim.config().num_dump_sites);
}

}  // namespace minedispatch
