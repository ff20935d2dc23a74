#include "minedispatch/dispatchers.hpp"

#include <stdexcept>

namespace minedispatch {

namespace {

template <typename Score>
int argmin_by(std::span<const TargetEstimate> targets, Score score) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(targets.size()); ++i) {
    if (score(targets[static_cast<std::size_t>(i)]) < score(targets[static_cast<std::size_t>(best)])) best = i;
  }
  return best;
}

}  // namespace

const char* dispatcher_name(DispatcherKind kind) {
  switch (kind) {
    case DispatcherKind::kNaive: return "naive";
    case DispatcherKind::kRandom: return "random";
    case DispatcherKind::kNearest: return "nearest";
    case DispatcherKind::kShortestTrip: return "shortest_trip";
    case DispatcherKind::kShortestQueue: return "shortest_queue";
    case DispatcherKind::kSptf: return "sptf";
    case DispatcherKind::kFixedGroup: return "fixed_group";
  }
  return "?";
}

std::optional<DispatcherKind> dispatcher_from_name(std::string_view name) {
  for (auto kind : kAllDispatchers) {
    if (name == dispatcher_name(kind)) return kind;
  }
  return std::nullopt;
}

std::string dispatcher_name_list() {
  std::string out;
  for (auto kind : kAllDispatchers) {
    if (!out.empty()) out += ", ";
    out += dispatcher_name(kind);
  }
  return out;
}

int argmin_travel(std::span<const TargetEstimate> targets) {
  return argmin_by(targets, [](const TargetEstimate& e) { return e.travel_minutes; });
}

int argmin_trip(std::span<const TargetEstimate> targets) {
  return argmin_by(targets,
                   [](const TargetEstimate& e) { return e.travel_minutes + e.return_minutes; });
}

int argmin_committed_queue(std::span<const TargetEstimate> targets) {
  return argmin_by(targets, [](const TargetEstimate& e) { return e.committed; });
}

int argmin_completion(std::span<const TargetEstimate> targets) {
  return argmin_by(targets, completion_minutes);
}

int decide(DispatcherKind kind, const Simulator& sim, std::mt19937_64* rng) {
  const auto& req = sim.pending();
  switch (kind) {
    case DispatcherKind::kNaive:
      return 0;
    case DispatcherKind::kRandom: {
      if (rng == nullptr) throw std::invalid_argument("random dispatcher needs a random stream");
      std::uniform_int_distribution<int> pick(0, sim.num_targets() - 1);
      return pick(*rng);
    }
    case DispatcherKind::kNearest:
      return argmin_travel(sim.target_estimates());
    case DispatcherKind::kShortestTrip:
      return argmin_trip(sim.target_estimates());
    case DispatcherKind::kShortestQueue:
      return argmin_committed_queue(sim.target_estimates());
    case DispatcherKind::kSptf:
      return argmin_completion(sim.target_estimates());
    case DispatcherKind::kFixedGroup:
      if (req.event_type == EventType::kHaul) return argmin_travel(sim.target_estimates());
      return sim.fixed_group_site()[static_cast<std::size_t>(req.truck_index)];
  }
  return 0;
}

int teacher_action(const Simulator& sim) { return decide(DispatcherKind::kSptf, sim, nullptr); }

EpisodeMetrics run_episode(const ScenarioConfig& config, DispatcherKind kind, std::uint64_t seed) {
  Simulator sim(config, seed);
  Dispatcher dispatcher(kind, dispatcher_seed(seed));
  while (!sim.done()) sim.step(dispatcher(sim));
  return sim.metrics();
}

}  // namespace minedispatch
