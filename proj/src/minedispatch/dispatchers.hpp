#ifndef MINEDISPATCH_DISPATCHERS_HPP
#define MINEDISPATCH_DISPATCHERS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "minedispatch/sim.hpp"

namespace minedispatch {

enum class DispatcherKind : std::uint8_t {
  kNaive,
  kRandom,
  kNearest,
  kShortestTrip,
  kShortestQueue,
  kSptf,
  kFixedGroup,
};

inline constexpr std::array<DispatcherKind, 7> kAllDispatchers = {
    DispatcherKind::kNaive,         DispatcherKind::kRandom, DispatcherKind::kNearest,
    DispatcherKind::kShortestTrip,  DispatcherKind::kShortestQueue,
    DispatcherKind::kSptf,          DispatcherKind::kFixedGroup};

const char* dispatcher_name(DispatcherKind kind);
std::optional<DispatcherKind> dispatcher_from_name(std::string_view name);
/// "naive, random, ..." for usage messages.
std::string dispatcher_name_list();

// Pure decision rules over per-target estimates. Ties go to the lower index.
int argmin_travel(std::span<const TargetEstimate> targets);
int argmin_trip(std::span<const TargetEstimate> targets);
int argmin_committed_queue(std::span<const TargetEstimate> targets);
int argmin_completion(std::span<const TargetEstimate> targets);

/// Estimated completion time used by SPTF: drive + predicted wait + service.
inline double completion_minutes(const TargetEstimate& e) {
  return e.travel_minutes + e.est_wait + e.service_minutes;
}

/// Chooses a legal target for the simulator's pending request. `rng` is only
/// read by the random dispatcher and may be null for every other kind.
int decide(DispatcherKind kind, const Simulator& sim, std::mt19937_64* rng);

/// The SPTF rule, used as the guidance teacher.
int teacher_action(const Simulator& sim);

/// Owns the random stream of one dispatcher instance.
class Dispatcher {
 public:
  Dispatcher(DispatcherKind kind, std::uint64_t seed) : kind_(kind), rng_(seed) {}
  int operator()(const Simulator& sim) { return decide(kind_, sim, &rng_); }
  DispatcherKind kind() const { return kind_; }

 private:
  DispatcherKind kind_;
  std::mt19937_64 rng_;
};

/// Seed of the dispatcher stream paired with an episode seed.
inline std::uint64_t dispatcher_seed(std::uint64_t episode_seed) {
  return episode_seed ^ 0x9E3779B97F4A7C15ULL;
}

/// Runs one full episode under `kind`; the random dispatcher draws from a
/// stream seeded with dispatcher_seed(seed).
EpisodeMetrics run_episode(const ScenarioConfig& config, DispatcherKind kind, std::uint64_t seed);

}  // namespace minedispatch

#endif  // MINEDISPATCH_DISPATCHERS_HPP
