#ifndef MINEDISPATCH_SIM_HPP
#define MINEDISPATCH_SIM_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "minedispatch/scenario.hpp"

namespace minedispatch {

enum class EventType : std::uint8_t { kInit = 0, kHaul = 1, kLoad = 2 };

const char* event_type_name(EventType type);

enum class SiteKind : std::uint8_t { kCharging = 0, kLoad = 1, kDump = 2 };

struct Location {
  SiteKind kind = SiteKind::kCharging;
  int index = 0;

  bool operator==(const Location&) const = default;
};

/// One-hot slot of a location in the truck-location block: charging first,
/// then the M load sites, then the N dump sites.
int location_slot(const Location& loc, int num_load_sites);

enum class TruckPhase : std::uint8_t {
  kAtCharging,
  kEnRoute,
  kQueued,
  kInService,
  kAwaitingOrder,
};

/// Minutes spent in each activity. Used both for the per-leg numbers handed to
/// the reward and for episode totals.
struct Durations {
  double wait = 0.0;
  double service = 0.0;
  double jam = 0.0;
  double move = 0.0;

  bool operator==(const Durations&) const = default;
};

struct TruckStatus {
  TruckPhase phase = TruckPhase::kAtCharging;
  Location location;       // current site, or trip origin while en route
  Location destination;    // valid while en route / queued / in service
  double load_tons = 0.0;
  double trip_depart = 0.0;
  double trip_arrival = 0.0;  // scheduled arrival, jam included
  bool trip_jammed = false;
  double trip_move = 0.0;
  double trip_jam = 0.0;
  double service_start = 0.0;
  double queued_since = 0.0;
  int server = -1;            // shovel or dump position while in service
  Durations leg;              // accumulates since this truck's last order
  Durations total;
  double last_load_done = -1.0;
  double last_cycle_minutes = 0.0;
  int trips_completed = 0;
  int jammed_trips = 0;
  int cycles_completed = 0;
};

struct DispatchRequest {
  int truck_index = 0;
  EventType event_type = EventType::kInit;
  double clock = 0.0;
  double time_delta = 0.0;

  bool operator==(const DispatchRequest&) const = default;
};

struct StepInfo {
  double delta_tons = 0.0;
  double wait_duration = 0.0;
  double service_duration = 0.0;
  double jam_duration = 0.0;
  double move_duration = 0.0;
  bool episode_done = false;
  double final_tons = 0.0;

  bool operator==(const StepInfo&) const = default;
};

struct StepResult {
  std::optional<DispatchRequest> next;  // empty when the episode ended
  StepInfo info;
};

struct EpisodeMetrics {
  double produced_tons = 0.0;
  double match_factor = 0.0;
  double total_wait_time = 0.0;
  double jam_ratio = 0.0;
  int trips_completed = 0;

  bool operator==(const EpisodeMetrics&) const = default;
};

/// What a truck would face if sent to one target site right now. Index i of
/// `Simulator::target_estimates()` describes action i.
struct TargetEstimate {
  double travel_minutes = 0.0;   // jam-free drive from the truck's location
  double distance_km = 0.0;
  double return_minutes = 0.0;   // onward leg used by shortest_trip
  double est_wait = 0.0;         // queue wait at arrival, en-route trucks included
  double queue_wait_now = 0.0;   // queue wait if arriving now, en-route excluded
  double service_minutes = 0.0;  // own service time at the predicted start
  int queue_len = 0;             // trucks waiting (not yet in service)
  int committed = 0;             // waiting + in service + en route towards the site
  int trucks_on_route = 0;       // trucks driving this exact origin->target road
  int jams_on_route = 0;         // of those, trucks currently delayed by a jam
  int servers = 0;               // shovels or dump positions
  double ability_ratio = 1.0;
  double produced_tons = 0.0;    // tons loaded (load site) or dumped (dump site) there
};

struct TraceRow {
  double time_min = 0.0;
  int truck = -1;
  std::string event;
  std::string location;
  std::string detail;
};

std::string trace_csv(const std::vector<TraceRow>& rows);

/// Time at which `tons` of material is finished when service starts at `start`
/// on a shovel of nominal `rate`, honouring maintenance windows.
double service_end(double start, double tons, double rate,
                   const std::vector<MaintenanceWindow>& windows);

/// Effective service ratio of a load site at `time` (1 outside any window).
double ability_ratio_at(const std::vector<MaintenanceWindow>& windows, double time);

/// Discrete-event simulation of one shift. Copyable; each instance owns its
/// random stream and is independent of every other instance.
class Simulator {
 public:
  static constexpr double kDumpMinutes = 2.0;

  Simulator(std::shared_ptr<const ScenarioConfig> config, std::uint64_t seed);
  Simulator(const ScenarioConfig& config, std::uint64_t seed);

  /// Puts every truck back at the charging site and returns the first init
  /// request (truck 0, clock 0, time_delta 0).
  const DispatchRequest& reset(std::uint64_t seed);

  /// Routes the pending truck to `action` and advances to the next decision.
  /// Throws IllegalAction (state untouched) or EpisodeOver.
  StepResult step(int action);

  bool done() const { return done_; }
  const DispatchRequest& pending() const;
  EpisodeMetrics metrics() const;

  /// Legal targets for the pending request: M for init/load, N for haul.
  int num_targets() const;
  bool is_legal(int action) const;
  std::vector<TargetEstimate> target_estimates() const;

  /// Draws the jam outcome of one trip from this simulator's stream.
  std::optional<double> sample_jam();

  const ScenarioConfig& config() const { return *config_; }
  double clock() const { return clock_; }
  double produced_tons() const { return produced_tons_; }
  double dumped_capacity_sum() const { return dumped_capacity_sum_; }
  const TruckStatus& truck(int i) const { return trucks_.at(static_cast<std::size_t>(i)); }
  int num_trucks() const { return static_cast<int>(trucks_.size()); }
  /// Load site assigned to each truck by the fixed-group apportionment.
  const std::vector<int>& fixed_group_site() const { return fixed_group_site_; }
  std::uint64_t seed() const { return seed_; }

  void enable_trace(bool on) { trace_enabled_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  enum class EventKind : std::uint8_t { kServiceComplete = 0, kArrival = 1, kDecision = 2 };

  struct Event {
    double time;
    EventKind kind;
    int truck;
  };
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const;
  };

  struct Site {
    std::deque<int> queue;
    std::vector<double> server_free_at;
    std::vector<double> server_rate;  // t/min for shovels; unused for dumps
    double tons = 0.0;
  };

  Site& site(const Location& loc);
  const Site& site(const Location& loc) const;
  double drive_minutes(int truck, const Location& from, const Location& to) const;
  double distance_km(const Location& from, const Location& to) const;
  Location target_location(int action) const;
  double service_minutes_for(int truck, const Location& where, int server, double start) const;
  void try_start_service(const Location& where);
  void handle(const Event& ev);
  void advance();
  void push(double time, EventKind kind, int truck);
  void record(double time, int truck, const char* event, const Location& loc,
              std::string detail = {});
  std::string location_name(const Location& loc) const;
  void compute_fixed_groups();

  std::shared_ptr<const ScenarioConfig> config_;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  double clock_ = 0.0;
  double last_dispatch_clock_ = 0.0;
  double produced_tons_ = 0.0;
  double dumped_capacity_sum_ = 0.0;
  bool done_ = false;
  std::vector<TruckStatus> trucks_;
  std::vector<Site> load_sites_;
  std::vector<Site> dump_sites_;
  std::vector<Event> events_;  // binary heap ordered by EventLater
  std::optional<DispatchRequest> pending_;
  std::vector<int> fixed_group_site_;
  double load_service_sum_ = 0.0;
  int loads_completed_ = 0;
  double cycle_sum_ = 0.0;
  int cycles_completed_ = 0;
  bool trace_enabled_ = false;
  std::vector<TraceRow> trace_;
};

}  // namespace minedispatch

#endif  // MINEDISPATCH_SIM_HPP
