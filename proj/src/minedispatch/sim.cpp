#include "minedispatch/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "minedispatch/csv.hpp"
#include "minedispatch/errors.hpp"

namespace minedispatch {

const char* event_type_name(EventType type) {
  switch (type) {
    case EventType::kInit: return "init";
    case EventType::kHaul: return "haul";
    case EventType::kLoad: return "load";
  }
  return "?";
}

int location_slot(const Location& loc, int num_load_sites) {
  switch (loc.kind) {
    case SiteKind::kCharging: return 0;
    case SiteKind::kLoad: return 1 + loc.index;
    case SiteKind::kDump: return 1 + num_load_sites + loc.index;
  }
  return 0;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::ostringstream out;
  out << "time_min,truck,event,location,detail\n";
  for (const auto& r : rows) {
    out << format_number(r.time_min) << ',' << r.truck << ',' << r.event << ',' << r.location
        << ',' << r.detail << '\n';
  }
  return out.str();
}

double ability_ratio_at(const std::vector<MaintenanceWindow>& windows, double time) {
  double ratio = 1.0;
  for (const auto& w : windows) {
    if (time >= w.start_minute && time < w.end_minute) ratio = std::min(ratio, w.ratio);
  }
  return ratio;
}

double service_end(double start, double tons, double rate,
                   const std::vector<MaintenanceWindow>& windows) {
  if (windows.empty()) return start + tons / rate;
  double t = start;
  double remaining = tons;
  for (;;) {
    double next_break = std::numeric_limits<double>::infinity();
    for (const auto& w : windows) {
      if (w.start_minute > t) next_break = std::min(next_break, w.start_minute);
      if (w.end_minute > t) next_break = std::min(next_break, w.end_minute);
    }
    const double speed = rate * ability_ratio_at(windows, t);
    if (speed > 0.0) {
      const double finish = t + remaining / speed;
      if (finish <= next_break) return finish;
      remaining -= speed * (next_break - t);
    }
    // Outside every window the ratio is 1, so next_break is finite here.
    t = next_break;
  }
}

// ---------------------------------------------------------------------------

bool Simulator::EventLater::operator()(const Event& a, const Event& b) const {
  return std::tie(a.time, a.kind, a.truck) > std::tie(b.time, b.kind, b.truck);
}

Simulator::Simulator(std::shared_ptr<const ScenarioConfig> config, std::uint64_t seed)
    : config_(std::move(config)) {
  validate(*config_);
  reset(seed);
}

Simulator::Simulator(const ScenarioConfig& config, std::uint64_t seed)
    : Simulator(std::make_shared<const ScenarioConfig>(config), seed) {}

const DispatchRequest& Simulator::reset(std::uint64_t seed) {
  const auto& cfg = *config_;
  seed_ = seed;
  rng_.seed(seed);
  clock_ = 0.0;
  last_dispatch_clock_ = 0.0;
  produced_tons_ = 0.0;
  dumped_capacity_sum_ = 0.0;
  done_ = false;
  load_service_sum_ = 0.0;
  loads_completed_ = 0;
  cycle_sum_ = 0.0;
  cycles_completed_ = 0;
  trace_.clear();
  events_.clear();
  pending_.reset();

  trucks_.assign(cfg.trucks.size(), TruckStatus{});
  load_sites_.assign(static_cast<std::size_t>(cfg.num_load_sites), Site{});
  for (const auto& s : cfg.shovels) {
    auto& site = load_sites_[static_cast<std::size_t>(s.load_site_index)];
    site.server_free_at.push_back(0.0);
    site.server_rate.push_back(s.service_tons_per_minute);
  }
  dump_sites_.assign(static_cast<std::size_t>(cfg.num_dump_sites), Site{});
  for (auto& site : dump_sites_) {
    site.server_free_at.assign(static_cast<std::size_t>(cfg.dump_positions_per_site), 0.0);
  }
  compute_fixed_groups();

  for (int t = 0; t < num_trucks(); ++t) push(0.0, EventKind::kDecision, t);
  advance();
  return *pending_;
}

void Simulator::compute_fixed_groups() {
  const auto& cfg = *config_;
  const int m = cfg.num_load_sites;
  const int k = num_trucks();
  std::vector<double> site_rate(static_cast<std::size_t>(m), 0.0);
  for (const auto& s : cfg.shovels) site_rate[static_cast<std::size_t>(s.load_site_index)] += s.service_tons_per_minute;
  const double total = std::accumulate(site_rate.begin(), site_rate.end(), 0.0);

  // Largest-remainder apportionment of K trucks over sites by shovel rate.
  std::vector<int> seats(static_cast<std::size_t>(m), 0);
  std::vector<double> remainder(static_cast<std::size_t>(m), 0.0);
  int assigned = 0;
  for (int i = 0; i < m; ++i) {
    const double quota = k * site_rate[static_cast<std::size_t>(i)] / total;
    seats[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(quota));
    remainder[static_cast<std::size_t>(i)] = quota - std::floor(quota);
    assigned += seats[static_cast<std::size_t>(i)];
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
  });
  for (int i = 0; assigned < k; ++i, ++assigned) ++seats[static_cast<std::size_t>(order[static_cast<std::size_t>(i % m)])];

  fixed_group_site_.clear();
  for (int site = 0; site < m; ++site) {
    for (int n = 0; n < seats[static_cast<std::size_t>(site)]; ++n) fixed_group_site_.push_back(site);
  }
}

const DispatchRequest& Simulator::pending() const {
  if (done_ || !pending_) throw EpisodeOver("episode has ended; no pending request");
  return *pending_;
}

int Simulator::num_targets() const {
  const auto& req = pending();
  return req.event_type == EventType::kHaul ? config_->num_dump_sites : config_->num_load_sites;
}

bool Simulator::is_legal(int action) const { return action >= 0 && action < num_targets(); }

Location Simulator::target_location(int action) const {
  const auto& req = pending();
  return {req.event_type == EventType::kHaul ? SiteKind::kDump : SiteKind::kLoad, action};
}

Simulator::Site& Simulator::site(const Location& loc) {
  return loc.kind == SiteKind::kLoad ? load_sites_.at(static_cast<std::size_t>(loc.index))
                                     : dump_sites_.at(static_cast<std::size_t>(loc.index));
}

const Simulator::Site& Simulator::site(const Location& loc) const {
  return loc.kind == SiteKind::kLoad ? load_sites_.at(static_cast<std::size_t>(loc.index))
                                     : dump_sites_.at(static_cast<std::size_t>(loc.index));
}

double Simulator::distance_km(const Location& from, const Location& to) const {
  const auto& cfg = *config_;
  if (from.kind == SiteKind::kCharging && to.kind == SiteKind::kLoad)
    return cfg.dist_charge_to_load[static_cast<std::size_t>(to.index)];
  if (from.kind == SiteKind::kLoad && to.kind == SiteKind::kDump)
    return cfg.dist_load_to_dump[static_cast<std::size_t>(from.index)][static_cast<std::size_t>(to.index)];
  if (from.kind == SiteKind::kDump && to.kind == SiteKind::kLoad)
    return cfg.dist_dump_to_load[static_cast<std::size_t>(from.index)][static_cast<std::size_t>(to.index)];
  throw IllegalAction("no road from " + location_name(from) + " to " + location_name(to));
}

double Simulator::drive_minutes(int truck, const Location& from, const Location& to) const {
  const double speed =
      std::min(config_->trucks[static_cast<std::size_t>(truck)].speed_kmh, config_->speed_limit_kmh);
  return distance_km(from, to) / speed * 60.0;
}

double Simulator::service_minutes_for(int truck, const Location& where, int server,
                                      double start) const {
  if (where.kind == SiteKind::kDump) return kDumpMinutes;
  const auto& s = site(where);
  const double end = service_end(start, config_->trucks[static_cast<std::size_t>(truck)].capacity_tons,
                                 s.server_rate[static_cast<std::size_t>(server)],
                                 config_->ability_schedules[static_cast<std::size_t>(where.index)]);
  return end - start;
}

std::optional<double> Simulator::sample_jam() {
  const double p = config_->jam_probability_per_trip;
  if (p <= 0.0) return std::nullopt;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!(unit(rng_) < p)) return std::nullopt;
  const auto [lo, hi] = config_->jam_delay_minutes;
  if (lo == hi) return lo;
  return lo + (hi - lo) * unit(rng_);
}

void Simulator::push(double time, EventKind kind, int truck) {
  events_.push_back({time, kind, truck});
  std::push_heap(events_.begin(), events_.end(), EventLater{});
}

std::string Simulator::location_name(const Location& loc) const {
  switch (loc.kind) {
    case SiteKind::kCharging: return "charging";
    case SiteKind::kLoad: return "load" + std::to_string(loc.index);
    case SiteKind::kDump: return "dump" + std::to_string(loc.index);
  }
  return "?";
}

void Simulator::record(double time, int truck, const char* event, const Location& loc,
                       std::string detail) {
  if (!trace_enabled_) return;
  trace_.push_back({time, truck, event, location_name(loc), std::move(detail)});
}

StepResult Simulator::step(int action) {
  if (done_) throw EpisodeOver("step() called after the episode ended");
  if (!is_legal(action)) {
    throw IllegalAction("action " + std::to_string(action) + " is not legal for a " +
                        event_type_name(pending_->event_type) + " request");
  }
  const int t = pending_->truck_index;
  auto& truck = trucks_[static_cast<std::size_t>(t)];
  const Location to = target_location(action);

  StepResult result;
  result.info.wait_duration = truck.leg.wait;
  result.info.service_duration = truck.leg.service;
  result.info.jam_duration = truck.leg.jam;
  result.info.move_duration = truck.leg.move;
  truck.leg = Durations{};

  const double drive = drive_minutes(t, truck.location, to);
  const auto jam = sample_jam();
  truck.phase = TruckPhase::kEnRoute;
  truck.destination = to;
  truck.trip_depart = clock_;
  truck.trip_move = drive;
  truck.trip_jam = jam.value_or(0.0);
  truck.trip_jammed = jam.has_value();
  truck.trip_arrival = clock_ + drive + truck.trip_jam;
  push(truck.trip_arrival, EventKind::kArrival, t);
  record(clock_, t, "depart", truck.location, "to=" + location_name(to));
  if (jam) record(clock_, t, "jam", truck.location, "delay=" + format_number(*jam));

  const double before = produced_tons_;
  pending_.reset();
  advance();
  result.info.delta_tons = produced_tons_ - before;
  if (done_) {
    result.info.episode_done = true;
    result.info.final_tons = produced_tons_;
  } else {
    result.next = *pending_;
  }
  return result;
}

void Simulator::advance() {
  while (!events_.empty()) {
    const Event ev = events_.front();
    if (ev.time >= config_->episode_minutes) break;
    std::pop_heap(events_.begin(), events_.end(), EventLater{});
    events_.pop_back();
    clock_ = ev.time;
    handle(ev);
    if (pending_) {
      pending_->time_delta = clock_ - last_dispatch_clock_;
      last_dispatch_clock_ = clock_;
      return;
    }
  }
  done_ = true;
  clock_ = config_->episode_minutes;
  record(clock_, -1, "episode_end", Location{}, "tons=" + format_number(produced_tons_));
}

void Simulator::try_start_service(const Location& where) {
  auto& s = site(where);
  while (!s.queue.empty()) {
    int server = -1;
    for (int i = 0; i < static_cast<int>(s.server_free_at.size()); ++i) {
      const double free_at = s.server_free_at[static_cast<std::size_t>(i)];
      if (free_at <= clock_ && (server < 0 || free_at < s.server_free_at[static_cast<std::size_t>(server)]))
        server = i;
    }
    if (server < 0) return;
    const int t = s.queue.front();
    s.queue.pop_front();
    auto& truck = trucks_[static_cast<std::size_t>(t)];
    const double wait = clock_ - truck.queued_since;
    truck.leg.wait += wait;
    truck.total.wait += wait;
    truck.phase = TruckPhase::kInService;
    truck.server = server;
    truck.service_start = clock_;
    const double end = clock_ + service_minutes_for(t, where, server, clock_);
    s.server_free_at[static_cast<std::size_t>(server)] = end;
    push(end, EventKind::kServiceComplete, t);
    record(clock_, t, "service_start", where, "server=" + std::to_string(server));
  }
}

void Simulator::handle(const Event& ev) {
  auto& truck = trucks_[static_cast<std::size_t>(ev.truck)];
  switch (ev.kind) {
    case EventKind::kDecision: {
      EventType type = EventType::kInit;
      if (truck.location.kind == SiteKind::kLoad) type = EventType::kHaul;
      if (truck.location.kind == SiteKind::kDump) type = EventType::kLoad;
      pending_ = DispatchRequest{ev.truck, type, clock_, 0.0};
      record(clock_, ev.truck, "decision", truck.location, event_type_name(type));
      break;
    }
    case EventKind::kArrival: {
      truck.location = truck.destination;
      truck.phase = TruckPhase::kQueued;
      truck.queued_since = clock_;
      truck.leg.move += truck.trip_move;
      truck.total.move += truck.trip_move;
      truck.leg.jam += truck.trip_jam;
      truck.total.jam += truck.trip_jam;
      ++truck.trips_completed;
      if (truck.trip_jammed) ++truck.jammed_trips;
      site(truck.location).queue.push_back(ev.truck);
      record(clock_, ev.truck, "arrive", truck.location);
      try_start_service(truck.location);
      break;
    }
    case EventKind::kServiceComplete: {
      const Location where = truck.location;
      auto& s = site(where);
      const double service = clock_ - truck.service_start;
      truck.leg.service += service;
      truck.total.service += service;
      const double capacity = config_->trucks[static_cast<std::size_t>(ev.truck)].capacity_tons;
      if (where.kind == SiteKind::kLoad) {
        truck.load_tons = capacity;
        s.tons += capacity;
        load_service_sum_ += service;
        ++loads_completed_;
        if (truck.last_load_done >= 0.0) {
          truck.last_cycle_minutes = clock_ - truck.last_load_done;
          cycle_sum_ += truck.last_cycle_minutes;
          ++cycles_completed_;
          ++truck.cycles_completed;
        }
        truck.last_load_done = clock_;
      } else {
        produced_tons_ += truck.load_tons;
        dumped_capacity_sum_ += capacity;
        s.tons += truck.load_tons;
        truck.load_tons = 0.0;
      }
      record(clock_, ev.truck, "service_end", where, "tons=" + format_number(capacity));
      truck.phase = TruckPhase::kAwaitingOrder;
      truck.server = -1;
      push(clock_, EventKind::kDecision, ev.truck);
      try_start_service(where);
      break;
    }
  }
}

EpisodeMetrics Simulator::metrics() const {
  if (!done_) throw EpisodeNotFinished("metrics requested before the episode ended");
  EpisodeMetrics m;
  m.produced_tons = produced_tons_;
  int jammed = 0;
  for (const auto& t : trucks_) {
    m.total_wait_time += t.total.wait;
    if (t.phase == TruckPhase::kQueued) m.total_wait_time += clock_ - t.queued_since;
    m.trips_completed += t.trips_completed;
    jammed += t.jammed_trips;
  }
  m.jam_ratio = m.trips_completed > 0 ? static_cast<double>(jammed) / m.trips_completed : 0.0;
  if (loads_completed_ > 0 && cycles_completed_ > 0) {
    const double mean_load = load_service_sum_ / loads_completed_;
    const double mean_cycle = cycle_sum_ / cycles_completed_;
    m.match_factor = (num_trucks() * mean_load) / (config_->num_shovels() * mean_cycle);
  }
  return m;
}

std::vector<TargetEstimate> Simulator::target_estimates() const {
  const auto& req = pending();
  const auto& cfg = *config_;
  const int me = req.truck_index;
  const auto& truck = trucks_[static_cast<std::size_t>(me)];
  const Location here = truck.location;
  const int n_targets = num_targets();

  std::vector<TargetEstimate> out(static_cast<std::size_t>(n_targets));
  for (int a = 0; a < n_targets; ++a) {
    const Location loc = target_location(a);
    const Site& s = site(loc);
    auto& e = out[static_cast<std::size_t>(a)];
    e.travel_minutes = drive_minutes(me, here, loc);
    e.distance_km = distance_km(here, loc);
    switch (req.event_type) {
      case EventType::kInit: {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < cfg.num_dump_sites; ++j)
          best = std::min(best, drive_minutes(me, loc, {SiteKind::kDump, j}));
        e.return_minutes = best;
        break;
      }
      case EventType::kHaul:
      case EventType::kLoad:
        e.return_minutes = drive_minutes(me, loc, here);
        break;
    }
    e.queue_len = static_cast<int>(s.queue.size());
    e.servers = static_cast<int>(s.server_free_at.size());
    e.ability_ratio = loc.kind == SiteKind::kLoad
                          ? ability_ratio_at(cfg.ability_schedules[static_cast<std::size_t>(loc.index)], clock_)
                          : 1.0;
    e.produced_tons = s.tons;

    // Trucks already heading for this site, in the order they will arrive.
    std::vector<std::pair<double, int>> inbound;
    int in_service = 0;
    for (int t = 0; t < num_trucks(); ++t) {
      const auto& other = trucks_[static_cast<std::size_t>(t)];
      if (other.phase == TruckPhase::kInService && other.location == loc) ++in_service;
      if (other.phase != TruckPhase::kEnRoute || !(other.destination == loc)) continue;
      inbound.emplace_back(other.trip_arrival, t);
      if (other.location == here) {
        ++e.trucks_on_route;
        if (other.trip_jammed) ++e.jams_on_route;
      }
    }
    std::sort(inbound.begin(), inbound.end());
    e.committed = e.queue_len + in_service + static_cast<int>(inbound.size());

    // Replay the FIFO multi-server queue forward from the current state.
    std::vector<double> free_at = s.server_free_at;
    for (double& f : free_at) f = std::max(f, clock_);
    auto pick = [&free_at] {
      return static_cast<int>(std::min_element(free_at.begin(), free_at.end()) - free_at.begin());
    };
    auto serve = [&](int t, double ready) {
      const int server = pick();
      const double start = std::max(free_at[static_cast<std::size_t>(server)], ready);
      free_at[static_cast<std::size_t>(server)] = start + service_minutes_for(t, loc, server, start);
    };
    for (int t : s.queue) serve(t, clock_);
    e.queue_wait_now = free_at[static_cast<std::size_t>(pick())] - clock_;

    const double my_arrival = clock_ + e.travel_minutes;
    for (const auto& [arrival, t] : inbound) {
      if (arrival > my_arrival || (arrival == my_arrival && t > me)) break;
      serve(t, arrival);
    }
    const int server = pick();
    const double start = std::max(free_at[static_cast<std::size_t>(server)], my_arrival);
    e.est_wait = start - my_arrival;
    e.service_minutes = service_minutes_for(me, loc, server, start);
  }
  return out;
}

}  // namespace minedispatch
