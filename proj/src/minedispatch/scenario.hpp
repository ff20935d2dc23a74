#ifndef MINEDISPATCH_SCENARIO_HPP
#define MINEDISPATCH_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace minedispatch {

struct TruckSpec {
  double capacity_tons = 0.0;
  double speed_kmh = 0.0;

  bool operator==(const TruckSpec&) const = default;
};

struct ShovelSpec {
  int load_site_index = 0;
  double service_tons_per_minute = 0.0;

  bool operator==(const ShovelSpec&) const = default;
};

/// A maintenance window on a load site: shovels there work at `ratio` of their
/// nominal rate for minutes in [start_minute, end_minute).
struct MaintenanceWindow {
  double start_minute = 0.0;
  double end_minute = 0.0;
  double ratio = 1.0;

  bool operator==(const MaintenanceWindow&) const = default;
};

/// Static description of a mine instance. Distances are kilometres, times are
/// minutes. Matrices are row-major with the row indexing the origin site.
struct ScenarioConfig {
  int num_load_sites = 0;
  int num_dump_sites = 0;
  std::vector<TruckSpec> trucks;
  std::vector<ShovelSpec> shovels;
  int dump_positions_per_site = 1;
  std::vector<double> dist_charge_to_load;              // [M]
  std::vector<std::vector<double>> dist_load_to_dump;   // [M][N]
  std::vector<std::vector<double>> dist_dump_to_load;   // [N][M]
  double speed_limit_kmh = 25.0;
  double episode_minutes = 240.0;
  double jam_probability_per_trip = 0.0;
  std::pair<double, double> jam_delay_minutes{0.0, 0.0};
  std::vector<std::vector<MaintenanceWindow>> ability_schedules;  // [M]
  std::uint64_t seed = 0;
  std::string description;  // free text, optional in files

  int num_trucks() const { return static_cast<int>(trucks.size()); }
  int num_shovels() const { return static_cast<int>(shovels.size()); }
  int action_width() const { return num_load_sites > num_dump_sites ? num_load_sites : num_dump_sites; }

  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ValidationError naming the first field that breaks an invariant.
void validate(const ScenarioConfig& config);

ScenarioConfig parse_scenario(const std::string& text);
std::string serialize_scenario(const ScenarioConfig& config);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& config, const std::string& path);

/// Five load sites, five dump sites, 71 trucks in three capacity classes and
/// 21 shovels, 240-minute shift. Distances are synthetic with a +10% skew on
/// every return leg.
ScenarioConfig default_scenario();

/// Small deterministic scenario for tests and smoke training.
ScenarioConfig reduced_scenario(int m, int n, int k, double minutes);

/// Copy of `config` with `k` trucks; truck i takes spec i mod original K.
ScenarioConfig resize_fleet(const ScenarioConfig& config, int k);

}  // namespace minedispatch

#endif  // MINEDISPATCH_SCENARIO_HPP
