#include "minedispatch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "minedispatch/errors.hpp"

namespace minedispatch {

using nlohmann::json;

namespace {

const std::set<std::string> kScenarioKeys = {
    "num_load_sites",     "num_dump_sites",          "trucks",
    "shovels",            "dump_positions_per_site", "dist_charge_to_load",
    "dist_load_to_dump",  "dist_dump_to_load",       "speed_limit_kmh",
    "episode_minutes",    "jam_probability_per_trip", "jam_delay_minutes",
    "ability_schedules",  "seed",                    "description"};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

void check_matrix(const std::vector<std::vector<double>>& mat, int rows, int cols,
                  const std::string& field) {
  require(static_cast<int>(mat.size()) == rows, field,
          "expected " + std::to_string(rows) + " rows");
  for (const auto& row : mat) {
    require(static_cast<int>(row.size()) == cols, field,
            "expected " + std::to_string(cols) + " columns");
    for (double d : row) require(std::isfinite(d) && d > 0.0, field, "distances must be > 0");
  }
}

// Parse helpers. Every accessor names the dotted path it failed on.

const json& member(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing field '" + path + key + "'");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError("field '" + path + "': expected a number");
  return j.get<double>();
}

long long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError("field '" + path + "': expected an integer");
  return j.get<long long>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError("field '" + path + "': expected an array");
  return j;
}

std::vector<double> number_list(const json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i)
    out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> number_matrix(const json& j, const std::string& path) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i)
    out.push_back(number_list(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ParseError("unknown field '" + path + key + "'");
  }
}

int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.num_load_sites >= 1, "num_load_sites", "must be >= 1");
  require(c.num_dump_sites >= 1, "num_dump_sites", "must be >= 1");
  require(!c.trucks.empty(), "trucks", "need at least one truck");
  require(std::isfinite(c.speed_limit_kmh) && c.speed_limit_kmh > 0.0, "speed_limit_kmh",
          "must be > 0");
  for (const auto& t : c.trucks) {
    require(std::isfinite(t.capacity_tons) && t.capacity_tons > 0.0, "trucks",
            "capacity_tons must be > 0");
    require(std::isfinite(t.speed_kmh) && t.speed_kmh > 0.0, "trucks", "speed_kmh must be > 0");
    require(t.speed_kmh <= c.speed_limit_kmh, "trucks", "speed_kmh exceeds speed_limit_kmh");
  }
  require(!c.shovels.empty(), "shovels", "need at least one shovel");
  std::vector<int> per_site(static_cast<std::size_t>(c.num_load_sites), 0);
  for (const auto& s : c.shovels) {
    require(s.load_site_index >= 0 && s.load_site_index < c.num_load_sites, "shovels",
            "load_site_index out of range");
    require(std::isfinite(s.service_tons_per_minute) && s.service_tons_per_minute > 0.0,
            "shovels", "service_tons_per_minute must be > 0");
    ++per_site[static_cast<std::size_t>(s.load_site_index)];
  }
  for (int n : per_site) require(n >= 1, "shovels", "every load site needs a shovel");
  require(c.dump_positions_per_site >= 1, "dump_positions_per_site", "must be >= 1");
  require(static_cast<int>(c.dist_charge_to_load.size()) == c.num_load_sites,
          "dist_charge_to_load", "expected one entry per load site");
  for (double d : c.dist_charge_to_load)
    require(std::isfinite(d) && d > 0.0, "dist_charge_to_load", "distances must be > 0");
  check_matrix(c.dist_load_to_dump, c.num_load_sites, c.num_dump_sites, "dist_load_to_dump");
  check_matrix(c.dist_dump_to_load, c.num_dump_sites, c.num_load_sites, "dist_dump_to_load");
  require(std::isfinite(c.episode_minutes) && c.episode_minutes > 0.0, "episode_minutes",
          "must be > 0");
  require(c.jam_probability_per_trip >= 0.0 && c.jam_probability_per_trip <= 1.0,
          "jam_probability_per_trip", "must lie in [0,1]");
  const auto [jam_lo, jam_hi] = c.jam_delay_minutes;
  require(std::isfinite(jam_lo) && std::isfinite(jam_hi) && jam_lo >= 0.0 && jam_lo <= jam_hi,
          "jam_delay_minutes", "need 0 <= min <= max");
  require(static_cast<int>(c.ability_schedules.size()) == c.num_load_sites, "ability_schedules",
          "expected one schedule per load site");
  for (const auto& site : c.ability_schedules) {
    for (const auto& w : site) {
      require(std::isfinite(w.start_minute) && std::isfinite(w.end_minute) &&
                  w.start_minute < w.end_minute,
              "ability_schedules", "window start must precede end");
      require(w.ratio >= 0.0 && w.ratio <= 1.0, "ability_schedules", "ratio must lie in [0,1]");
    }
  }
}

ScenarioConfig parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("scenario document must be an object");
  reject_unknown(doc, kScenarioKeys, "");

  ScenarioConfig c;
  c.num_load_sites = static_cast<int>(as_integer(member(doc, "num_load_sites", ""), "num_load_sites"));
  c.num_dump_sites = static_cast<int>(as_integer(member(doc, "num_dump_sites", ""), "num_dump_sites"));

  const auto& trucks = as_array(member(doc, "trucks", ""), "trucks");
  for (std::size_t i = 0; i < trucks.size(); ++i) {
    const std::string path = "trucks[" + std::to_string(i) + "].";
    if (!trucks[i].is_object()) throw ParseError("field '" + path + "': expected an object");
    reject_unknown(trucks[i], {"capacity_tons", "speed_kmh"}, path);
    c.trucks.push_back({as_number(member(trucks[i], "capacity_tons", path), path + "capacity_tons"),
                        as_number(member(trucks[i], "speed_kmh", path), path + "speed_kmh")});
  }
  const auto& shovels = as_array(member(doc, "shovels", ""), "shovels");
  for (std::size_t i = 0; i < shovels.size(); ++i) {
    const std::string path = "shovels[" + std::to_string(i) + "].";
    if (!shovels[i].is_object()) throw ParseError("field '" + path + "': expected an object");
    reject_unknown(shovels[i], {"load_site_index", "service_tons_per_minute"}, path);
    c.shovels.push_back(
        {static_cast<int>(as_integer(member(shovels[i], "load_site_index", path),
                                     path + "load_site_index")),
         as_number(member(shovels[i], "service_tons_per_minute", path),
                   path + "service_tons_per_minute")});
  }
  c.dump_positions_per_site = static_cast<int>(
      as_integer(member(doc, "dump_positions_per_site", ""), "dump_positions_per_site"));
  c.dist_charge_to_load = number_list(member(doc, "dist_charge_to_load", ""), "dist_charge_to_load");
  c.dist_load_to_dump = number_matrix(member(doc, "dist_load_to_dump", ""), "dist_load_to_dump");
  c.dist_dump_to_load = number_matrix(member(doc, "dist_dump_to_load", ""), "dist_dump_to_load");
  c.speed_limit_kmh = as_number(member(doc, "speed_limit_kmh", ""), "speed_limit_kmh");
  c.episode_minutes = as_number(member(doc, "episode_minutes", ""), "episode_minutes");
  c.jam_probability_per_trip =
      as_number(member(doc, "jam_probability_per_trip", ""), "jam_probability_per_trip");
  const auto jam = number_list(member(doc, "jam_delay_minutes", ""), "jam_delay_minutes");
  if (jam.size() != 2) throw ParseError("field 'jam_delay_minutes': expected [min, max]");
  c.jam_delay_minutes = {jam[0], jam[1]};

  const auto& sched = as_array(member(doc, "ability_schedules", ""), "ability_schedules");
  for (std::size_t s = 0; s < sched.size(); ++s) {
    const std::string path = "ability_schedules[" + std::to_string(s) + "]";
    std::vector<MaintenanceWindow> windows;
    for (const auto& row : number_matrix(sched[s], path)) {
      if (row.size() != 3)
        throw ParseError("field '" + path + "': windows are [start_minute, end_minute, ratio]");
      windows.push_back({row[0], row[1], row[2]});
    }
    c.ability_schedules.push_back(std::move(windows));
  }
  const auto& seed = member(doc, "seed", "");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw ParseError("field 'seed': expected a non-negative integer");
  c.seed = seed.get<std::uint64_t>();
  if (auto it = doc.find("description"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("field 'description': expected a string");
    c.description = it->get<std::string>();
  }

  validate(c);
  return c;
}

std::string serialize_scenario(const ScenarioConfig& c) {
  json doc;
  doc["num_load_sites"] = c.num_load_sites;
  doc["num_dump_sites"] = c.num_dump_sites;
  doc["trucks"] = json::array();
  for (const auto& t : c.trucks)
    doc["trucks"].push_back({{"capacity_tons", t.capacity_tons}, {"speed_kmh", t.speed_kmh}});
  doc["shovels"] = json::array();
  for (const auto& s : c.shovels)
    doc["shovels"].push_back({{"load_site_index", s.load_site_index},
                              {"service_tons_per_minute", s.service_tons_per_minute}});
  doc["dump_positions_per_site"] = c.dump_positions_per_site;
  doc["dist_charge_to_load"] = c.dist_charge_to_load;
  doc["dist_load_to_dump"] = c.dist_load_to_dump;
  doc["dist_dump_to_load"] = c.dist_dump_to_load;
  doc["speed_limit_kmh"] = c.speed_limit_kmh;
  doc["episode_minutes"] = c.episode_minutes;
  doc["jam_probability_per_trip"] = c.jam_probability_per_trip;
  doc["jam_delay_minutes"] = {c.jam_delay_minutes.first, c.jam_delay_minutes.second};
  doc["ability_schedules"] = json::array();
  for (const auto& site : c.ability_schedules) {
    json windows = json::array();
    for (const auto& w : site) windows.push_back({w.start_minute, w.end_minute, w.ratio});
    doc["ability_schedules"].push_back(windows);
  }
  doc["seed"] = c.seed;
  if (!c.description.empty()) doc["description"] = c.description;
  return doc.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  validate(config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write scenario file '" + path + "'");
  out << serialize_scenario(config);
  if (!out) throw IoError("failed writing '" + path + "'");
}

ScenarioConfig default_scenario() {
  constexpr int kSites = 5;
  ScenarioConfig c;
  c.num_load_sites = kSites;
  c.num_dump_sites = kSites;
  c.speed_limit_kmh = 25.0;
  c.episode_minutes = 240.0;
  c.dump_positions_per_site = 3;
  c.jam_probability_per_trip = 0.3;
  c.jam_delay_minutes = {2.0, 8.0};
  c.seed = 42;
  c.description =
      "Synthetic 5x5 mine: 71 trucks in three capacity classes (24 x 20 t, 24 x 40 t, "
      "23 x 60 t, all 25 km/h), 21 shovels spread 3/4/5/4/5 over the load sites, one "
      "half-rate maintenance window per load site, return legs 10% longer than haul legs.";

  // Three capacity classes in near-equal shares: 24 x 20 t, 24 x 40 t, 23 x 60 t.
  constexpr double kCapacities[] = {20.0, 40.0, 60.0};
  for (int i = 0; i < 71; ++i) c.trucks.push_back({kCapacities[i % 3], 25.0});

  // 21 shovels; site 0 is the smallest (3 shovels), the rest get 4 or 5.
  // Rates walk over [1.0, 3.0] t/min in a fixed permutation.
  constexpr int kShovelsPerSite[kSites] = {3, 4, 5, 4, 5};
  int shovel = 0;
  for (int site = 0; site < kSites; ++site) {
    for (int k = 0; k < kShovelsPerSite[site]; ++k, ++shovel) {
      const double rate = 1.0 + 2.0 * static_cast<double>((shovel * 8) % 21) / 20.0;
      c.shovels.push_back({site, rate});
    }
  }

  c.dist_charge_to_load = {6.0, 4.5, 2.5, 5.5, 3.5};
  // Haul-leg distances (row = load site, column = dump site). Every return leg
  // is the same road plus 10%.
  constexpr double kLoadToDump[kSites][kSites] = {
      {3.0, 5.6, 7.4, 6.2, 4.4},
      {5.0, 3.4, 5.8, 7.6, 6.6},
      {6.8, 4.6, 2.6, 4.2, 6.0},
      {7.8, 6.4, 4.8, 3.6, 5.2},
      {4.0, 7.0, 6.4, 5.4, 2.8},
  };
  c.dist_load_to_dump.assign(kSites, std::vector<double>(kSites));
  c.dist_dump_to_load.assign(kSites, std::vector<double>(kSites));
  for (int i = 0; i < kSites; ++i) {
    for (int j = 0; j < kSites; ++j) {
      c.dist_load_to_dump[i][j] = kLoadToDump[i][j];
      c.dist_dump_to_load[j][i] = kLoadToDump[i][j] * 1.1;
    }
  }

  // One half-rate maintenance window per load site, staggered over the shift.
  for (int i = 0; i < kSites; ++i) {
    const double start = 60.0 + 30.0 * i;
    c.ability_schedules.push_back({{start, start + 30.0, 0.5}});
  }
  validate(c);
  return c;
}

ScenarioConfig reduced_scenario(int m, int n, int k, double minutes) {
  if (m < 1) throw ValidationError("num_load_sites", "must be >= 1");
  if (n < 1) throw ValidationError("num_dump_sites", "must be >= 1");
  if (k < 1) throw ValidationError("trucks", "need at least one truck");
  if (!(minutes > 0.0)) throw ValidationError("episode_minutes", "must be > 0");

  ScenarioConfig c;
  c.num_load_sites = m;
  c.num_dump_sites = n;
  c.speed_limit_kmh = 25.0;
  c.episode_minutes = minutes;
  c.dump_positions_per_site = 2;
  c.jam_probability_per_trip = 0.1;
  c.jam_delay_minutes = {1.0, 4.0};
  c.seed = 0;

  constexpr double kCapacities[] = {20.0, 30.0, 40.0};
  for (int i = 0; i < k; ++i) c.trucks.push_back({kCapacities[i % 3], 25.0});

  // One shovel per load site; the nearer sites have the slower shovels so the
  // nearest-first choice is not automatically the best one.
  constexpr double kRates[] = {2.0, 6.0, 4.0};
  for (int i = 0; i < m; ++i) {
    c.shovels.push_back({i, kRates[i % 3]});
    c.dist_charge_to_load.push_back(1.0 + static_cast<double>(i));
  }
  c.dist_load_to_dump.assign(m, std::vector<double>(n));
  c.dist_dump_to_load.assign(n, std::vector<double>(m));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double km = 2.0 + 0.5 * static_cast<double>((i + 2 * j) % 4);
      c.dist_load_to_dump[i][j] = km;
      c.dist_dump_to_load[j][i] = km * 1.1;
    }
  }
  c.ability_schedules.assign(m, {});
  validate(c);
  return c;
}

ScenarioConfig resize_fleet(const ScenarioConfig& config, int k) {
  if (k < 1) throw ValidationError("trucks", "fleet size must be >= 1");
  if (config.trucks.empty()) throw ValidationError("trucks", "need at least one truck");
  ScenarioConfig out = config;
  out.trucks.clear();
  for (int i = 0; i < k; ++i) out.trucks.push_back(config.trucks[i % config.trucks.size()]);
  return out;
}

}  // namespace minedispatch
