#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "minedispatch/errors.hpp"
#include "minedispatch/scenario.hpp"

using namespace minedispatch;

namespace {

std::string field_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

nlohmann::json default_doc() { return nlohmann::json::parse(serialize_scenario(default_scenario())); }

}  // namespace

TEST_CASE("default scenario matches the mine description") {
  const ScenarioConfig c = default_scenario();
  CHECK(c.num_load_sites == 5);
  CHECK(c.num_dump_sites == 5);
  CHECK(c.num_trucks() == 71);
  CHECK(c.num_shovels() == 21);
  CHECK(c.episode_minutes == 240.0);
  CHECK(c.dist_load_to_dump[0][0] != c.dist_dump_to_load[0][0]);
  CHECK_NOTHROW(validate(c));

  int per_class[3] = {0, 0, 0};
  for (const auto& t : c.trucks) per_class[static_cast<int>(t.capacity_tons / 20.0) - 1]++;
  CHECK(per_class[0] == 24);
  CHECK(per_class[1] == 24);
  CHECK(per_class[2] == 23);
}

TEST_CASE("return legs are ten percent longer") {
  const ScenarioConfig c = default_scenario();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(c.dist_dump_to_load[j][i] == doctest::Approx(1.1 * c.dist_load_to_dump[i][j]));
}

TEST_CASE("reduced scenarios") {
  const ScenarioConfig a = reduced_scenario(2, 2, 8, 60);
  CHECK(a.num_trucks() == 8);
  CHECK_NOTHROW(validate(a));
  CHECK(a == reduced_scenario(2, 2, 8, 60));

  const ScenarioConfig one = reduced_scenario(1, 1, 1, 10);
  CHECK(one.num_trucks() == 1);
  CHECK_NOTHROW(validate(one));

  CHECK_THROWS_AS(reduced_scenario(0, 1, 1, 10), ValidationError);
  CHECK_THROWS_AS(reduced_scenario(1, 0, 1, 10), ValidationError);
  CHECK_THROWS_AS(reduced_scenario(1, 1, 0, 10), ValidationError);
  CHECK_THROWS_AS(reduced_scenario(1, 1, 1, 0), ValidationError);
}

TEST_CASE("serialize then parse reproduces the config") {
  for (const ScenarioConfig& c : {default_scenario(), reduced_scenario(3, 2, 5, 30)}) {
    CHECK(parse_scenario(serialize_scenario(c)) == c);
  }
}

TEST_CASE("save and load round trip through a file") {
  const auto path = std::filesystem::temp_directory_path() / "md_scenario_roundtrip.json";
  save_scenario(default_scenario(), path.string());
  CHECK(load_scenario(path.string()) == default_scenario());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_scenario(path.string()), IoError);
}

TEST_CASE("validation names the offending field") {
  auto doc = default_doc();
  doc["num_load_sites"] = 0;
  CHECK(field_of(doc.dump()) == "num_load_sites");

  doc = default_doc();
  doc["dist_load_to_dump"][1][2] = -3.0;
  CHECK(field_of(doc.dump()) == "dist_load_to_dump");

  doc = default_doc();
  doc["jam_probability_per_trip"] = 1.5;
  CHECK(field_of(doc.dump()) == "jam_probability_per_trip");

  doc = default_doc();
  doc["shovels"][0]["load_site_index"] = 9;
  CHECK(field_of(doc.dump()) == "shovels");

  doc = default_doc();
  doc["ability_schedules"][0] = {{10.0, 5.0, 0.5}};
  CHECK(field_of(doc.dump()) == "ability_schedules");
}

TEST_CASE("parser rejects malformed documents") {
  auto doc = default_doc();
  doc["mystery"] = 1;
  CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);

  doc = default_doc();
  doc.erase("episode_minutes");
  CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);

  doc = default_doc();
  doc["trucks"][0]["colour"] = "red";
  CHECK_THROWS_AS(parse_scenario(doc.dump()), ParseError);

  CHECK_THROWS_AS(parse_scenario("{\n  \"num_load_sites\": 5,\n  oops\n}"), ParseError);
  try {
    parse_scenario("{\n  \"num_load_sites\": 5,\n  oops\n}");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario("[1, 2]"), ParseError);
}

TEST_CASE("resizing a fleet cycles the truck specs") {
  const ScenarioConfig base = default_scenario();
  const ScenarioConfig small = resize_fleet(base, 4);
  REQUIRE(small.num_trucks() == 4);
  for (int i = 0; i < 4; ++i) CHECK(small.trucks[i] == base.trucks[i % 71]);
  const ScenarioConfig big = resize_fleet(base, 120);
  REQUIRE(big.num_trucks() == 120);
  CHECK(big.trucks[71] == base.trucks[0]);
  CHECK(big.trucks[119] == base.trucks[48]);
  CHECK_THROWS_AS(resize_fleet(base, 0), ValidationError);
}
