#include "hettwin/config.hpp"
#include "hettwin/csv.hpp"
#include "hettwin/hetnet/scenario.hpp"

#include <doctest.h>

using namespace hettwin;

TEST_CASE("config parses sections, numbers, strings, arrays, booleans") {
  const Config cfg = Config::parse_string(
      "# comment\n"
      "[network]\n"
      "users = 25\n"
      "arena_m = 6e2  # trailing comment\n"
      "name = \"ref\"\n"
      "flag = true\n"
      "[pipeline]\n"
      "stl_periods = [24, 168]\n");
  CHECK(cfg.num("network", "users") == 25);
  CHECK(cfg.num("network", "arena_m") == 600.0);
  CHECK(cfg.str_or("network", "name", "") == "ref");
  CHECK(cfg.boolean_or("network", "flag", false));
  CHECK(cfg.array_or("pipeline", "stl_periods", {}) == std::vector<double>{24, 168});
  CHECK(cfg.num_or("pipeline", "missing", 7.0) == 7.0);
  CHECK(cfg.line_of("network", "users") == 3);
}

TEST_CASE("config errors carry line and field") {
  try {
    Config::parse_string("[a]\nkey value\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
  }
  try {
    Config::parse_string("[a]\nx = abc\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "a.x");
  }
  CHECK_THROWS_AS(Config::parse_string("[unterminated\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("[a]\nx = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS((void)Config::parse_string("").num("a", "b"), ConfigError);
}

TEST_CASE("scenario validation reports cross-field issues") {
  SUBCASE("valid config has no findings") {
    const Config cfg = Config::parse_string(
        "[network]\nusers = 10\n[trace]\nduration_h = 400\n"
        "[pipeline]\nstl_periods = [24, 168]\n");
    CHECK(validate_scenario_config(cfg).empty());
  }
  SUBCASE("short duration vs STL periods") {
    const Config cfg = Config::parse_string(
        "[trace]\nduration_h = 100\n[pipeline]\nstl_periods = [24, 168]\n");
    const auto issues = validate_scenario_config(cfg);
    REQUIRE(!issues.empty());
    bool found = false;
    for (const auto& m : issues)
      if (m.find("stl_periods") != std::string::npos) found = true;
    CHECK(found);
  }
  SUBCASE("non-positive users") {
    const Config cfg = Config::parse_string("[network]\nusers = 0\n");
    CHECK(!validate_scenario_config(cfg).empty());
  }
  SUBCASE("weekly seasonality needs two weekly periods") {
    const Config cfg = Config::parse_string(
        "[traffic]\nweekly_amp = 0.2\n[trace]\nduration_h = 200\n"
        "[pipeline]\nstl_periods = [24]\n");
    CHECK(!validate_scenario_config(cfg).empty());
  }
}

TEST_CASE("scenario defaults follow the tier parameters") {
  const Config cfg = Config::parse_string(
      "[network]\nusers = 4\nmacro_bs = 1\nsmall_bs = 2\nseed = 7\n");
  const Scenario sc = Scenario::from_config(cfg);
  REQUIRE(sc.num_bs() == 3);
  CHECK(sc.base_stations[0].tier == Tier::kMacro);
  CHECK(sc.base_stations[0].max_power_dbm == 40.0);
  CHECK(sc.base_stations[0].coverage_radius_m == 300.0);
  CHECK(sc.base_stations[1].tier == Tier::kSmall);
  CHECK(sc.base_stations[1].max_power_dbm == 17.0);
  CHECK(sc.base_stations[1].coverage_radius_m == 50.0);
  CHECK(sc.channel.bandwidth_hz == 20e6);
  CHECK(sc.channel.noise_dbm == -104.0);
  for (const auto& u : sc.users) {
    double wsum = 0.0;
    for (double w : u.qos_weight) wsum += w;
    CHECK(wsum == doctest::Approx(1.0));
    for (double q : u.qos_required) CHECK(q > 0.0);
  }
  // overridable
  const Config cfg2 = Config::parse_string(
      "[network]\nusers = 2\nmacro_bs = 1\nsmall_bs = 0\n[macro]\npower_dbm = 43\n");
  CHECK(Scenario::from_config(cfg2).base_stations[0].max_power_dbm == 43.0);
}

TEST_CASE("csv quoting round-trips awkward fields") {
  const std::vector<std::string> fields = {"plain", "with,comma", "with\"quote",
                                            "", "a,b\"c"};
  const std::string row = csv::join_row(fields);
  const auto back = csv::split_row(row.substr(0, row.size() - 1));
  CHECK(back == fields);
}
