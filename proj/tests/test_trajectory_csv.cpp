#include <sstream>

#include <catch_amalgamated.hpp>

#include "velo/trajectory_csv.hpp"

using velo::CsvError;
using velo::load_trajectories_csv;

namespace {

std::vector<velo::Trajectory> load(const std::string& text) {
  std::istringstream in(text);
  return load_trajectories_csv(in);
}

}  // namespace

TEST_CASE("trajectory csv happy path, epoch seconds") {
  const auto trajs = load(
      "user_id,traj_id,timestamp,lat,lon\n"
      "u1,t1,100,44.84,11.62\n"
      "u1,t1,105,44.841,11.621\n"
      "u2,t2,50,44.9,11.7\n"
      "u2,t2,55,44.901,11.701\n");
  REQUIRE(trajs.size() == 2);
  REQUIRE(trajs[0].traj_id() == "t1");
  REQUIRE(trajs[0].user_id() == "u1");
  REQUIRE(trajs[0].points()[1].t() == 105);
  REQUIRE(trajs[1].points()[0].loc().lat() == 44.9);
}

TEST_CASE("trajectory csv iso-8601 timestamps") {
  const auto trajs = load(
      "user_id,traj_id,timestamp,lat,lon\n"
      "u1,t1,1970-01-01T00:01:40Z,44.84,11.62\n"
      "u1,t1,1970-01-01T00:01:45Z,44.841,11.621\n");
  REQUIRE(trajs.size() == 1);
  REQUIRE(trajs[0].points()[0].t() == 100);
  REQUIRE(trajs[0].points()[1].t() == 105);
}

TEST_CASE("iso-8601 parsing") {
  REQUIRE(velo::parse_iso8601_utc("1970-01-01T00:00:00Z") == 0);
  REQUIRE(velo::parse_iso8601_utc("2021-05-03T07:00:00Z") == 1620025200);
  REQUIRE(velo::parse_iso8601_utc("2021-05-03T07:00:00") == 1620025200);       // bare = UTC
  REQUIRE(velo::parse_iso8601_utc("2021-05-03T09:00:00+02:00") == 1620025200);
  REQUIRE(velo::parse_iso8601_utc("2021-05-03T09:00:00+0200") == 1620025200);
  REQUIRE(velo::parse_iso8601_utc("2021-05-03T05:30:00-01:30") == 1620025200);
  REQUIRE_THROWS_AS(velo::parse_iso8601_utc("2021-05-03T07:00:00.5Z"), std::invalid_argument);
  REQUIRE_THROWS_AS(velo::parse_iso8601_utc("2021-13-03T07:00:00Z"), std::invalid_argument);
  REQUIRE_THROWS_AS(velo::parse_iso8601_utc("garbage"), std::invalid_argument);
}

TEST_CASE("trajectory csv rejections carry line numbers") {
  SECTION("mixed timestamp forms") {
    try {
      load(
          "user_id,traj_id,timestamp,lat,lon\n"
          "u1,t1,100,44.84,11.62\n"
          "u1,t1,1970-01-01T00:01:45Z,44.841,11.621\n");
      FAIL("expected CsvError");
    } catch (const CsvError& e) {
      REQUIRE(e.line() == 3);
    }
  }
  SECTION("non-contiguous traj_id") {
    try {
      load(
          "user_id,traj_id,timestamp,lat,lon\n"
          "u1,t1,100,44.84,11.62\n"
          "u1,t1,105,44.84,11.62\n"
          "u1,t2,100,44.84,11.62\n"
          "u1,t2,105,44.84,11.62\n"
          "u1,t1,200,44.84,11.62\n");
      FAIL("expected CsvError");
    } catch (const CsvError& e) {
      REQUIRE(e.line() == 6);
    }
  }
  SECTION("unsorted timestamps") {
    try {
      load(
          "user_id,traj_id,timestamp,lat,lon\n"
          "u1,t1,100,44.84,11.62\n"
          "u1,t1,99,44.84,11.62\n");
      FAIL("expected CsvError");
    } catch (const CsvError& e) {
      REQUIRE(e.line() == 3);
    }
  }
  SECTION("bad header") {
    REQUIRE_THROWS_AS(load("a,b,c,d,e\n"), CsvError);
  }
  SECTION("wrong field count") {
    REQUIRE_THROWS_AS(load("user_id,traj_id,timestamp,lat,lon\nu1,t1,100,44.84\n"), CsvError);
  }
  SECTION("coordinate out of range") {
    REQUIRE_THROWS_AS(load("user_id,traj_id,timestamp,lat,lon\nu1,t1,100,95.0,11.6\n"), CsvError);
  }
  SECTION("traj_id owned by two users") {
    REQUIRE_THROWS_AS(load("user_id,traj_id,timestamp,lat,lon\n"
                           "u1,t1,100,44.84,11.62\n"
                           "u2,t1,105,44.84,11.63\n"),
                      CsvError);
  }
}

TEST_CASE("trajectory csv round trip") {
  const std::string text =
      "user_id,traj_id,timestamp,lat,lon\n"
      "u1,t1,100,44.8400000,11.6200000\n"
      "u1,t1,105,44.8410000,11.6210000\n"
      "u2,t2,50,44.9000000,11.7000000\n"
      "u2,t2,60,44.9010000,11.7010000\n";
  const auto trajs = load(text);
  std::ostringstream out;
  velo::write_trajectories_csv(out, trajs);
  REQUIRE(out.str() == text);
}

TEST_CASE("csv quoting round trips") {
  std::ostringstream out;
  velo::csv::write_row(out, std::vector<std::string>{"plain", "with,comma", "with\"quote"});
  REQUIRE(out.str() == "plain,\"with,comma\",\"with\"\"quote\"\n");

  std::istringstream in(out.str());
  velo::csv::Reader reader(in);
  const auto row = reader.next();
  REQUIRE(row.has_value());
  REQUIRE((*row)[1] == "with,comma");
  REQUIRE((*row)[2] == "with\"quote");
}
