#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "velo/csv.hpp"
#include "velo/errors.hpp"
#include "velo/geo.hpp"

namespace velo {

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

inline bool parse_fixed_uint(std::string_view s, unsigned& out) {
  if (!all_digits(s)) return false;
  unsigned v = 0;
  for (char c : s) v = v * 10 + static_cast<unsigned>(c - '0');
  out = v;
  return true;
}

}  // namespace detail

enum class TimestampFormat { epoch_seconds, iso8601 };

/// Parses "YYYY-MM-DDTHH:MM:SS" with optional 'Z' or "+HH:MM"/"-HH:MM"/"±HHMM"
/// offset into epoch seconds. Bare timestamps are treated as UTC. Fractional
/// seconds are rejected: the toolkit works in whole seconds.
inline std::int64_t parse_iso8601_utc(std::string_view s) {
  const auto fail = [&] { throw std::invalid_argument("invalid ISO-8601 timestamp: " + std::string(s)); };
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':')
    fail();
  unsigned year, month, day, hour, minute, second;
  if (!detail::parse_fixed_uint(s.substr(0, 4), year) ||
      !detail::parse_fixed_uint(s.substr(5, 2), month) ||
      !detail::parse_fixed_uint(s.substr(8, 2), day) ||
      !detail::parse_fixed_uint(s.substr(11, 2), hour) ||
      !detail::parse_fixed_uint(s.substr(14, 2), minute) ||
      !detail::parse_fixed_uint(s.substr(17, 2), second))
    fail();
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
    fail();

  std::string_view rest = s.substr(19);
  std::int64_t offset_s = 0;
  if (!rest.empty()) {
    if (rest == "Z") {
      rest = {};
    } else if (rest[0] == '+' || rest[0] == '-') {
      const int sign = rest[0] == '+' ? 1 : -1;
      std::string_view o = rest.substr(1);
      unsigned oh = 0, om = 0;
      bool ok = false;
      if (o.size() == 5 && o[2] == ':')
        ok = detail::parse_fixed_uint(o.substr(0, 2), oh) && detail::parse_fixed_uint(o.substr(3, 2), om);
      else if (o.size() == 4)
        ok = detail::parse_fixed_uint(o.substr(0, 2), oh) && detail::parse_fixed_uint(o.substr(2, 2), om);
      else if (o.size() == 2)
        ok = detail::parse_fixed_uint(o, oh);
      if (!ok || oh > 23 || om > 59) fail();
      offset_s = sign * (static_cast<std::int64_t>(oh) * 3600 + om * 60);
      rest = {};
    } else {
      fail();  // includes fractional seconds: ".123" is not accepted
    }
  }
  const std::int64_t days = detail::days_from_civil(year, month, day);
  return days * 86400 + hour * 3600 + minute * 60 + second - offset_s;
}

/// Reads the trajectory CSV contract: header `user_id,traj_id,timestamp,lat,lon`,
/// timestamps either all epoch seconds or all ISO-8601 (auto-detected from the
/// first data row), rows of one traj_id contiguous and strictly time-sorted.
/// Violations raise CsvError with the offending line number.
inline std::vector<Trajectory> load_trajectories_csv(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw CsvError("empty trajectory file", 1);
  const std::vector<std::string> expected = {"user_id", "traj_id", "timestamp", "lat", "lon"};
  if (*header != expected)
    throw CsvError("bad header, expected user_id,traj_id,timestamp,lat,lon", reader.line());

  std::vector<Trajectory> result;
  std::unordered_set<std::string> finished;
  std::string cur_traj, cur_user;
  std::vector<SpatioTemporalPoint> cur_points;
  std::optional<TimestampFormat> format;

  const auto flush = [&] {
    if (cur_points.empty()) return;
    result.emplace_back(cur_user, cur_traj, std::move(cur_points));
    cur_points.clear();
  };

  while (auto row = reader.next()) {
    const std::size_t line = reader.line();
    if (row->size() != 5)
      throw CsvError("expected 5 fields, got " + std::to_string(row->size()), line);
    const std::string& user = (*row)[0];
    const std::string& traj = (*row)[1];
    const std::string& ts = (*row)[2];

    const TimestampFormat row_format =
        detail::all_digits(ts) ? TimestampFormat::epoch_seconds : TimestampFormat::iso8601;
    if (!format) format = row_format;
    if (*format != row_format)
      throw CsvError("mixed timestamp formats: file started as " +
                         std::string(*format == TimestampFormat::epoch_seconds ? "epoch seconds"
                                                                               : "ISO-8601"),
                     line);

    std::int64_t t = 0;
    if (row_format == TimestampFormat::epoch_seconds) {
      const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
      if (ec != std::errc{} || ptr != ts.data() + ts.size())
        throw CsvError("invalid epoch timestamp '" + ts + "'", line);
    } else {
      try {
        t = parse_iso8601_utc(ts);
      } catch (const std::invalid_argument& e) {
        throw CsvError(e.what(), line);
      }
    }

    double lat = 0.0, lon = 0.0;
    {
      const std::string& lat_s = (*row)[3];
      const std::string& lon_s = (*row)[4];
      auto r1 = std::from_chars(lat_s.data(), lat_s.data() + lat_s.size(), lat);
      auto r2 = std::from_chars(lon_s.data(), lon_s.data() + lon_s.size(), lon);
      if (r1.ec != std::errc{} || r1.ptr != lat_s.data() + lat_s.size())
        throw CsvError("invalid latitude '" + lat_s + "'", line);
      if (r2.ec != std::errc{} || r2.ptr != lon_s.data() + lon_s.size())
        throw CsvError("invalid longitude '" + lon_s + "'", line);
    }

    if (traj != cur_traj) {
      if (finished.contains(traj))
        throw CsvError("rows for traj_id '" + traj + "' are not contiguous", line);
      if (!cur_traj.empty()) {
        finished.insert(cur_traj);
        flush();
      }
      cur_traj = traj;
      cur_user = user;
    } else if (user != cur_user) {
      throw CsvError("traj_id '" + traj + "' spans multiple user_ids", line);
    }

    try {
      SpatioTemporalPoint point(t, GeoPoint(lat, lon));
      if (!cur_points.empty() && point.t() <= cur_points.back().t())
        throw CsvError("timestamps for traj_id '" + traj + "' not strictly increasing", line);
      cur_points.push_back(point);
    } catch (const std::invalid_argument& e) {
      throw CsvError(e.what(), line);
    }
  }
  flush();
  return result;
}

/// Writes the same contract back out, timestamps as epoch seconds.
inline void write_trajectories_csv(std::ostream& out, std::span<const Trajectory> trajectories) {
  out << "user_id,traj_id,timestamp,lat,lon\n";
  char buf[64];
  for (const Trajectory& traj : trajectories) {
    for (const SpatioTemporalPoint& p : traj.points()) {
      std::vector<std::string> row;
      row.reserve(5);
      row.push_back(traj.user_id());
      row.push_back(traj.traj_id());
      row.push_back(std::to_string(p.t()));
      std::snprintf(buf, sizeof buf, "%.7f", p.loc().lat());
      row.emplace_back(buf);
      std::snprintf(buf, sizeof buf, "%.7f", p.loc().lon());
      row.emplace_back(buf);
      csv::write_row(out, row);
    }
  }
}

}  // namespace velo
