// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpopt/trainloop.hpp"

namespace lpopt {

namespace {

void put_opt(std::ostream& os, const std::optional<double>& v) {
  os << ',';
  if (v) os << format_double(*v);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
T parse_num(std::string_view s, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument("csv line " + std::to_string(line_no) + ": bad number '" +
                          std::string(s) + "'");
  }
  return v;
}

std::optional<double> parse_opt(std::string_view s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  return parse_num<double>(s, line_no);
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_csv(std::ostream& os, const std::vector<TrainRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.t << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm_F);
    put_opt(os, r.qerr_W);
    put_opt(os, r.qerr_G);
    put_opt(os, r.qerr_M);
    put_opt(os, r.qerr_V);
    os << ',' << format_double(r.update_norm_F) << ',';
    if (r.wall_ns) os << *r.wall_ns;
    os << '\n';
  }
}

std::vector<TrainRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw InvalidArgument("csv: missing or unexpected header");
  }
  std::vector<TrainRecord> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 9) {
      throw InvalidArgument("csv line " + std::to_string(line_no) + ": expected 9 fields");
    }
    TrainRecord r;
    r.t = parse_num<std::uint64_t>(f[0], line_no);
    r.loss = parse_num<double>(f[1], line_no);
    r.grad_norm_F = parse_num<double>(f[2], line_no);
    r.qerr_W = parse_opt(f[3], line_no);
    r.qerr_G = parse_opt(f[4], line_no);
    r.qerr_M = parse_opt(f[5], line_no);
    r.qerr_V = parse_opt(f[6], line_no);
    r.update_norm_F = parse_num<double>(f[7], line_no);
    if (!f[8].empty()) r.wall_ns = parse_num<std::int64_t>(f[8], line_no);
    out.push_back(r);
  }
  return out;
}

void write_jsonl(std::ostream& os, const std::vector<TrainRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["t"] = r.t;
    j["loss"] = r.loss;
    j["grad_norm_F"] = r.grad_norm_F;
    j["qerr_W"] = opt_json(r.qerr_W);
    j["qerr_G"] = opt_json(r.qerr_G);
    j["qerr_M"] = opt_json(r.qerr_M);
    j["qerr_V"] = opt_json(r.qerr_V);
    j["update_norm_F"] = r.update_norm_F;
    j["wall_ns"] = r.wall_ns ? nlohmann::json(*r.wall_ns) : nlohmann::json(nullptr);
    os << j.dump() << '\n';
  }
}

}  // namespace lpopt
