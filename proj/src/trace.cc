// Copyright 2026 The Shoal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "shoal/trace.h"

#include <charconv>
#include <cinttypes>
#include <system_error>

namespace shoal {

namespace {

std::string_view NextField(std::string_view& rest) {
  const std::size_t end = rest.find(' ');
  std::string_view field = rest.substr(0, end);
  rest = end == std::string_view::npos ? std::string_view() : rest.substr(end + 1);
  return field;
}

template <typename T>
T ParseNumber(std::string_view field, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument(std::string("bad ") + name + " field '" +
                                std::string(field) + "'");
  }
  return value;
}

// "<seconds>.<6 digits>", optionally negative.
Timestamp ParseTime(std::string_view field) {
  bool negative = false;
  std::string_view s = field;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  const std::size_t dot = s.find('.');
  if (dot == std::string_view::npos || s.size() - dot - 1 != 6) {
    throw std::invalid_argument("bad time field '" + std::string(field) + "'");
  }
  const auto secs = ParseNumber<std::int64_t>(s.substr(0, dot), "time");
  const auto micros = ParseNumber<std::int64_t>(s.substr(dot + 1), "time");
  if (secs < 0 || micros < 0) {
    throw std::invalid_argument("bad time field '" + std::string(field) + "'");
  }
  const Timestamp t = secs * kMicrosPerSecond + micros;
  return negative ? -t : t;
}

}  // namespace

std::string FormatTraceLine(const UpdateMessage& msg) {
  const Timestamp mag = msg.t < 0 ? -msg.t : msg.t;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s%" PRId64 ".%06" PRId64 " %" PRIu64
                " %.17g %.17g %.17g %.17g\n",
                msg.t < 0 ? "-" : "", mag / kMicrosPerSecond, mag % kMicrosPerSecond,
                msg.id, msg.loc.x, msg.loc.y, msg.vel.x, msg.vel.y);
  return buf;
}

UpdateMessage ParseTraceLine(std::string_view line) {
  std::string_view rest = line;
  UpdateMessage msg;
  msg.t = ParseTime(NextField(rest));
  msg.id = ParseNumber<ObjectId>(NextField(rest), "id");
  msg.loc.x = ParseNumber<double>(NextField(rest), "x");
  msg.loc.y = ParseNumber<double>(NextField(rest), "y");
  msg.vel.x = ParseNumber<double>(NextField(rest), "vx");
  msg.vel.y = ParseNumber<double>(NextField(rest), "vy");
  if (!rest.empty()) throw std::invalid_argument("trailing fields");
  return msg;
}

TraceWriter::TraceWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) {
    throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  }
}

void TraceWriter::Write(const UpdateMessage& msg) {
  const std::string line = FormatTraceLine(msg);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out_) throw std::runtime_error("write failed on " + path_.string());
  ++written_;
}

void TraceWriter::Close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("close failed on " + path_.string());
}

TraceReader::TraceReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) {
    throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  }
}

std::optional<UpdateMessage> TraceReader::Next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  ++line_;
  if (in_.eof()) throw TraceError(line_, "truncated line (no newline)");
  try {
    return ParseTraceLine(line);
  } catch (const std::invalid_argument& e) {
    throw TraceError(line_, e.what());
  }
}

void WriteTrace(const std::filesystem::path& path, const std::vector<UpdateMessage>& msgs) {
  TraceWriter w(path);
  for (const auto& m : msgs) w.Write(m);
  w.Close();
}

std::vector<UpdateMessage> ReadTrace(const std::filesystem::path& path) {
  TraceReader r(path);
  std::vector<UpdateMessage> out;
  while (auto m = r.Next()) out.push_back(*m);
  return out;
}

}  // namespace shoal
