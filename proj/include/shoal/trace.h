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

// Update traces: one ASCII line per update, "t id x y vx vy\n", with t in
// seconds to the microsecond and doubles printed with enough digits to
// round-trip exactly.

#ifndef SHOAL_TRACE_H_
#define SHOAL_TRACE_H_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shoal/schooling.h"

namespace shoal {

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string FormatTraceLine(const UpdateMessage& msg);
// Parses one line without its newline.  Throws std::invalid_argument.
UpdateMessage ParseTraceLine(std::string_view line);

class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void Write(const UpdateMessage& msg);
  void Close();
  std::size_t written() const { return written_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t written_ = 0;
};

class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path);
  // Next message, or nullopt at a clean end of file.  Throws TraceError for a
  // malformed or truncated line.
  std::optional<UpdateMessage> Next();
  std::size_t line() const { return line_; }

 private:
  std::ifstream in_;
  std::size_t line_ = 0;
};

void WriteTrace(const std::filesystem::path& path, const std::vector<UpdateMessage>& msgs);
std::vector<UpdateMessage> ReadTrace(const std::filesystem::path& path);

}  // namespace shoal

#endif  // SHOAL_TRACE_H_
