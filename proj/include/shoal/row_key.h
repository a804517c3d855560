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

#ifndef SHOAL_ROW_KEY_H_
#define SHOAL_ROW_KEY_H_

#include <compare>
#include <functional>
#include <string>
#include <string_view>
#include <utility>

#include "shoal/geometry.h"

namespace shoal {

// An ordered byte string.  Ordering is plain lexicographic byte order
// (std::char_traits<char> compares as unsigned char), so the empty key sorts
// first.
class RowKey {
 public:
  RowKey() = default;
  explicit RowKey(std::string bytes) : bytes_(std::move(bytes)) {}
  explicit RowKey(std::string_view bytes) : bytes_(bytes) {}
  explicit RowKey(const char* bytes) : bytes_(bytes) {}

  // Row key of an object-keyed table (Location, Affiliation).
  static RowKey ForObject(ObjectId id) { return RowKey(std::to_string(id)); }

  const std::string& bytes() const { return bytes_; }
  bool empty() const { return bytes_.empty(); }
  std::size_t size() const { return bytes_.size(); }

  friend std::strong_ordering operator<=>(const RowKey& a, const RowKey& b) {
    int c = a.bytes_.compare(b.bytes_);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const RowKey& a, const RowKey& b) = default;

 private:
  std::string bytes_;
};

}  // namespace shoal

template <>
struct std::hash<shoal::RowKey> {
  std::size_t operator()(const shoal::RowKey& k) const noexcept {
    return std::hash<std::string>{}(k.bytes());
  }
};

#endif  // SHOAL_ROW_KEY_H_
