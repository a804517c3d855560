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

#include "shoal/spatial.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shoal {

namespace {

// Orientation of a sub-square relative to the canonical curve.  kSwapMask
// exchanges the i and j axes; kInvertMask reflects both.
constexpr int kSwapMask = 1;
constexpr int kInvertMask = 2;

// Canonical orientation: position -> ij and back, ij = (i << 1) | j.
constexpr int kPosToIJ[4] = {0, 1, 3, 2};
constexpr int kIJToPos[4] = {0, 1, 3, 2};
// Orientation change applied when descending into sub-square `pos`.
constexpr int kPosToOrientation[4] = {kSwapMask, 0, 0, kInvertMask | kSwapMask};

constexpr int SwapBits(int ij) { return ((ij & 1) << 1) | (ij >> 1); }

void CheckLevel(int level) {
  if (level < 0 || level > kMaxLevel) {
    throw std::invalid_argument("spatial level out of range: " +
                                std::to_string(level));
  }
}

}  // namespace

std::uint64_t HilbertPosition(int level, std::uint32_t i, std::uint32_t j) {
  int orientation = 0;
  std::uint64_t pos = 0;
  for (int b = level - 1; b >= 0; --b) {
    int ij = static_cast<int>(((i >> b) & 1u) << 1 | ((j >> b) & 1u));
    int t = ij;
    if (orientation & kSwapMask) t = SwapBits(t);
    if (orientation & kInvertMask) t ^= 3;
    int digit = kIJToPos[t];
    pos = (pos << 2) | static_cast<std::uint64_t>(digit);
    orientation ^= kPosToOrientation[digit];
  }
  return pos;
}

std::pair<std::uint32_t, std::uint32_t> HilbertCell(int level,
                                                    std::uint64_t position) {
  int orientation = 0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  for (int b = level - 1; b >= 0; --b) {
    int digit = static_cast<int>((position >> (2 * b)) & 3u);
    int t = kPosToIJ[digit];
    if (orientation & kInvertMask) t ^= 3;
    if (orientation & kSwapMask) t = SwapBits(t);
    i = (i << 1) | static_cast<std::uint32_t>(t >> 1);
    j = (j << 1) | static_cast<std::uint32_t>(t & 1);
    orientation ^= kPosToOrientation[digit];
  }
  return {i, j};
}

// ---------------------------------------------------------------------------
// SpatialIndex

SpatialIndex::SpatialIndex(int level, std::uint64_t position)
    : level_(level), position_(position) {
  CheckLevel(level);
  if (level < 32 && position >> (2 * level) != 0) {
    throw std::invalid_argument("curve position exceeds 4^level");
  }
}

int SpatialIndex::digit(int i) const {
  if (i < 1 || i > level_) throw std::out_of_range("digit index");
  return static_cast<int>((position_ >> (2 * (level_ - i))) & 3u);
}

SpatialIndex SpatialIndex::Parent(int level) const {
  if (level < 0 || level > level_) throw std::invalid_argument("parent level");
  return SpatialIndex(level, position_ >> (2 * (level_ - level)));
}

SpatialIndex SpatialIndex::Child(int digit) const {
  if (digit < 0 || digit > 3) throw std::invalid_argument("child digit");
  return SpatialIndex(level_ + 1, (position_ << 2) | static_cast<unsigned>(digit));
}

bool SpatialIndex::Contains(const SpatialIndex& other) const {
  return other.level_ >= level_ && other.Parent(level_) == *this;
}

double SpatialIndex::Fraction() const {
  return std::ldexp(static_cast<double>(position_), -2 * level_);
}

RowKey SpatialIndex::ToRowKey() const {
  std::string bytes(static_cast<std::size_t>(level_), '0');
  for (int i = 1; i <= level_; ++i) {
    bytes[static_cast<std::size_t>(i - 1)] = static_cast<char>('0' + digit(i));
  }
  return RowKey(std::move(bytes));
}

SpatialIndex SpatialIndex::FromRowKey(const RowKey& key) {
  const std::string& bytes = key.bytes();
  if (bytes.size() > static_cast<std::size_t>(kMaxLevel)) {
    throw std::invalid_argument("spatial row key too long");
  }
  std::uint64_t pos = 0;
  for (char c : bytes) {
    if (c < '0' || c > '3') throw std::invalid_argument("bad spatial key digit");
    pos = (pos << 2) | static_cast<std::uint64_t>(c - '0');
  }
  return SpatialIndex(static_cast<int>(bytes.size()), pos);
}

std::string SpatialIndex::ToString() const {
  return "L" + std::to_string(level_) + ":" + ToRowKey().bytes();
}

SpatialIndex SpatialIndex::Parse(std::string_view text) {
  if (text.size() < 3 || text[0] != 'L') {
    throw std::invalid_argument("spatial index text must look like L<level>:<digits>");
  }
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("spatial index text missing ':'");
  }
  std::string level_text(text.substr(1, colon - 1));
  if (level_text.empty() ||
      !std::all_of(level_text.begin(), level_text.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    throw std::invalid_argument("bad spatial level");
  }
  int level = std::stoi(level_text);
  std::string_view digits = text.substr(colon + 1);
  if (static_cast<int>(digits.size()) != level) {
    throw std::invalid_argument("digit count does not match level");
  }
  return FromRowKey(RowKey(digits));
}

// ---------------------------------------------------------------------------
// SpatialGrid

SpatialGrid::SpatialGrid(double map_size) : map_size_(map_size) {
  if (!(map_size > 0.0) || !std::isfinite(map_size)) {
    throw std::invalid_argument("map size must be positive");
  }
}

bool SpatialGrid::InBounds(Vec2 p) const {
  return p.x >= 0.0 && p.x <= map_size_ && p.y >= 0.0 && p.y <= map_size_;
}

std::uint32_t SpatialGrid::GridCoordinate(double v, int level) const {
  const double cells = std::ldexp(1.0, level);
  double scaled = std::floor(v / map_size_ * cells);
  // The maximal edge of the map is closed and belongs to the last cell.
  scaled = std::clamp(scaled, 0.0, cells - 1.0);
  return static_cast<std::uint32_t>(scaled);
}

SpatialIndex SpatialGrid::Encode(Vec2 p, int level) const {
  CheckLevel(level);
  if (!InBounds(p)) {
    throw std::out_of_range("point outside the map");
  }
  std::uint32_t i = GridCoordinate(p.x, level);
  std::uint32_t j = GridCoordinate(p.y, level);
  return SpatialIndex(level, HilbertPosition(level, i, j));
}

std::pair<std::uint32_t, std::uint32_t> SpatialGrid::CellCoordinates(
    const SpatialIndex& index) const {
  return HilbertCell(index.level(), index.position());
}

SpatialIndex SpatialGrid::FromCellCoordinates(int level, std::uint32_t i,
                                              std::uint32_t j) const {
  CheckLevel(level);
  return SpatialIndex(level, HilbertPosition(level, i, j));
}

CellBox SpatialGrid::Decode(const SpatialIndex& index) const {
  auto [i, j] = CellCoordinates(index);
  const double side = std::ldexp(map_size_, -index.level());
  CellBox cell;
  cell.level = index.level();
  cell.box.lo = {i * side, j * side};
  cell.box.hi = {(i + 1) * side, (j + 1) * side};
  return cell;
}

std::vector<SpatialIndex> SpatialGrid::Neighbors(const SpatialIndex& index) const {
  auto [i, j] = CellCoordinates(index);
  const std::int64_t n = std::int64_t{1} << index.level();
  std::vector<SpatialIndex> out;
  out.reserve(4);
  constexpr int kDi[4] = {1, 0, -1, 0};
  constexpr int kDj[4] = {0, 1, 0, -1};
  for (int k = 0; k < 4; ++k) {
    std::int64_t ni = static_cast<std::int64_t>(i) + kDi[k];
    std::int64_t nj = static_cast<std::int64_t>(j) + kDj[k];
    if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
    out.push_back(FromCellCoordinates(index.level(), static_cast<std::uint32_t>(ni),
                                      static_cast<std::uint32_t>(nj)));
  }
  return out;
}

double SpatialGrid::MinDistance(Vec2 p, const SpatialIndex& index) const {
  return shoal::MinDistance(p, Decode(index).box);
}

bool SpatialGrid::CellContains(const SpatialIndex& index, Vec2 p) const {
  return InBounds(p) && Encode(p, index.level()) == index;
}

std::pair<RowKey, RowKey> KeyRange(const SpatialIndex& cell, int spatial_level) {
  CheckLevel(spatial_level);
  if (cell.level() > spatial_level) {
    throw std::invalid_argument("NN level exceeds the spatial level");
  }
  std::string prefix = cell.ToRowKey().bytes();
  std::string first = prefix;
  first.append(static_cast<std::size_t>(spatial_level - cell.level()), '0');
  // '4' sorts after every digit, so prefix + "4" bounds all descendants and
  // precedes the next sibling's keys.
  std::string last = std::move(prefix);
  last.push_back('4');
  return {RowKey(std::move(first)), RowKey(std::move(last))};
}

}  // namespace shoal
