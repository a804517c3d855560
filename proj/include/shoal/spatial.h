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

// Hilbert-curve cell indexing of the square map [0, M]^2.
//
// A level-l index is a sequence of l base-4 digits d_1..d_l; read as the
// binary fraction 0.d_1 d_2 ... d_l it is the position of the cell along the
// level-l Hilbert curve.  The curve starts in the lower-left quadrant and
// visits lower-left, upper-left, upper-right, lower-right at the top level,
// so the prefix of length l' of any index is the index of its level-l'
// ancestor.
//
// Cells are half-open boxes [lo, hi) except on the map's maximal edges,
// which are closed.

#ifndef SHOAL_SPATIAL_H_
#define SHOAL_SPATIAL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/row_key.h"

namespace shoal {

inline constexpr int kMaxLevel = 30;

class SpatialIndex {
 public:
  constexpr SpatialIndex() = default;
  // `position` is the curve position in [0, 4^level).
  SpatialIndex(int level, std::uint64_t position);

  int level() const { return level_; }
  std::uint64_t position() const { return position_; }

  // Digit d_i for 1 <= i <= level, in {0, 1, 2, 3}.
  int digit(int i) const;

  // Ancestor at `level` (must be <= this->level()).
  SpatialIndex Parent(int level) const;
  SpatialIndex Child(int digit) const;
  bool Contains(const SpatialIndex& other) const;

  // The binary fraction (0.d_1...d_l)_2 in [0, 1).
  double Fraction() const;

  // Fixed-length row key: one byte '0'..'3' per digit, so byte order equals
  // curve order at a fixed level.
  RowKey ToRowKey() const;
  static SpatialIndex FromRowKey(const RowKey& key);

  // "L<level>:<digits>", e.g. "L3:201".
  std::string ToString() const;
  static SpatialIndex Parse(std::string_view text);

  friend bool operator==(const SpatialIndex&, const SpatialIndex&) = default;

 private:
  int level_ = 0;
  std::uint64_t position_ = 0;
};

struct CellBox {
  int level = 0;
  Box box;

  double side() const { return box.hi.x - box.lo.x; }
};

// Geometry of one map: encode/decode between points and cells.
class SpatialGrid {
 public:
  explicit SpatialGrid(double map_size = 1000.0);

  double map_size() const { return map_size_; }

  // Level-l index of the cell containing p.  Throws std::out_of_range if p
  // lies outside [0, M]^2.
  SpatialIndex Encode(Vec2 p, int level) const;
  CellBox Decode(const SpatialIndex& index) const;

  // Grid coordinates (column, row) of a cell at its level.
  std::pair<std::uint32_t, std::uint32_t> CellCoordinates(
      const SpatialIndex& index) const;
  SpatialIndex FromCellCoordinates(int level, std::uint32_t i,
                                   std::uint32_t j) const;

  // Same-level cells sharing a full edge; no wraparound.
  std::vector<SpatialIndex> Neighbors(const SpatialIndex& index) const;

  double MinDistance(Vec2 p, const SpatialIndex& index) const;

  bool InBounds(Vec2 p) const;
  // True when p belongs to the cell under the half-open convention.
  bool CellContains(const SpatialIndex& index, Vec2 p) const;

 private:
  std::uint32_t GridCoordinate(double v, int level) const;

  double map_size_;
};

// Half-open row-key range [first, second) covering exactly the 4^(l_s - l_n)
// level-l_s descendants of `cell`.  Throws std::invalid_argument when
// cell.level() > spatial_level.
std::pair<RowKey, RowKey> KeyRange(const SpatialIndex& cell, int spatial_level);

// Low-level curve primitives: position along the level-l curve of grid cell
// (i, j), and its inverse.
std::uint64_t HilbertPosition(int level, std::uint32_t i, std::uint32_t j);
std::pair<std::uint32_t, std::uint32_t> HilbertCell(int level,
                                                    std::uint64_t position);

}  // namespace shoal

#endif  // SHOAL_SPATIAL_H_
