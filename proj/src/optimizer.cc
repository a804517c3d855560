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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shoal/archive.h"

namespace shoal {

void DiskModelParams::Validate() const {
  const double values[] = {rotation_s, seek_s, disk_rate, k, record_bytes, objects,
                           update_rate};
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("disk model parameters must be positive and finite");
    }
  }
}

double FlushSeconds(const DiskModelParams& p, double n) {
  return p.latency() + p.buffer_bytes() / (n * p.disk_rate);
}

// One disk's partition is buffer_bytes / n; with balanced placement it
// receives update_rate / n records per second, so the fill time does not
// depend on n.
double FillSeconds(const DiskModelParams& p, double n) {
  const double partition = p.buffer_bytes() / n;
  const double incoming = p.update_rate * p.record_bytes / n;
  return partition / incoming;
}

double WriteUtilization(const DiskModelParams& p, double n) {
  return p.buffer_bytes() / (n * p.disk_rate * p.latency());
}

double ReadResolution(const DiskModelParams& p, double n) { return p.k * n / p.objects; }

double DiskObjective(const DiskModelParams& p, std::int64_t n) {
  const double d = static_cast<double>(n);
  return std::min(WriteUtilization(p, d), ReadResolution(p, d));
}

bool DoubleBufferFeasible(const DiskModelParams& p, std::int64_t n) {
  const double d = static_cast<double>(n);
  return FillSeconds(p, d) >= FlushSeconds(p, d);
}

namespace {

// Better of two counts under the objective; ties go to the smaller count.
std::int64_t Better(const DiskModelParams& p, std::int64_t a, std::int64_t b) {
  if (a > b) std::swap(a, b);
  return DiskObjective(p, b) > DiskObjective(p, a) ? b : a;
}

}  // namespace

OptimizerResult OptimizeDisks(const DiskModelParams& p, std::int64_t max_disks) {
  p.Validate();
  if (max_disks < 1) throw std::invalid_argument("max_disks must be at least 1");

  // U_d = R_d at n* = sqrt(s_B n_o / (R T_lat k)); the objective rises up to
  // the crossing and falls after it, so the best integer is floor or ceil.
  const double cross =
      std::sqrt(p.buffer_bytes() * p.objects / (p.disk_rate * p.latency() * p.k));
  const double capped = std::min(cross, 9.0e18);
  const auto lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(capped)));
  const auto hi = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(capped)));
  const std::int64_t free_best = Better(p, lo, hi);

  // T_d falls with n and T_m does not, so the feasible counts are [n_lo, inf).
  // Solve in closed form, then settle rounding against the predicate.
  std::int64_t n_lo;
  const double slack = FillSeconds(p, 1.0) - p.latency();
  if (slack <= 0.0) {
    n_lo = max_disks + 1;
  } else {
    const double bound = p.buffer_bytes() / (p.disk_rate * slack);
    n_lo = bound > static_cast<double>(max_disks)
               ? max_disks + 1
               : std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bound)));
    while (n_lo > 1 && DoubleBufferFeasible(p, n_lo - 1)) --n_lo;
    while (n_lo <= max_disks && !DoubleBufferFeasible(p, n_lo)) ++n_lo;
  }
  if (n_lo > max_disks) {
    std::ostringstream msg;
    msg << "no disk count in [1, " << max_disks
        << "] satisfies fill time >= flush time (fill " << FillSeconds(p, 1.0)
        << " s, flush at " << max_disks << " disks "
        << FlushSeconds(p, static_cast<double>(max_disks)) << " s)";
    throw InfeasibleError(msg.str());
  }

  // Unimodal objective over the interval [n_lo, max_disks].
  std::int64_t best;
  if (hi < n_lo) {
    best = n_lo;
  } else if (lo > max_disks) {
    best = max_disks;
  } else if (lo >= n_lo && hi <= max_disks) {
    best = free_best;
  } else {
    best = std::clamp(lo, n_lo, max_disks);
    best = Better(p, best, std::clamp(hi, n_lo, max_disks));
  }

  OptimizerResult r;
  r.disks = best;
  r.buffer_bytes = p.buffer_bytes();
  r.write_utilization = WriteUtilization(p, static_cast<double>(best));
  r.read_resolution = ReadResolution(p, static_cast<double>(best));
  r.flush_seconds = FlushSeconds(p, static_cast<double>(best));
  r.fill_seconds = FillSeconds(p, static_cast<double>(best));
  r.unconstrained_disks = free_best;
  r.constrained = best != free_best;
  return r;
}

}  // namespace shoal
