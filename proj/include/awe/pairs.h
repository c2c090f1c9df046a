// Copyright 2026 The AWE Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AWE_PAIRS_H_
#define AWE_PAIRS_H_

// Positive pairs mined for contrastive training, and their TSV form:
//   uttA  startA  endA  uttB  startB  endB  key  provenance
// Frame bounds are half-open. A pair is stored in canonical order (a < b by
// utt_id, then start_frame, then end_frame).

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "awe/features.h"

namespace awe {

enum class Provenance { kMpr, kKnn, kGroundTruth };

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

struct SegmentPair {
  SegmentRef a;
  SegmentRef b;
  std::string key;

  friend bool operator==(const SegmentPair&, const SegmentPair&) = default;
  friend auto operator<=>(const SegmentPair&, const SegmentPair&) = default;
};

/// Builds a pair in canonical order. Identical segments are rejected.
SegmentPair make_pair(SegmentRef x, SegmentRef y, std::string key);

struct PairSet {
  std::vector<SegmentPair> pairs;
  Provenance provenance = Provenance::kMpr;

  size_t size() const { return pairs.size(); }
};

/// Uniform sample of `n` pairs without replacement, in their original order.
/// Returns the whole set when n >= size().
PairSet subsample_pairs(const PairSet& set, size_t n, uint64_t seed);

/// Sorted copy, for set comparisons.
std::vector<SegmentPair> sorted_pairs(const PairSet& set);

void write_pairs(const PairSet& set, const std::filesystem::path& path);
/// Reads a pair file; all lines must carry the same provenance.
PairSet read_pairs(const std::filesystem::path& path);

}  // namespace awe

#endif  // AWE_PAIRS_H_
