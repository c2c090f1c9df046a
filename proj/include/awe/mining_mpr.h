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

#ifndef AWE_MINING_MPR_H_
#define AWE_MINING_MPR_H_

// Positive-pair mining from phone alignments: every run of n_min..n_max
// consecutive phones is an n-gram occurrence keyed by its labels joined with
// "|"; occurrences sharing a key form positive pairs.

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "awe/corpus_io.h"
#include "awe/pairs.h"

namespace awe {

const std::unordered_set<std::string>& default_silence_labels();

struct NgramOccurrence {
  SegmentRef seg;
  std::string key;
  int n = 0;
  std::string speaker_id;
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Silence labels break runs and never appear inside a key.
std::vector<NgramOccurrence> extract_ngrams(
    const PhoneAlignment& alignment, int n_min, int n_max, double frame_period_ms,
    const std::unordered_set<std::string>& silence = default_silence_labels());

class NgramIndex {
 public:
  using Entries = std::map<std::string, std::vector<NgramOccurrence>>;

  explicit NgramIndex(Entries entries) : entries_(std::move(entries)) {}

  size_t size() const { return entries_.size(); }
  const Entries& entries() const { return entries_; }
  const std::vector<NgramOccurrence>* find(const std::string& key) const;
  size_t num_occurrences() const;

 private:
  Entries entries_;
};

/// Groups occurrences by key; each list is sorted by segment.
NgramIndex index_ngrams(std::vector<NgramOccurrence> occurrences);

/// All unordered same-key pairs. Keys with more than `max_instances_per_type`
/// occurrences are first subsampled uniformly without replacement (0 means no
/// cap). With `exclude_overlap`, pairs whose segments overlap within one
/// utterance are dropped. Pairs of identical segments are never emitted.
PairSet mine_pairs(const NgramIndex& index, size_t max_instances_per_type, uint64_t seed,
                   bool exclude_overlap);

/// Quadratic reference enumeration: all i < j with equal keys, no cap.
PairSet brute_force_pairs(const std::vector<NgramOccurrence>& occurrences);

bool segments_overlap(const SegmentRef& a, const SegmentRef& b);

struct MprSettings {
  int n_min = 2;
  int n_max = 5;
  size_t max_instances_per_type = 300;
  bool exclude_overlap = true;
  std::unordered_set<std::string> silence = default_silence_labels();
};

struct MprResult {
  PairSet pairs;
  size_t n_occurrences = 0;
  size_t n_keys = 0;
};

/// extract_ngrams over every alignment, then index_ngrams and mine_pairs.
MprResult mine_mpr(const std::vector<PhoneAlignment>& alignments, const MprSettings& settings,
                   double frame_period_ms, uint64_t seed);

}  // namespace awe

#endif  // AWE_MINING_MPR_H_
