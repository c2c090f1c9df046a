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

#ifndef AWE_EVALUATION_H_
#define AWE_EVALUATION_H_

// Same-different word discrimination. Every unordered pair of test segments
// is scored by cosine similarity and labelled positive when the two share a
// word; the report's MAP is the average precision of that ranked list.

#include <optional>
#include <string>
#include <vector>

#include "awe/common.h"
#include "awe/corpus_io.h"
#include "awe/features.h"
#include "awe/pooling.h"

namespace awe {

struct EvalItem {
  AweVector awe;
  std::string word;
  std::string speaker_id;
  SegmentRef seg;
};

struct CollectedItems {
  std::vector<EvalItem> items;
  size_t dropped = 0;  // segments the pooler cannot take
};

/// Pools each word segment with mean pooling (pooler == nullptr) or the
/// learned pooler. With a pooler, segments shorter than the kernel or longer
/// than its position table are dropped and counted.
CollectedItems collect_eval_awes(const FeatureStore& store, const std::vector<WordSegment>& segments,
                                 const PoolerParamsF* pooler = nullptr);

struct EvalOptions {
  bool cross_speaker_only = false;
};

struct EvalReport {
  double map = 0.0;
  std::optional<double> auc_roc;  // absent without negative pairs
  size_t n_items = 0;
  size_t n_pairs = 0;
  size_t n_positive_pairs = 0;
  EvalOptions options;

  /// "map=<float> n_items=<int> n_pairs=<int> n_pos=<int>"
  std::string machine_line() const;
  std::string text() const;
};

/// Pairs ranked by (cosine desc, canonical pair id asc); the pair id of items
/// i < j is its index in row-major upper-triangle order.
EvalReport samediff_map(const std::vector<EvalItem>& items, const EvalOptions& options = {});

/// Quadratic reference for samediff_map; at most 500 items.
double brute_force_map(const std::vector<EvalItem>& items, bool cross_speaker_only = false);

}  // namespace awe

#endif  // AWE_EVALUATION_H_
