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

#ifndef AWE_MINING_KNN_H_
#define AWE_MINING_KNN_H_

// Baseline pair miner: random speech segments, mean-pooled, searched with an
// inverted-file index under dot-product similarity; each segment's top-k
// neighbours become positives.

#include <cstdint>
#include <vector>

#include "awe/common.h"
#include "awe/features.h"
#include "awe/pairs.h"

namespace awe {

struct SegmentSampling {
  double min_ms = 80.0;
  double max_ms = 310.0;
  double min_gap_ms = 80.0;
  uint64_t seed = 0;
};

/// Greedy left-to-right placement per utterance: a random offset below one
/// gap, then segments whose whole-frame durations are uniform within
/// [min_ms, max_ms], separated by at least min_gap_ms.
std::vector<SegmentRef> sample_segments(const FeatureStore& store, const SegmentSampling& opts);

/// Coarse k-means quantizer with one inverted list per centroid.
struct AnnIndex {
  RowMatrixXf centroids;                    // nlist x H
  std::vector<std::vector<uint32_t>> lists;  // vector ids per centroid
  RowMatrixXf vectors;                      // N x H, row = id
  int nprobe = 1;

  int nlist() const { return static_cast<int>(centroids.rows()); }
};

AnnIndex build_ann_index(const RowMatrixXf& vectors, int nlist, int nprobe, uint64_t seed);

struct Neighbor {
  uint32_t id;
  double score;
};

/// Per query: top-k ids by dot product, ordered by (score desc, id asc).
/// exclude[i], when >= 0, is an id never returned for query i.
std::vector<std::vector<Neighbor>> ann_search(const AnnIndex& index, const RowMatrixXf& queries,
                                              int k, const std::vector<int64_t>& exclude);
std::vector<std::vector<Neighbor>> exact_search(const RowMatrixXf& vectors,
                                                const RowMatrixXf& queries, int k,
                                                const std::vector<int64_t>& exclude);

/// Deduplicated unordered (query, neighbour) pairs with key "knn".
PairSet neighbor_pairs(const std::vector<std::vector<Neighbor>>& neighbors,
                       const std::vector<SegmentRef>& segments);

/// Every indexed vector queries the index, itself excluded.
PairSet knn_pairs(const AnnIndex& index, const std::vector<SegmentRef>& segments, int k);

/// Exhaustive reference for knn_pairs.
PairSet exact_knn(const RowMatrixXf& vectors, const std::vector<SegmentRef>& segments, int k);

/// Rows scaled to unit norm (for the cosine option).
RowMatrixXf normalize_rows(const RowMatrixXf& m);

}  // namespace awe

#endif  // AWE_MINING_KNN_H_
