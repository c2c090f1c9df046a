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

#ifndef AWE_KMEANS_H_
#define AWE_KMEANS_H_

// Lloyd's k-means with k-means++ seeding. Used for frame-level cluster targets
// and for the coarse quantizer of the ANN index.
//
// Centroid checkpoint: "AWK1" | u32 k | u32 D | k*D f32, little-endian.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "awe/common.h"
#include "awe/features.h"

namespace awe {

struct Centroids {
  RowMatrixXf centers;                  // k x D
  std::vector<double> inertia_history;  // one entry per assignment pass

  int k() const { return static_cast<int>(centers.rows()); }
  int dim() const { return static_cast<int>(centers.cols()); }
};

struct KMeansOptions {
  int max_iters = 100;
  double tol = 1e-4;  // relative centroid shift
  uint64_t seed = 0;
  int n_init = 1;  // independent restarts; the lowest final inertia wins
};

Centroids fit_kmeans(const RowMatrixXf& data, int k, const KMeansOptions& options = {});

/// Lloyd iterations from caller-supplied initial centroids.
Centroids fit_kmeans_from(const RowMatrixXf& data, const RowMatrixXf& initial,
                          int max_iters = 100, double tol = 1e-4);

/// Nearest centroid per row by Euclidean distance; ties go to the lowest index.
std::vector<int32_t> assign(const Centroids& centroids, const RowMatrixXf& frames);

/// Sum of squared distances from each row to its nearest centroid.
double inertia(const Centroids& centroids, const RowMatrixXf& frames);

/// Uniform sample of `fraction` of all frames in the store (at least k rows
/// when available). Deterministic in seed.
RowMatrixXf sample_frames(const FeatureStore& store, double fraction, uint64_t seed,
                          size_t min_rows = 1);

/// Writes "utt_id<TAB>l0 l1 ... l(T-1)" per utterance, in store order.
void export_targets(const FeatureStore& store, const Centroids& centroids,
                    const std::filesystem::path& path);

void save_centroids(const Centroids& centroids, const std::filesystem::path& path);
Centroids load_centroids(const std::filesystem::path& path);

}  // namespace awe

#endif  // AWE_KMEANS_H_
