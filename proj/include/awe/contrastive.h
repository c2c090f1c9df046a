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

#ifndef AWE_CONTRASTIVE_H_
#define AWE_CONTRASTIVE_H_

// NTXent contrastive loss over cosine similarities, in-batch negatives, and the
// Adam training loop for the learned pooler. Upstream features stay fixed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awe/features.h"
#include "awe/pairs.h"
#include "awe/pooling.h"

namespace awe {

/// standard: the positive also appears in the denominator.
/// literal:  the denominator sums over the negative set only.
enum class DenominatorMode { kStandard, kLiteral };

DenominatorMode parse_denominator_mode(std::string_view name);

inline constexpr double kCosineNormFloor = 1e-12;

/// a.b / (|a||b|); 0 when either norm is below kCosineNormFloor.
template <typename Scalar>
Scalar cosine(const Vector<Scalar>& a, const Vector<Scalar>& b);

template <typename Scalar>
Scalar ntxent_loss(const Vector<Scalar>& anchor, const Vector<Scalar>& positive,
                   std::span<const Vector<Scalar>> negatives, Scalar temperature,
                   DenominatorMode mode);

template <typename Scalar>
struct NtxentGrad {
  Scalar loss = 0;
  Vector<Scalar> anchor;
  Vector<Scalar> positive;
  std::vector<Vector<Scalar>> negatives;
};

template <typename Scalar>
NtxentGrad<Scalar> ntxent_grad(const Vector<Scalar>& anchor, const Vector<Scalar>& positive,
                               std::span<const Vector<Scalar>> negatives, Scalar temperature,
                               DenominatorMode mode);

/// One training batch. Slot i pairs anchors[i] with positives[i]; the
/// negatives of slot i are both views of every slot listed in negatives[i].
struct ContrastiveBatch {
  std::vector<size_t> pair_index;  // into the source PairSet
  std::vector<SegmentRef> anchors;
  std::vector<SegmentRef> positives;
  std::vector<std::string> keys;
  std::vector<std::vector<uint32_t>> negatives;

  size_t size() const { return anchors.size(); }
};

struct BatchPlan {
  std::vector<ContrastiveBatch> batches;
  std::optional<std::string> warning;
};

/// Shuffles the pairs with `seed` and cuts them into batches of batch_size; a
/// trailing remainder of at least two pairs forms a final smaller batch.
/// Slots sharing a key are excluded from each other's negatives. KNN pairs all
/// carry the key "knn", so for them only the slot itself is excluded.
BatchPlan build_batches(const PairSet& pairs, size_t batch_size, uint64_t seed);

/// Batch loss over 2B embeddings: rows [0, B) are anchors and [B, 2B) their
/// positives. Every view acts as an anchor against its partner, with the
/// views of the slots in negatives[i] as negatives; the loss is the mean over
/// views that have at least one negative. Gradients are per row of `awes`.
template <typename Scalar>
struct BatchLoss {
  Scalar loss = 0;
  RowMatrix<Scalar> grad;
  size_t terms = 0;
};

template <typename Scalar>
BatchLoss<Scalar> batch_ntxent(const RowMatrix<Scalar>& awes,
                               const std::vector<std::vector<uint32_t>>& negatives,
                               Scalar temperature, DenominatorMode mode);

struct TrainConfig {
  double temperature = 0.07;
  size_t batch_size = 150;
  int epochs = 5;
  int max_iterations_per_epoch = 1000;
  double learning_rate = 1e-4;
  uint64_t seed = 0;
  DenominatorMode denominator_mode = DenominatorMode::kStandard;
  double clip_grad_norm = 0.0;  // 0 disables clipping
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainStep {
  int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
};

struct TrainLog {
  std::vector<TrainStep> steps;
  size_t dropped_pairs = 0;  // pairs with a segment the pooler cannot take
  std::vector<std::string> warnings;

  double mean_epoch_loss(int epoch) const;
};

void write_train_log(const TrainLog& log, const std::filesystem::path& path);

struct TrainResult {
  PoolerParamsF params;
  TrainLog log;
};

/// Adam over batches of mined pairs; one optimizer step per batch, at most
/// max_iterations_per_epoch steps per epoch. Deterministic given cfg.seed and
/// independent of the worker count.
TrainResult train_pooler(const FeatureStore& store, const PairSet& pairs,
                         PoolerParamsF params, const TrainConfig& cfg);

}  // namespace awe

#endif  // AWE_CONTRASTIVE_H_
