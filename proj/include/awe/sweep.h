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

#ifndef AWE_SWEEP_H_
#define AWE_SWEEP_H_

// Data-efficiency sweeps: for each point, subsample training data (pairs by
// count, or utterances by duration), train a fresh pooler on MPR pairs and
// evaluate it on the held-out split. Points run sequentially. Each point's
// data and batch order use derive_seed(run seed, point index); the initial
// pooler is shared by all points of a run.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "awe/contrastive.h"
#include "awe/corpus_io.h"
#include "awe/evaluation.h"
#include "awe/features.h"
#include "awe/mining_mpr.h"
#include "awe/pooling.h"

namespace awe {

enum class SweepAxis { kPairs, kHours };

SweepAxis parse_sweep_axis(const std::string& name);

struct SweepData {
  const FeatureStore* train = nullptr;
  std::vector<PhoneAlignment> train_alignments;
  const FeatureStore* test = nullptr;
  std::vector<WordSegment> test_words;
};

struct SweepSettings {
  SweepAxis axis = SweepAxis::kPairs;
  std::vector<double> points;  // pair counts or hours, ascending
  bool single_speaker = false;
  std::string speaker;  // empty: the speaker with the most training pairs
  MprSettings mining;
  PoolerConfig pooler;  // seed is replaced per point
  TrainConfig train;    // seed is replaced per point
  EvalOptions eval;
  uint64_t seed = 0;
};

struct SweepRow {
  double point = 0.0;
  double map = 0.0;
  size_t n_pairs = 0;
  double wall_time_s = 0.0;
  std::string speaker;  // set for single-speaker runs
};

std::vector<SweepRow> run_sweep(const SweepData& data, const SweepSettings& settings);

/// CSV "point,map,n_pairs,wall_time".
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

/// Pairs whose segments both belong to `speaker`, using the alignments'
/// utterance-to-speaker map.
PairSet pairs_of_speaker(const PairSet& pairs, const std::vector<PhoneAlignment>& alignments,
                         const std::string& speaker);

/// The speaker owning the most within-speaker pairs; ties go to the smaller id.
std::string richest_speaker(const PairSet& pairs, const std::vector<PhoneAlignment>& alignments);

}  // namespace awe

#endif  // AWE_SWEEP_H_
