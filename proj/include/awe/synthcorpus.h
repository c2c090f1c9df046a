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

#ifndef AWE_SYNTHCORPUS_H_
#define AWE_SYNTHCORPUS_H_

// Synthetic corpora with known phone, word and speaker structure.
//
// Each phone type is a fixed random unit vector in D dimensions; "sil" has
// its own prototype. A word is a fixed sequence of distinct phones, and word
// tokens are drawn from a Zipf distribution over word types. An utterance is
// sil, word, sil, word, ..., sil. Every frame of a phone instance is
//   prototype + speaker offset + noise,
// where the speaker offset is a random direction of norm speaker_shift_scale
// and the noise is isotropic Gaussian with expected norm about noise_scale.
// The test split uses speakers never seen in training.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "awe/corpus_io.h"
#include "awe/features.h"

namespace awe {

struct CorpusSpec {
  int n_phone_types = 40;
  int n_word_types = 200;
  int phones_per_word_min = 3;
  int phones_per_word_max = 6;
  int n_speakers = 8;  // training speakers
  int utterances_per_speaker = 50;
  int n_test_speakers = 4;
  int test_utterances_per_speaker = 30;
  int words_per_utterance_min = 4;
  int words_per_utterance_max = 9;
  int frames_per_phone_min = 2;
  int frames_per_phone_max = 5;
  int feature_dim = 32;
  double speaker_shift_scale = 0.5;
  double noise_scale = 0.9;
  double zipf_exponent = 1.0;
  double frame_period_ms = 20.0;
  int gt_ngram_min = 2;  // n-gram range of the ground-truth pairs file
  int gt_ngram_max = 5;
  bool write_ground_truth = true;
  uint64_t seed = 0;

  void validate() const;
};

struct CorpusSplit {
  std::vector<FrameMatrix> features;
  std::vector<PhoneAlignment> alignments;
  std::vector<WordSegment> words;
};

struct SyntheticCorpus {
  std::vector<std::vector<int>> lexicon;  // word type -> phone ids
  CorpusSplit train;
  CorpusSplit test;
};

std::string synth_phone_label(int phone);
std::string synth_word_label(int word);

/// In-memory generation; deterministic in spec.seed.
SyntheticCorpus generate_corpus(const CorpusSpec& spec);

struct SplitFiles {
  std::filesystem::path features;      // <split>.awf
  std::filesystem::path alignments;    // <split>.align.tsv
  std::filesystem::path words;         // <split>.words.tsv
  std::filesystem::path ground_truth;  // <split>.gt_pairs.tsv (may be absent)
};

struct CorpusFiles {
  SplitFiles train;
  SplitFiles test;
};

CorpusFiles split_files(const std::filesystem::path& dir);

/// Generates and writes both splits into `dir` (created if needed).
CorpusFiles write_corpus(const CorpusSpec& spec, const std::filesystem::path& dir);

}  // namespace awe

#endif  // AWE_SYNTHCORPUS_H_
