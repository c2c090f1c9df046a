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

#include "awe/synthcorpus.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "awe/evaluation.h"
#include "awe/mining_mpr.h"
#include "doctest.h"

namespace awe {
namespace {

namespace fs = std::filesystem;

CorpusSpec small_spec() {
  CorpusSpec s;
  s.n_phone_types = 12;
  s.n_word_types = 20;
  s.n_speakers = 3;
  s.utterances_per_speaker = 6;
  s.n_test_speakers = 2;
  s.test_utterances_per_speaker = 4;
  s.feature_dim = 8;
  s.seed = 21;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("awe_synth_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TEST_CASE("noise-free corpus repeats phone vectors exactly") {
  CorpusSpec s = small_spec();
  s.noise_scale = 0.0;
  s.speaker_shift_scale = 0.0;
  const SyntheticCorpus c = generate_corpus(s);
  std::map<std::string, Eigen::VectorXf> seen;
  for (size_t u = 0; u < c.train.features.size(); ++u) {
    const auto& fm = c.train.features[u];
    for (const auto& e : c.train.alignments[u].entries) {
      const SegmentRef seg = seconds_to_segment(e.start_s, e.end_s, s.frame_period_ms);
      for (int64_t t = seg.start_frame; t < seg.end_frame; ++t) {
        const Eigen::VectorXf row = fm.frames.row(t).transpose();
        auto [it, fresh] = seen.emplace(e.phone, row);
        if (!fresh) REQUIRE(it->second == row);
      }
    }
  }
  CHECK(seen.size() == static_cast<size_t>(s.n_phone_types) + 1);
}

TEST_CASE("alignments, words and frames agree") {
  const CorpusSpec s = small_spec();
  const SyntheticCorpus c = generate_corpus(s);
  for (const CorpusSplit* split : {&c.train, &c.test}) {
    std::map<std::string, std::vector<const WordSegment*>> words_by_utt;
    for (const auto& w : split->words) words_by_utt[w.utt_id].push_back(&w);
    for (size_t u = 0; u < split->features.size(); ++u) {
      const auto& align = split->alignments[u];
      const auto& words = words_by_utt[align.utt_id];
      size_t word_phones = 0;
      for (const auto* w : words) {
        const int id = std::stoi(w->word.substr(1));
        word_phones += c.lexicon[static_cast<size_t>(id)].size();
      }
      // Phones of every word plus one silence before, between and after.
      CHECK(align.entries.size() == word_phones + words.size() + 1);
      CHECK(align.entries.back().end_s ==
            doctest::Approx(static_cast<double>(split->features[u].frames.rows()) * s.frame_period_ms / 1000.0));
      for (const auto* w : words) {
        // The word span is the union of its phones' spans.
        const SegmentRef ws = seconds_to_segment(w->start_s, w->end_s, s.frame_period_ms);
        int64_t covered = 0;
        for (const auto& e : align.entries)
          if (e.start_s >= w->start_s - 1e-9 && e.end_s <= w->end_s + 1e-9) {
            CHECK(e.phone != "sil");
            covered += seconds_to_segment(e.start_s, e.end_s, s.frame_period_ms).length();
          }
        CHECK(covered == ws.length());
        CHECK(w->speaker_id == align.speaker_id);
      }
    }
  }
  // Held-out speakers.
  std::set<std::string> train_spk, test_spk;
  for (const auto& a : c.train.alignments) train_spk.insert(a.speaker_id);
  for (const auto& a : c.test.alignments) test_spk.insert(a.speaker_id);
  CHECK(train_spk.size() == 3);
  CHECK(test_spk.size() == 2);
  for (const auto& sp : test_spk) CHECK(train_spk.count(sp) == 0);
}

TEST_CASE("corpus files are deterministic and the ground truth matches mining") {
  TempDir a("a"), b("b");
  const CorpusSpec s = small_spec();
  const CorpusFiles fa = write_corpus(s, a.path);
  const CorpusFiles fb = write_corpus(s, b.path);
  for (auto [x, y] : {std::pair{fa.train.features, fb.train.features},
                      std::pair{fa.train.alignments, fb.train.alignments},
                      std::pair{fa.train.words, fb.train.words},
                      std::pair{fa.train.ground_truth, fb.train.ground_truth},
                      std::pair{fa.test.features, fb.test.features}})
    CHECK(slurp(x) == slurp(y));

  CorpusSpec other = s;
  other.seed = 22;
  TempDir c("c");
  CHECK(slurp(write_corpus(other, c.path).train.features) != slurp(fa.train.features));

  const PairSet gt = read_pairs(fa.train.ground_truth);
  CHECK(gt.provenance == Provenance::kGroundTruth);
  const auto mined = mine_mpr(load_alignments(fa.train.alignments), MprSettings{2, 5, 0, true}, 20.0, 1);
  CHECK(sorted_pairs(mined.pairs) == sorted_pairs(gt));
}

TEST_CASE("impossible specs are rejected") {
  CorpusSpec s = small_spec();
  s.phones_per_word_max = 13;
  CHECK_THROWS_AS(generate_corpus(s), InputError);
  s = small_spec();
  s.n_word_types = 100000;
  s.phones_per_word_max = 3;
  CHECK_THROWS_AS(generate_corpus(s), InputError);
  s = small_spec();
  s.noise_scale = -1;
  CHECK_THROWS_AS(generate_corpus(s), InputError);
  s = small_spec();
  s.n_speakers = 0;
  CHECK_THROWS_AS(generate_corpus(s), InputError);
  s = small_spec();
  s.words_per_utterance_min = 5;
  s.words_per_utterance_max = 4;
  CHECK_THROWS_AS(generate_corpus(s), InputError);
}

TEST_CASE("default corpus gives mean pooling a usable MAP range") {
  TempDir d("default");
  CorpusSpec s;
  s.write_ground_truth = false;
  const CorpusFiles f = write_corpus(s, d.path);
  const FeatureStore test = FeatureStore::open(f.test.features);
  const auto items = collect_eval_awes(test, load_word_segments(f.test.words));
  const double map = samediff_map(items.items).map;
  MESSAGE("default synthetic corpus, mean-pool MAP = " << map);
  CHECK(map > 0.2);
  CHECK(map < 0.9);
  // Reference number quoted in the README (seed 0, printed to 8 decimals).
  CHECK(std::abs(map - 0.35729747) < 5e-9);
}

}  // namespace
}  // namespace awe
