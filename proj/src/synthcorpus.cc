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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "awe/mining_mpr.h"
#include "awe/pairs.h"

namespace awe {

namespace fs = std::filesystem;

void CorpusSpec::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("corpus spec: ") + what);
  };
  need(n_phone_types >= 1 && n_word_types >= 1 && n_speakers >= 1 && n_test_speakers >= 1 &&
           utterances_per_speaker >= 1 && test_utterances_per_speaker >= 1 && feature_dim >= 1,
       "all counts must be >= 1");
  need(phones_per_word_min >= 1 && phones_per_word_min <= phones_per_word_max,
       "phones_per_word range is empty");
  need(words_per_utterance_min >= 1 && words_per_utterance_min <= words_per_utterance_max,
       "words_per_utterance range is empty");
  need(frames_per_phone_min >= 1 && frames_per_phone_min <= frames_per_phone_max,
       "frames_per_phone range is empty");
  need(speaker_shift_scale >= 0 && noise_scale >= 0 && zipf_exponent >= 0, "scales must be >= 0");
  need(frame_period_ms > 0, "frame_period_ms must be positive");
  need(gt_ngram_min >= 1 && gt_ngram_min <= gt_ngram_max, "ground-truth n-gram range is empty");
  need(phones_per_word_max <= n_phone_types,
       "phones_per_word_max exceeds the phone inventory (word phones are distinct)");
  // Distinct words of distinct phones: count sequences of the longest length.
  double available = 1.0;
  for (int i = 0; i < phones_per_word_max; ++i) available *= n_phone_types - i;
  need(available >= n_word_types, "not enough distinct phone sequences for n_word_types");
  const double max_frames = (2.0 * words_per_utterance_max + 1.0) *
                            std::max(phones_per_word_max, 1) * frames_per_phone_max;
  need(max_frames < 1e7, "utterances would exceed the representable length");
}

std::string synth_phone_label(int phone) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%02d", phone);
  return buf;
}

std::string synth_word_label(int word) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%04d", word);
  return buf;
}

namespace {

constexpr const char* kSilence = "sil";

Eigen::VectorXd random_unit(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  do {
    for (int d = 0; d < dim; ++d) v(d) = rng.normal();
  } while (v.norm() < 1e-9);
  return v / v.norm();
}

struct Acoustics {
  std::vector<Eigen::VectorXd> phones;  // index n_phone_types is silence
};

class Zipf {
 public:
  Zipf(int n, double s) : cdf_(static_cast<size_t>(n)) {
    double acc = 0.0;
    for (int r = 0; r < n; ++r) {
      acc += 1.0 / std::pow(r + 1.0, s);
      cdf_[static_cast<size_t>(r)] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }
  int sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                     static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  }

 private:
  std::vector<double> cdf_;
};

CorpusSplit generate_split(const CorpusSpec& spec, const Acoustics& ac,
                           const std::vector<std::vector<int>>& lexicon, const Zipf& zipf,
                           const std::string& prefix, int first_speaker, int n_speakers,
                           int utts_per_speaker, uint64_t stream) {
  CorpusSplit split;
  Rng rng(derive_seed(spec.seed, stream));
  const int dim = spec.feature_dim;
  const double noise_sd = spec.noise_scale / std::sqrt(static_cast<double>(dim));
  const double period_s = spec.frame_period_ms / 1000.0;
  for (int s = 0; s < n_speakers; ++s) {
    char spk_buf[16];
    std::snprintf(spk_buf, sizeof spk_buf, "spk%02d", first_speaker + s);
    const std::string speaker = spk_buf;
    const Eigen::VectorXd offset = spec.speaker_shift_scale * random_unit(rng, dim);
    for (int u = 0; u < utts_per_speaker; ++u) {
      char utt_buf[64];
      std::snprintf(utt_buf, sizeof utt_buf, "%s_%s_u%03d", prefix.c_str(), speaker.c_str(), u);
      const std::string utt = utt_buf;

      // Phone sequence with durations.
      std::vector<std::pair<int, int>> phones;  // (phone id or -1 for silence, frames)
      std::vector<std::pair<int, size_t>> word_spans;  // (word, index of first phone)
      auto duration = [&] {
        return static_cast<int>(rng.uniform_int(spec.frames_per_phone_min, spec.frames_per_phone_max));
      };
      phones.emplace_back(-1, duration());
      const int n_words = static_cast<int>(
          rng.uniform_int(spec.words_per_utterance_min, spec.words_per_utterance_max));
      for (int w = 0; w < n_words; ++w) {
        const int word = zipf.sample(rng);
        word_spans.emplace_back(word, phones.size());
        for (int p : lexicon[static_cast<size_t>(word)]) phones.emplace_back(p, duration());
        phones.emplace_back(-1, duration());
      }

      int64_t total = 0;
      for (const auto& [p, len] : phones) total += len;
      FrameMatrix fm;
      fm.utt_id = utt;
      fm.frame_period_ms = static_cast<float>(spec.frame_period_ms);
      fm.frames.resize(total, dim);
      PhoneAlignment align{utt, speaker, {}};
      std::vector<int64_t> phone_start;
      int64_t t = 0;
      for (const auto& [p, len] : phones) {
        const Eigen::VectorXd& proto =
            ac.phones[static_cast<size_t>(p < 0 ? spec.n_phone_types : p)];
        phone_start.push_back(t);
        for (int f = 0; f < len; ++f, ++t)
          for (int d = 0; d < dim; ++d)
            fm.frames(t, d) = static_cast<float>(proto(d) + offset(d) + noise_sd * rng.normal());
        align.entries.push_back({static_cast<double>(phone_start.back()) * period_s,
                                 static_cast<double>(t) * period_s,
                                 p < 0 ? std::string(kSilence) : synth_phone_label(p)});
      }
      for (const auto& [word, first] : word_spans) {
        const size_t last = first + lexicon[static_cast<size_t>(word)].size() - 1;
        split.words.push_back({utt, align.entries[first].start_s, align.entries[last].end_s,
                               synth_word_label(word), speaker});
      }
      split.features.push_back(std::move(fm));
      split.alignments.push_back(std::move(align));
    }
  }
  return split;
}

}  // namespace

SyntheticCorpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;

  Rng proto_rng(derive_seed(spec.seed, 1));
  Acoustics ac;
  for (int p = 0; p <= spec.n_phone_types; ++p) ac.phones.push_back(random_unit(proto_rng, spec.feature_dim));

  Rng lex_rng(derive_seed(spec.seed, 2));
  std::set<std::vector<int>> seen;
  std::vector<int> inventory(static_cast<size_t>(spec.n_phone_types));
  for (int p = 0; p < spec.n_phone_types; ++p) inventory[static_cast<size_t>(p)] = p;
  while (static_cast<int>(corpus.lexicon.size()) < spec.n_word_types) {
    const int len = static_cast<int>(lex_rng.uniform_int(spec.phones_per_word_min, spec.phones_per_word_max));
    // Partial Fisher-Yates: the first `len` entries are distinct phones.
    for (int i = 0; i < len; ++i)
      std::swap(inventory[static_cast<size_t>(i)],
                inventory[static_cast<size_t>(lex_rng.uniform_int(i, spec.n_phone_types - 1))]);
    std::vector<int> word(inventory.begin(), inventory.begin() + len);
    if (seen.insert(word).second) corpus.lexicon.push_back(std::move(word));
  }

  const Zipf zipf(spec.n_word_types, spec.zipf_exponent);
  corpus.train = generate_split(spec, ac, corpus.lexicon, zipf, "train", 0, spec.n_speakers,
                                spec.utterances_per_speaker, 3);
  corpus.test = generate_split(spec, ac, corpus.lexicon, zipf, "test", spec.n_speakers,
                               spec.n_test_speakers, spec.test_utterances_per_speaker, 4);
  return corpus;
}

CorpusFiles split_files(const fs::path& dir) {
  auto files = [&](const std::string& split) {
    return SplitFiles{dir / (split + ".awf"), dir / (split + ".align.tsv"),
                      dir / (split + ".words.tsv"), dir / (split + ".gt_pairs.tsv")};
  };
  return {files("train"), files("test")};
}

CorpusFiles write_corpus(const CorpusSpec& spec, const fs::path& dir) {
  const SyntheticCorpus corpus = generate_corpus(spec);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
  const CorpusFiles files = split_files(dir);
  auto write_split = [&](const CorpusSplit& split, const SplitFiles& f) {
    write_features(split.features, f.features);
    write_alignments(split.alignments, f.alignments);
    write_word_segments(split.words, f.words);
    if (spec.write_ground_truth) {
      std::vector<NgramOccurrence> occ;
      for (const auto& a : split.alignments) {
        auto o = extract_ngrams(a, spec.gt_ngram_min, spec.gt_ngram_max, spec.frame_period_ms);
        occ.insert(occ.end(), std::make_move_iterator(o.begin()), std::make_move_iterator(o.end()));
      }
      write_pairs(brute_force_pairs(occ), f.ground_truth);
    }
  };
  write_split(corpus.train, files.train);
  write_split(corpus.test, files.test);
  return files;
}

}  // namespace awe
