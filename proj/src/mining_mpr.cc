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

#include "awe/mining_mpr.h"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "awe/features.h"

namespace awe {

const std::unordered_set<std::string>& default_silence_labels() {
  static const std::unordered_set<std::string> labels = {"sil", "sp", "spn", "nsn"};
  return labels;
}

std::vector<NgramOccurrence> extract_ngrams(const PhoneAlignment& alignment, int n_min,
                                            int n_max, double frame_period_ms,
                                            const std::unordered_set<std::string>& silence) {
  if (n_min < 1 || n_max < n_min) throw InputError("extract_ngrams: need 1 <= n_min <= n_max");
  std::vector<NgramOccurrence> out;
  const auto& e = alignment.entries;
  size_t run_begin = 0;
  auto emit_run = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      std::string key;
      for (int n = 1; n <= n_max && i + static_cast<size_t>(n) <= end; ++n) {
        if (n > 1) key += '|';
        key += e[i + n - 1].phone;
        if (n < n_min) continue;
        NgramOccurrence occ;
        occ.start_s = e[i].start_s;
        occ.end_s = e[i + n - 1].end_s;
        occ.seg = seconds_to_segment(occ.start_s, occ.end_s, frame_period_ms);
        occ.seg.utt_id = alignment.utt_id;
        occ.key = key;
        occ.n = n;
        occ.speaker_id = alignment.speaker_id;
        out.push_back(std::move(occ));
      }
    }
  };
  for (size_t i = 0; i < e.size(); ++i) {
    if (silence.contains(e[i].phone)) {
      emit_run(run_begin, i);
      run_begin = i + 1;
    }
  }
  emit_run(run_begin, e.size());
  return out;
}

const std::vector<NgramOccurrence>* NgramIndex::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

size_t NgramIndex::num_occurrences() const {
  size_t n = 0;
  for (const auto& [key, list] : entries_) n += list.size();
  return n;
}

NgramIndex index_ngrams(std::vector<NgramOccurrence> occurrences) {
  std::unordered_map<std::string, std::vector<NgramOccurrence>> groups;
  for (auto& occ : occurrences) {
    std::string key = occ.key;
    groups[std::move(key)].push_back(std::move(occ));
  }
  NgramIndex::Entries entries;
  for (auto& [key, list] : groups) {
    std::stable_sort(list.begin(), list.end(),
                     [](const NgramOccurrence& a, const NgramOccurrence& b) { return a.seg < b.seg; });
    entries.emplace(key, std::move(list));
  }
  return NgramIndex(std::move(entries));
}

bool segments_overlap(const SegmentRef& a, const SegmentRef& b) {
  return a.utt_id == b.utt_id && a.start_frame < b.end_frame && b.start_frame < a.end_frame;
}

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

PairSet mine_pairs(const NgramIndex& index, size_t max_instances_per_type, uint64_t seed,
                   bool exclude_overlap) {
  if (max_instances_per_type == 1)
    throw InputError("mine_pairs: max_instances_per_type must be 0 or >= 2");
  PairSet set;
  set.provenance = Provenance::kMpr;
  std::vector<size_t> chosen;
  for (const auto& [key, list] : index.entries()) {
    const size_t m = list.size();
    if (m < 2) continue;
    chosen.resize(m);
    std::iota(chosen.begin(), chosen.end(), size_t{0});
    if (max_instances_per_type != 0 && m > max_instances_per_type) {
      // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
      Rng rng(derive_seed(seed, fnv1a(key)));
      for (size_t i = 0; i < max_instances_per_type; ++i) {
        const size_t j = static_cast<size_t>(
            rng.uniform_int(static_cast<int64_t>(i), static_cast<int64_t>(m) - 1));
        std::swap(chosen[i], chosen[j]);
      }
      chosen.resize(max_instances_per_type);
      std::sort(chosen.begin(), chosen.end());
    }
    for (size_t i = 0; i < chosen.size(); ++i) {
      const SegmentRef& a = list[chosen[i]].seg;
      for (size_t j = i + 1; j < chosen.size(); ++j) {
        const SegmentRef& b = list[chosen[j]].seg;
        if (a == b) continue;
        if (exclude_overlap && segments_overlap(a, b)) continue;
        set.pairs.push_back(SegmentPair{a, b, key});
      }
    }
  }
  return set;
}

PairSet brute_force_pairs(const std::vector<NgramOccurrence>& occurrences) {
  PairSet set;
  set.provenance = Provenance::kGroundTruth;
  for (size_t i = 0; i < occurrences.size(); ++i)
    for (size_t j = i + 1; j < occurrences.size(); ++j)
      if (occurrences[i].key == occurrences[j].key && !(occurrences[i].seg == occurrences[j].seg))
        set.pairs.push_back(make_pair(occurrences[i].seg, occurrences[j].seg, occurrences[i].key));
  return set;
}

MprResult mine_mpr(const std::vector<PhoneAlignment>& alignments, const MprSettings& settings,
                   double frame_period_ms, uint64_t seed) {
  if (settings.n_min < 1 || settings.n_max < settings.n_min)
    throw InputError("mine: need 1 <= ngram_min <= ngram_max");
  std::vector<NgramOccurrence> occ;
  for (const PhoneAlignment& a : alignments) {
    auto part = extract_ngrams(a, settings.n_min, settings.n_max, frame_period_ms, settings.silence);
    occ.insert(occ.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  MprResult r;
  r.n_occurrences = occ.size();
  const NgramIndex index = index_ngrams(std::move(occ));
  r.n_keys = index.size();
  r.pairs = mine_pairs(index, settings.max_instances_per_type, seed, settings.exclude_overlap);
  return r;
}

}  // namespace awe
