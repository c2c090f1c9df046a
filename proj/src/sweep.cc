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

#include "awe/sweep.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

namespace awe {

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "pairs") return SweepAxis::kPairs;
  if (name == "hours") return SweepAxis::kHours;
  throw InputError("unknown sweep axis '" + name + "' (expected pairs or hours)");
}

namespace {

std::unordered_map<std::string, std::string> speaker_of(const std::vector<PhoneAlignment>& al) {
  std::unordered_map<std::string, std::string> m;
  for (const auto& a : al) m[a.utt_id] = a.speaker_id;
  return m;
}

const std::string& lookup_speaker(const std::unordered_map<std::string, std::string>& m,
                                  const std::string& utt) {
  const auto it = m.find(utt);
  if (it == m.end()) throw InputError("pair segment from utterance without alignment: " + utt);
  return it->second;
}

// Every point starts from the same initial pooler, so points differ only in
// their training data.
constexpr uint64_t kInitStream = 0x1417;

double train_and_eval(const SweepData& data, const SweepSettings& s, const PairSet& pairs,
                      uint64_t seed) {
  PoolerConfig pc = s.pooler;
  pc.seed = derive_seed(s.seed, kInitStream);
  TrainConfig tc = s.train;
  tc.seed = seed;
  TrainResult trained = train_pooler(*data.train, pairs, init_pooler(pc), tc);
  const CollectedItems items = collect_eval_awes(*data.test, data.test_words, &trained.params);
  return samediff_map(items.items, s.eval).map;
}

}  // namespace

PairSet pairs_of_speaker(const PairSet& pairs, const std::vector<PhoneAlignment>& alignments,
                         const std::string& speaker) {
  const auto spk = speaker_of(alignments);
  PairSet out;
  out.provenance = pairs.provenance;
  for (const auto& p : pairs.pairs)
    if (lookup_speaker(spk, p.a.utt_id) == speaker && lookup_speaker(spk, p.b.utt_id) == speaker)
      out.pairs.push_back(p);
  return out;
}

std::string richest_speaker(const PairSet& pairs, const std::vector<PhoneAlignment>& alignments) {
  const auto spk = speaker_of(alignments);
  std::map<std::string, size_t> counts;
  for (const auto& a : alignments) counts.emplace(a.speaker_id, 0);
  for (const auto& p : pairs.pairs) {
    const std::string& sa = lookup_speaker(spk, p.a.utt_id);
    if (sa == lookup_speaker(spk, p.b.utt_id)) ++counts[sa];
  }
  if (counts.empty()) throw InputError("no speakers in the training alignments");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

std::vector<SweepRow> run_sweep(const SweepData& data, const SweepSettings& s) {
  if (data.train == nullptr || data.test == nullptr) throw InternalError("sweep: missing stores");
  if (s.points.empty()) throw InputError("sweep: no points");
  for (size_t i = 0; i < s.points.size(); ++i) {
    if (!(s.points[i] > 0)) throw InputError("sweep: points must be positive");
    if (i > 0 && s.points[i] < s.points[i - 1]) throw InputError("sweep: points must be ascending");
  }
  const double period = data.train->frame_period_ms();
  std::vector<SweepRow> rows;

  if (s.axis == SweepAxis::kPairs) {
    PairSet pool = mine_mpr(data.train_alignments, s.mining, period, s.seed).pairs;
    std::string speaker;
    if (s.single_speaker) {
      speaker = s.speaker.empty() ? richest_speaker(pool, data.train_alignments) : s.speaker;
      pool = pairs_of_speaker(pool, data.train_alignments, speaker);
    }
    for (size_t i = 0; i < s.points.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const double want = s.points[i];
      if (want != std::floor(want)) throw InputError("sweep: pair counts must be integers");
      if (want > static_cast<double>(pool.size()))
        throw InputError("sweep: point " + std::to_string(static_cast<size_t>(want)) +
                         " exceeds the " + std::to_string(pool.size()) + " available pairs");
      const uint64_t seed = derive_seed(s.seed, i);
      const PairSet subset = subsample_pairs(pool, static_cast<size_t>(want), seed);
      SweepRow row;
      row.point = want;
      row.n_pairs = subset.size();
      row.speaker = speaker;
      row.map = train_and_eval(data, s, subset, seed);
      row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(row);
    }
    return rows;
  }

  // Hours axis: whole utterances in a seeded random order until the budget
  // is met, optionally from one speaker only.
  std::string speaker;
  if (s.single_speaker) {
    speaker = s.speaker;
    if (speaker.empty())
      speaker = richest_speaker(mine_mpr(data.train_alignments, s.mining, period, s.seed).pairs,
                                data.train_alignments);
  }
  std::vector<const PhoneAlignment*> eligible;
  double available_s = 0.0;
  for (const auto& a : data.train_alignments) {
    if (s.single_speaker && a.speaker_id != speaker) continue;
    if (!data.train->contains(a.utt_id)) throw InputError("alignment for unknown utterance " + a.utt_id);
    eligible.push_back(&a);
    available_s += static_cast<double>(data.train->num_frames(a.utt_id)) * period / 1000.0;
  }
  for (size_t i = 0; i < s.points.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const double budget_s = s.points[i] * 3600.0;
    if (budget_s > available_s + 1e-9)
      throw InputError("sweep: point " + std::to_string(s.points[i]) + " h exceeds the " +
                       std::to_string(available_s / 3600.0) + " h available");
    const uint64_t seed = derive_seed(s.seed, i);
    auto order = eligible;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<PhoneAlignment> chosen;
    double used_s = 0.0;
    for (const PhoneAlignment* a : order) {
      if (used_s >= budget_s) break;
      chosen.push_back(*a);
      used_s += static_cast<double>(data.train->num_frames(a->utt_id)) * period / 1000.0;
    }
    const PairSet pairs = mine_mpr(chosen, s.mining, period, seed).pairs;
    if (pairs.size() == 0) throw InputError("sweep: no pairs mined at point " + std::to_string(s.points[i]));
    SweepRow row;
    row.point = s.points[i];
    row.n_pairs = pairs.size();
    row.speaker = speaker;
    row.map = train_and_eval(data, s, pairs, seed);
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os << "point,map,n_pairs,wall_time\n";
  char buf[128];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.10g,%.8f,%zu,%.3f\n", r.point, r.map, r.n_pairs, r.wall_time_s);
    os << buf;
  }
  if (!os) throw InternalError("write failed: " + path.string());
}

}  // namespace awe
