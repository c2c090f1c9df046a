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

#include "awe/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "awe/contrastive.h"
#include "awe/parallel.h"

namespace awe {

CollectedItems collect_eval_awes(const FeatureStore& store, const std::vector<WordSegment>& segments,
                                 const PoolerParamsF* pooler) {
  CollectedItems out;
  out.items.reserve(segments.size());
  for (const WordSegment& w : segments) {
    if (!store.contains(w.utt_id)) throw InputError("unknown utt_id in word segments: " + w.utt_id);
    SegmentRef seg = seconds_to_segment(w.start_s, w.end_s, store.frame_period_ms());
    const int64_t total = store.num_frames(w.utt_id);
    // Rounding the end up may step one frame past an utterance that ends
    // exactly on the word boundary.
    if (seg.end_frame > total && seg.start_frame < total) seg.end_frame = total;
    seg.utt_id = w.utt_id;
    if (pooler != nullptr) {
      const PoolerConfig& c = pooler->config;
      if (seg.length() < c.conv_kernel || c.output_length(seg.length()) > c.max_positions) {
        ++out.dropped;
        continue;
      }
    }
    const RowMatrixXf frames = store.get_frames(seg);
    EvalItem item;
    item.awe = pooler ? pooler_embed(*pooler, frames) : mean_pool(frames);
    item.word = w.word;
    item.speaker_id = w.speaker_id;
    item.seg = std::move(seg);
    if (!item.awe.allFinite()) throw InternalError("non-finite AWE for " + item.seg.utt_id);
    out.items.push_back(std::move(item));
  }
  return out;
}

std::string EvalReport::machine_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "map=%.8f n_items=%zu n_pairs=%zu n_pos=%zu", map, n_items,
                n_pairs, n_positive_pairs);
  return buf;
}

std::string EvalReport::text() const {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * map);
  os << "same-different MAP: " << buf << "\n";
  os << "  items: " << n_items << ", pairs: " << n_pairs << ", positive pairs: " << n_positive_pairs
     << "\n";
  if (auc_roc) {
    std::snprintf(buf, sizeof buf, "%.4f", *auc_roc);
    os << "  AUC-ROC: " << buf << "\n";
  }
  os << "  cross-speaker only: " << (options.cross_speaker_only ? "yes" : "no") << "\n";
  return os.str();
}

namespace {

void check_items(const std::vector<EvalItem>& items) {
  if (items.size() < 2) throw InputError("evaluation needs at least 2 items");
  const Eigen::Index dim = items.front().awe.size();
  for (const auto& it : items) {
    if (it.awe.size() != dim) throw InputError("evaluation: AWEs differ in dimension");
    if (!it.awe.allFinite()) throw InputError("evaluation: non-finite AWE");
  }
}

constexpr size_t kScoreChunks = 16;

}  // namespace

EvalReport samediff_map(const std::vector<EvalItem>& items, const EvalOptions& options) {
  check_items(items);
  const size_t n = items.size();
  const size_t all_pairs = n * (n - 1) / 2;
  if (all_pairs > std::numeric_limits<uint32_t>::max())
    throw InputError("evaluation: too many items (" + std::to_string(n) + ")");

  // Unit vectors; a zero vector stays zero and scores 0 against everything.
  RowMatrixXd unit(static_cast<Eigen::Index>(n), items.front().awe.size());
  for (size_t i = 0; i < n; ++i) {
    Vector<double> v = items[i].awe.cast<double>();
    const double norm = v.norm();
    if (norm < 1e-12) v.setZero();
    else v /= norm;
    unit.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }

  std::vector<double> score(all_pairs);
  std::vector<uint8_t> positive(all_pairs), keep(all_pairs, 1);
  std::vector<size_t> row_offset(n);
  for (size_t i = 0, off = 0; i < n; ++i) {
    row_offset[i] = off;
    off += n - i - 1;
  }
  parallel_chunks(n, kScoreChunks, [&](size_t b, size_t e, size_t) {
    for (size_t i = b; i < e; ++i) {
      size_t id = row_offset[i];
      for (size_t j = i + 1; j < n; ++j, ++id) {
        score[id] = unit.row(static_cast<Eigen::Index>(i)).dot(unit.row(static_cast<Eigen::Index>(j)));
        positive[id] = items[i].word == items[j].word;
        if (options.cross_speaker_only && items[i].speaker_id == items[j].speaker_id) keep[id] = 0;
      }
    }
  });

  std::vector<uint32_t> order;
  order.reserve(all_pairs);
  for (size_t id = 0; id < all_pairs; ++id)
    if (keep[id]) order.push_back(static_cast<uint32_t>(id));
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return score[a] > score[b] || (score[a] == score[b] && a < b);
  });

  EvalReport r;
  r.options = options;
  r.n_items = n;
  r.n_pairs = order.size();
  size_t hits = 0;
  double precision_sum = 0.0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (positive[order[rank]]) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  r.n_positive_pairs = hits;
  if (hits == 0) throw InputError("no positive pairs");
  r.map = precision_sum / static_cast<double>(hits);

  const size_t n_neg = order.size() - hits;
  if (n_neg > 0) {
    // Each positive contributes the negatives ranked below it.
    double below = 0.0;
    size_t neg_above = 0;
    for (uint32_t id : order) {
      if (positive[id])
        below += static_cast<double>(n_neg - neg_above);
      else
        ++neg_above;
    }
    r.auc_roc = below / (static_cast<double>(hits) * static_cast<double>(n_neg));
  }
  return r;
}

double brute_force_map(const std::vector<EvalItem>& items, bool cross_speaker_only) {
  check_items(items);
  if (items.size() > 500) throw InputError("brute_force_map: at most 500 items");
  // (negated score, canonical id, positive)
  std::vector<std::tuple<double, size_t, bool>> ranked;
  size_t id = 0;
  for (size_t i = 0; i < items.size(); ++i)
    for (size_t j = i + 1; j < items.size(); ++j, ++id) {
      if (cross_speaker_only && items[i].speaker_id == items[j].speaker_id) continue;
      const double s = cosine<double>(items[i].awe.cast<double>(), items[j].awe.cast<double>());
      ranked.emplace_back(-s, id, items[i].word == items[j].word);
    }
  std::sort(ranked.begin(), ranked.end());
  double sum = 0.0;
  size_t positives = 0;
  for (size_t r = 0; r < ranked.size(); ++r) {
    if (!std::get<2>(ranked[r])) continue;
    ++positives;
    size_t pos_at_or_above = 0;
    for (size_t q = 0; q <= r; ++q) pos_at_or_above += std::get<2>(ranked[q]) ? 1 : 0;
    sum += static_cast<double>(pos_at_or_above) / static_cast<double>(r + 1);
  }
  if (positives == 0) throw InputError("no positive pairs");
  return sum / static_cast<double>(positives);
}

}  // namespace awe
