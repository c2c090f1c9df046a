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

#include "awe/mining_knn.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "awe/kmeans.h"
#include "awe/parallel.h"

namespace awe {

std::vector<SegmentRef> sample_segments(const FeatureStore& store, const SegmentSampling& o) {
  if (!(o.min_ms > 0) || o.max_ms < o.min_ms || o.min_gap_ms < 0)
    throw InputError("sample_segments: need 0 < min_ms <= max_ms and min_gap_ms >= 0");
  const double period = store.frame_period_ms();
  const int64_t min_len = static_cast<int64_t>(std::ceil(o.min_ms / period - 1e-9));
  const int64_t max_len = static_cast<int64_t>(std::floor(o.max_ms / period + 1e-9));
  const int64_t gap = static_cast<int64_t>(std::ceil(o.min_gap_ms / period - 1e-9));
  if (max_len < min_len)
    throw InputError("sample_segments: no whole-frame duration fits in [min_ms, max_ms]");

  std::vector<SegmentRef> out;
  for (size_t u = 0; u < store.size(); ++u) {
    const std::string& id = store.utt_ids()[u];
    const int64_t total = store.num_frames(id);
    Rng rng(derive_seed(o.seed, u));
    int64_t pos = gap > 0 ? rng.uniform_int(0, gap - 1) : 0;
    for (;;) {
      const int64_t len = rng.uniform_int(min_len, max_len);
      if (pos + len > total) break;
      out.push_back(SegmentRef{id, pos, pos + len});
      pos += len + gap;
    }
  }
  return out;
}

namespace {

double dot(const float* a, const float* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

bool ranks_before(const Neighbor& x, const Neighbor& y) {
  return x.score > y.score || (x.score == y.score && x.id < y.id);
}

void keep_top(std::vector<Neighbor>& cand, int k) {
  const size_t keep = std::min(cand.size(), static_cast<size_t>(k));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                    ranks_before);
  cand.resize(keep);
}

constexpr size_t kSearchChunks = 16;

}  // namespace

AnnIndex build_ann_index(const RowMatrixXf& vectors, int nlist, int nprobe, uint64_t seed) {
  if (nlist < 1) throw InputError("ann: nlist must be >= 1");
  if (vectors.rows() < nlist)
    throw InputError("ann: " + std::to_string(vectors.rows()) + " vectors but nlist=" +
                     std::to_string(nlist));
  if (nprobe < 1 || nprobe > nlist) throw InputError("ann: need 1 <= nprobe <= nlist");
  KMeansOptions opts;
  opts.seed = seed;
  opts.max_iters = 25;
  Centroids c = fit_kmeans(vectors, nlist, opts);
  AnnIndex index;
  index.centroids = c.centers;
  index.vectors = vectors;
  index.nprobe = nprobe;
  index.lists.resize(static_cast<size_t>(nlist));
  const auto labels = assign(c, vectors);
  for (size_t i = 0; i < labels.size(); ++i)
    index.lists[static_cast<size_t>(labels[i])].push_back(static_cast<uint32_t>(i));
  return index;
}

std::vector<std::vector<Neighbor>> ann_search(const AnnIndex& index, const RowMatrixXf& queries,
                                              int k, const std::vector<int64_t>& exclude) {
  if (queries.cols() != index.vectors.cols()) throw InputError("ann: query dimension mismatch");
  std::vector<std::vector<Neighbor>> out(static_cast<size_t>(queries.rows()));
  if (k <= 0) return out;
  const Eigen::Index dim = queries.cols();
  const int nlist = index.nlist();
  parallel_chunks(out.size(), kSearchChunks, [&](size_t b, size_t e, size_t) {
    std::vector<std::pair<double, int>> coarse(static_cast<size_t>(nlist));
    std::vector<Neighbor> cand;
    for (size_t q = b; q < e; ++q) {
      const Eigen::Index qi = static_cast<Eigen::Index>(q);
      for (int c = 0; c < nlist; ++c)
        coarse[static_cast<size_t>(c)] = {(queries.row(qi) - index.centroids.row(c)).squaredNorm(), c};
      std::partial_sort(coarse.begin(), coarse.begin() + index.nprobe, coarse.end());
      cand.clear();
      const int64_t skip = q < exclude.size() ? exclude[q] : -1;
      for (int p = 0; p < index.nprobe; ++p)
        for (uint32_t id : index.lists[static_cast<size_t>(coarse[static_cast<size_t>(p)].second)]) {
          if (static_cast<int64_t>(id) == skip) continue;
          cand.push_back({id, dot(&queries(qi, 0), &index.vectors(id, 0), dim)});
        }
      keep_top(cand, k);
      out[q] = cand;
    }
  });
  return out;
}

std::vector<std::vector<Neighbor>> exact_search(const RowMatrixXf& vectors,
                                                const RowMatrixXf& queries, int k,
                                                const std::vector<int64_t>& exclude) {
  if (queries.cols() != vectors.cols()) throw InputError("knn: query dimension mismatch");
  std::vector<std::vector<Neighbor>> out(static_cast<size_t>(queries.rows()));
  if (k <= 0) return out;
  const Eigen::Index dim = queries.cols();
  parallel_chunks(out.size(), kSearchChunks, [&](size_t b, size_t e, size_t) {
    std::vector<Neighbor> cand;
    for (size_t q = b; q < e; ++q) {
      const Eigen::Index qi = static_cast<Eigen::Index>(q);
      const int64_t skip = q < exclude.size() ? exclude[q] : -1;
      cand.clear();
      for (Eigen::Index id = 0; id < vectors.rows(); ++id) {
        if (id == skip) continue;
        cand.push_back({static_cast<uint32_t>(id), dot(&queries(qi, 0), &vectors(id, 0), dim)});
      }
      keep_top(cand, k);
      out[q] = cand;
    }
  });
  return out;
}

PairSet neighbor_pairs(const std::vector<std::vector<Neighbor>>& neighbors,
                       const std::vector<SegmentRef>& segments) {
  PairSet set;
  set.provenance = Provenance::kKnn;
  std::set<std::pair<uint32_t, uint32_t>> seen;
  for (size_t q = 0; q < neighbors.size(); ++q)
    for (const Neighbor& n : neighbors[q]) {
      const uint32_t a = std::min<uint32_t>(static_cast<uint32_t>(q), n.id);
      const uint32_t b = std::max<uint32_t>(static_cast<uint32_t>(q), n.id);
      if (a == b || !seen.insert({a, b}).second) continue;
      set.pairs.push_back(make_pair(segments[a], segments[b], "knn"));
    }
  return set;
}

namespace {

std::vector<int64_t> self_ids(size_t n) {
  std::vector<int64_t> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
  return ids;
}

}  // namespace

PairSet knn_pairs(const AnnIndex& index, const std::vector<SegmentRef>& segments, int k) {
  if (segments.size() != static_cast<size_t>(index.vectors.rows()))
    throw InputError("knn_pairs: one segment per indexed vector required");
  return neighbor_pairs(ann_search(index, index.vectors, k, self_ids(segments.size())), segments);
}

PairSet exact_knn(const RowMatrixXf& vectors, const std::vector<SegmentRef>& segments, int k) {
  if (segments.size() != static_cast<size_t>(vectors.rows()))
    throw InputError("exact_knn: one segment per vector required");
  return neighbor_pairs(exact_search(vectors, vectors, k, self_ids(segments.size())), segments);
}

RowMatrixXf normalize_rows(const RowMatrixXf& m) {
  RowMatrixXf out = m;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const float n = out.row(r).norm();
    if (n > 0.0f) out.row(r) /= n;
  }
  return out;
}

}  // namespace awe
