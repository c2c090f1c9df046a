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

#include "awe/kmeans.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "awe/parallel.h"

namespace awe {

namespace {

constexpr size_t kAssignChunks = 16;

struct Assignment {
  std::vector<int32_t> labels;
  std::vector<double> dist;  // squared distance to the assigned centroid
};

double sq_dist(const RowMatrixXd& a, Eigen::Index i, const RowMatrixXd& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

Assignment assign_points(const RowMatrixXd& points, const RowMatrixXd& centers) {
  const Eigen::Index n = points.rows();
  Assignment a;
  a.labels.assign(static_cast<size_t>(n), 0);
  a.dist.assign(static_cast<size_t>(n), 0.0);
  parallel_chunks(static_cast<size_t>(n), kAssignChunks, [&](size_t b, size_t e, size_t) {
    for (size_t i = b; i < e; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int32_t arg = 0;
      for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const double d = sq_dist(points, static_cast<Eigen::Index>(i), centers, c);
        if (d < best) {
          best = d;
          arg = static_cast<int32_t>(c);
        }
      }
      a.labels[i] = arg;
      a.dist[i] = best;
    }
  });
  return a;
}

// Moves each empty centroid onto the point farthest from its own centroid,
// taken from clusters that keep at least one other member.
void repair_empty(const RowMatrixXd& points, RowMatrixXd& centers, Assignment& a) {
  const Eigen::Index k = centers.rows();
  std::vector<size_t> counts(static_cast<size_t>(k), 0);
  for (int32_t l : a.labels) ++counts[static_cast<size_t>(l)];
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] > 0) continue;
    size_t far = SIZE_MAX;
    for (size_t i = 0; i < a.labels.size(); ++i) {
      if (counts[static_cast<size_t>(a.labels[i])] < 2) continue;
      if (far == SIZE_MAX || a.dist[i] > a.dist[far]) far = i;
    }
    if (far == SIZE_MAX) break;
    --counts[static_cast<size_t>(a.labels[far])];
    ++counts[static_cast<size_t>(c)];
    centers.row(c) = points.row(static_cast<Eigen::Index>(far));
    a.labels[far] = static_cast<int32_t>(c);
    a.dist[far] = 0.0;
  }
}

double total(const std::vector<double>& v) {
  // Fixed left-to-right order.
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

Centroids lloyd(const RowMatrixXd& points, RowMatrixXd centers, int max_iters, double tol) {
  const Eigen::Index k = centers.rows();
  Centroids out;
  Assignment a;
  for (int it = 0; it < std::max(1, max_iters); ++it) {
    a = assign_points(points, centers);
    repair_empty(points, centers, a);
    const double cur = total(a.dist);
    out.inertia_history.push_back(cur);

    RowMatrixXd sums = RowMatrixXd::Zero(k, points.cols());
    std::vector<size_t> counts(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < a.labels.size(); ++i) {
      sums.row(a.labels[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<size_t>(a.labels[i])];
    }
    RowMatrixXd next = centers;
    for (Eigen::Index c = 0; c < k; ++c)
      if (counts[static_cast<size_t>(c)] > 0)
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
    const double shift = (next - centers).norm();
    const double scale = std::max(centers.norm(), 1e-12);
    centers = std::move(next);
    if (shift / scale < tol) break;
  }
  // Final pass so the returned history ends with the inertia of `centers`.
  a = assign_points(points, centers);
  repair_empty(points, centers, a);
  const double final_inertia = total(a.dist);
  if (final_inertia != out.inertia_history.back()) out.inertia_history.push_back(final_inertia);

  for (size_t i = 1; i < out.inertia_history.size(); ++i)
    if (out.inertia_history[i] > out.inertia_history[i - 1] * (1.0 + 1e-12) + 1e-12)
      throw InternalError("k-means inertia increased between iterations");
  out.centers = centers.cast<float>();
  return out;
}

RowMatrixXd kmeanspp(const RowMatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  RowMatrixXd centers(k, points.cols());
  const auto first = static_cast<Eigen::Index>(rng.uniform_int(0, n - 1));
  centers.row(0) = points.row(first);
  std::vector<double> d2(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<size_t>(i)] = sq_dist(points, i, centers, 0);
  for (int c = 1; c < k; ++c) {
    const double sum = total(d2);
    Eigen::Index pick = 0;
    if (sum > 0.0) {
      double r = rng.uniform() * sum;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2[static_cast<size_t>(i)];
        if (r < 0.0 && d2[static_cast<size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_int(0, n - 1));
    }
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<size_t>(i)] = std::min(d2[static_cast<size_t>(i)], sq_dist(points, i, centers, c));
  }
  return centers;
}

}  // namespace

Centroids fit_kmeans(const RowMatrixXf& data, int k, const KMeansOptions& options) {
  if (k < 1) throw InputError("kmeans: k must be >= 1");
  if (data.rows() < k)
    throw InputError("kmeans: " + std::to_string(data.rows()) + " points but k=" +
                     std::to_string(k));
  const RowMatrixXd points = data.cast<double>();
  Centroids best;
  for (int run = 0; run < std::max(1, options.n_init); ++run) {
    Rng rng(derive_seed(options.seed, static_cast<uint64_t>(run)));
    Centroids c = lloyd(points, kmeanspp(points, k, rng), options.max_iters, options.tol);
    if (run == 0 || c.inertia_history.back() < best.inertia_history.back()) best = std::move(c);
  }
  return best;
}

Centroids fit_kmeans_from(const RowMatrixXf& data, const RowMatrixXf& initial, int max_iters,
                          double tol) {
  if (initial.rows() < 1 || initial.cols() != data.cols())
    throw InputError("kmeans: initial centroids do not match the data");
  if (data.rows() < initial.rows()) throw InputError("kmeans: fewer points than clusters");
  return lloyd(data.cast<double>(), initial.cast<double>(), max_iters, tol);
}

std::vector<int32_t> assign(const Centroids& centroids, const RowMatrixXf& frames) {
  if (frames.cols() != centroids.dim())
    throw InputError("assign: dimension mismatch (frames D=" + std::to_string(frames.cols()) +
                     ", centroids D=" + std::to_string(centroids.dim()) + ")");
  return assign_points(frames.cast<double>(), centroids.centers.cast<double>()).labels;
}

double inertia(const Centroids& centroids, const RowMatrixXf& frames) {
  if (frames.cols() != centroids.dim()) throw InputError("inertia: dimension mismatch");
  return total(assign_points(frames.cast<double>(), centroids.centers.cast<double>()).dist);
}

RowMatrixXf sample_frames(const FeatureStore& store, double fraction, uint64_t seed,
                          size_t min_rows) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw InputError("sample_frames: fraction must be in (0, 1]");
  std::vector<std::pair<size_t, int64_t>> all;  // (utterance, frame)
  for (size_t u = 0; u < store.size(); ++u)
    for (int64_t t = 0; t < store.num_frames(store.utt_ids()[u]); ++t) all.emplace_back(u, t);
  size_t want = static_cast<size_t>(std::ceil(fraction * static_cast<double>(all.size())));
  want = std::min(all.size(), std::max(want, min_rows));
  Rng rng(seed);
  for (size_t i = 0; i < want; ++i) {
    const size_t j = static_cast<size_t>(
        rng.uniform_int(static_cast<int64_t>(i), static_cast<int64_t>(all.size()) - 1));
    std::swap(all[i], all[j]);
  }
  all.resize(want);
  std::sort(all.begin(), all.end());
  RowMatrixXf out(static_cast<Eigen::Index>(want), store.dim());
  size_t row = 0;
  for (size_t i = 0; i < all.size();) {
    const size_t u = all[i].first;
    const RowMatrixXf frames = store.get_utterance(store.utt_ids()[u]);
    for (; i < all.size() && all[i].first == u; ++i)
      out.row(static_cast<Eigen::Index>(row++)) = frames.row(all[i].second);
  }
  return out;
}

void export_targets(const FeatureStore& store, const Centroids& centroids,
                    const std::filesystem::path& path) {
  if (store.dim() != centroids.dim())
    throw InputError("export_targets: dimension mismatch (features D=" +
                     std::to_string(store.dim()) + ", centroids D=" +
                     std::to_string(centroids.dim()) + ")");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  for (const auto& id : store.utt_ids()) {
    const auto labels = assign(centroids, store.get_utterance(id));
    os << id << '\t';
    for (size_t i = 0; i < labels.size(); ++i) os << (i ? " " : "") << labels[i];
    os << '\n';
  }
  if (!os) throw InternalError("write failed: " + path.string());
}

void save_centroids(const Centroids& centroids, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os.write("AWK1", 4);
  const uint32_t k = static_cast<uint32_t>(centroids.k());
  const uint32_t d = static_cast<uint32_t>(centroids.dim());
  os.write(reinterpret_cast<const char*>(&k), 4);
  os.write(reinterpret_cast<const char*>(&d), 4);
  os.write(reinterpret_cast<const char*>(centroids.centers.data()),
           static_cast<std::streamsize>(centroids.centers.size() * sizeof(float)));
  if (!os) throw InternalError("write failed: " + path.string());
}

Centroids load_centroids(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  char magic[4];
  uint32_t k = 0, d = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, "AWK1", 4) != 0)
    throw InputError(path.string() + ": not a centroid file");
  if (!is.read(reinterpret_cast<char*>(&k), 4) || !is.read(reinterpret_cast<char*>(&d), 4) ||
      k == 0 || d == 0)
    throw InputError(path.string() + ": bad centroid header");
  Centroids c;
  c.centers.resize(k, d);
  if (!is.read(reinterpret_cast<char*>(c.centers.data()),
               static_cast<std::streamsize>(c.centers.size() * sizeof(float))))
    throw InputError(path.string() + ": truncated centroid payload");
  return c;
}

}  // namespace awe
