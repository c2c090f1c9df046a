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

#include <filesystem>
#include <set>

#include "doctest.h"

namespace awe {
namespace {

namespace fs = std::filesystem;

RowMatrixXf clustered(Rng& rng, int clusters, int per, int dim) {
  RowMatrixXf m(clusters * per, dim);
  for (int c = 0; c < clusters; ++c) {
    Eigen::VectorXf mu(dim);
    for (int d = 0; d < dim; ++d) mu(d) = static_cast<float>(rng.normal() * 4.0);
    for (int i = 0; i < per; ++i)
      for (int d = 0; d < dim; ++d) m(c * per + i, d) = mu(d) + static_cast<float>(rng.normal());
  }
  return m;
}

std::vector<SegmentRef> dummy_segments(Eigen::Index n) {
  std::vector<SegmentRef> s;
  for (Eigen::Index i = 0; i < n; ++i) s.push_back({"u" + std::to_string(i), 0, 4});
  return s;
}

TEST_CASE("sample_segments respects durations and gaps") {
  const fs::path dir = fs::temp_directory_path() / ("awe_knn_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Rng rng(1);
  std::vector<FrameMatrix> utts;
  for (int u = 0; u < 6; ++u)
    utts.push_back({"utt" + std::to_string(u),
                    RowMatrixXf::Random(rng.uniform_int(1, 300), 3), 20.0f});
  write_features(utts, dir / "f.awf");
  FeatureStore store = FeatureStore::open(dir / "f.awf");

  SegmentSampling opts;
  opts.seed = 5;
  auto segs = sample_segments(store, opts);
  CHECK(!segs.empty());
  for (size_t i = 0; i < segs.size(); ++i) {
    const double ms = static_cast<double>(segs[i].length()) * 20.0;
    CHECK(ms >= 80.0);
    CHECK(ms <= 310.0);
    CHECK(segs[i].end_frame <= store.num_frames(segs[i].utt_id));
    if (i > 0 && segs[i - 1].utt_id == segs[i].utt_id)
      CHECK((segs[i].start_frame - segs[i - 1].end_frame) * 20.0 >= 80.0);
  }
  CHECK(sample_segments(store, opts) == segs);

  opts.min_ms = 81;
  opts.max_ms = 99;
  CHECK_THROWS_AS(sample_segments(store, opts), InputError);
  fs::remove_all(dir);
}

TEST_CASE("ann index partitions every vector") {
  Rng rng(2);
  RowMatrixXf x = clustered(rng, 10, 50, 8);
  AnnIndex idx = build_ann_index(x, 16, 4, 1);
  std::set<uint32_t> seen;
  size_t total = 0;
  for (const auto& l : idx.lists) {
    total += l.size();
    seen.insert(l.begin(), l.end());
  }
  CHECK(total == static_cast<size_t>(x.rows()));
  CHECK(seen.size() == static_cast<size_t>(x.rows()));
  CHECK_THROWS_AS(build_ann_index(x, 16, 17, 1), InputError);
  CHECK_THROWS_AS(build_ann_index(x.topRows(3), 16, 1, 1), InputError);
}

TEST_CASE("full probing reproduces exact search") {
  Rng rng(3);
  RowMatrixXf x = clustered(rng, 8, 40, 6);
  AnnIndex idx = build_ann_index(x, 8, 8, 2);
  std::vector<int64_t> self(static_cast<size_t>(x.rows()));
  for (size_t i = 0; i < self.size(); ++i) self[i] = static_cast<int64_t>(i);
  auto a = ann_search(idx, x, 5, self);
  auto e = exact_search(x, x, 5, self);
  REQUIRE(a.size() == e.size());
  for (size_t q = 0; q < a.size(); ++q) {
    REQUIRE(a[q].size() == 5);
    for (size_t j = 0; j < 5; ++j) {
      CHECK(a[q][j].id == e[q][j].id);
      CHECK(a[q][j].id != q);
      if (j > 0) CHECK(a[q][j - 1].score >= a[q][j].score);
    }
  }
  auto segs = dummy_segments(x.rows());
  CHECK(sorted_pairs(knn_pairs(idx, segs, 5)) == sorted_pairs(exact_knn(x, segs, 5)));
}

TEST_CASE("ann recall at a quarter of the lists") {
  Rng rng(4);
  RowMatrixXf x = clustered(rng, 40, 50, 16);
  AnnIndex idx = build_ann_index(x, 32, 8, 3);
  std::vector<int64_t> self(static_cast<size_t>(x.rows()));
  for (size_t i = 0; i < self.size(); ++i) self[i] = static_cast<int64_t>(i);
  auto a = ann_search(idx, x, 5, self);
  auto e = exact_search(x, x, 5, self);
  size_t hit = 0, total = 0;
  for (size_t q = 0; q < a.size(); ++q) {
    std::set<uint32_t> truth;
    for (const auto& n : e[q]) truth.insert(n.id);
    for (const auto& n : a[q]) hit += truth.count(n.id);
    total += e[q].size();
  }
  CHECK(static_cast<double>(hit) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("knn pair edge cases") {
  RowMatrixXf two(2, 3);
  two << 1, 2, 3, 1, 2, 3;
  auto segs = dummy_segments(2);
  PairSet p = exact_knn(two, segs, 1);
  CHECK(p.size() == 1);
  CHECK(p.provenance == Provenance::kKnn);
  CHECK(p.pairs[0].key == "knn");
  CHECK(exact_knn(two, segs, 0).size() == 0);

  // Mutual neighbours collapse to one unordered pair.
  Rng rng(5);
  RowMatrixXf x = clustered(rng, 3, 10, 4);
  auto s30 = dummy_segments(x.rows());
  PairSet k3 = exact_knn(x, s30, 3);
  std::set<std::pair<SegmentRef, SegmentRef>> uniq;
  for (const auto& pr : k3.pairs) {
    CHECK(pr.a < pr.b);
    uniq.insert({pr.a, pr.b});
  }
  CHECK(uniq.size() == k3.size());
  CHECK(k3.size() <= 30 * 3);
  CHECK(k3.size() >= 30 * 3 / 2);

  RowMatrixXf n = normalize_rows(x);
  for (Eigen::Index r = 0; r < n.rows(); ++r) CHECK(n.row(r).norm() == doctest::Approx(1.0f));
}

}  // namespace
}  // namespace awe
