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
#include <filesystem>

#include "doctest.h"

namespace awe {
namespace {

namespace fs = std::filesystem;

EvalItem item(std::vector<float> v, std::string word, std::string spk = "s") {
  EvalItem it;
  it.awe = Eigen::Map<AweVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  it.word = std::move(word);
  it.speaker_id = std::move(spk);
  return it;
}

EvalItem at_angle(double deg, std::string word) {
  const double r = deg * M_PI / 180.0;
  return item({static_cast<float>(std::cos(r)), static_cast<float>(std::sin(r))}, std::move(word));
}

std::vector<EvalItem> random_items(Rng& rng, size_t n, int words, int speakers, int dim) {
  std::vector<EvalItem> items;
  for (size_t i = 0; i < n; ++i) {
    std::vector<float> v(static_cast<size_t>(dim));
    for (auto& x : v) x = static_cast<float>(rng.normal());
    items.push_back(item(v, "w" + std::to_string(rng.uniform_int(0, words - 1)),
                         "s" + std::to_string(rng.uniform_int(0, speakers - 1))));
  }
  return items;
}

bool has_positive(const std::vector<EvalItem>& items, bool cross) {
  for (size_t i = 0; i < items.size(); ++i)
    for (size_t j = i + 1; j < items.size(); ++j)
      if (items[i].word == items[j].word && (!cross || items[i].speaker_id != items[j].speaker_id))
        return true;
  return false;
}

TEST_CASE("hand-computable rankings") {
  // Pair ranking by angle gap: (0,1) pos, (1,2) neg, (2,3) pos, then negatives.
  std::vector<EvalItem> items = {at_angle(0, "a"), at_angle(10, "a"), at_angle(22, "b"),
                                 at_angle(41, "b")};
  const double five_sixths = (1.0 / 1.0 + 2.0 / 3.0) / 2.0;
  CHECK(samediff_map(items).map == five_sixths);
  CHECK(brute_force_map(items) == five_sixths);

  std::vector<EvalItem> perfect;
  for (int w = 0; w < 5; ++w)
    for (int k = 0; k < 4; ++k) {
      std::vector<float> v(5, 0.0f);
      v[static_cast<size_t>(w)] = 1.0f + 0.1f * static_cast<float>(k);
      perfect.push_back(item(v, "w" + std::to_string(w)));
    }
  EvalReport r = samediff_map(perfect);
  CHECK(r.map == 1.0);
  CHECK(r.n_items == 20);
  CHECK(r.n_pairs == 190);
  CHECK(r.n_positive_pairs == 5 * 6);
  REQUIRE(r.auc_roc.has_value());
  CHECK(*r.auc_roc == 1.0);
  CHECK(r.machine_line() == "map=1.00000000 n_items=20 n_pairs=190 n_pos=30");

  CHECK(brute_force_map({item({1, 0}, "x"), item({0, 1}, "x")}) == 1.0);
  CHECK_THROWS_WITH_AS(brute_force_map({item({1, 0}, "x"), item({0, 1}, "y")}),
                       "no positive pairs", InputError);
  CHECK_THROWS_WITH_AS(samediff_map({item({1, 0}, "x"), item({0, 1}, "y")}), "no positive pairs",
                       InputError);
  CHECK_THROWS_AS(samediff_map({item({1, 0}, "x")}), InputError);
}

TEST_CASE("samediff_map equals the brute-force oracle") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const size_t n = static_cast<size_t>(rng.uniform_int(2, 200));
    auto items = random_items(rng, n, static_cast<int>(rng.uniform_int(1, 30)),
                              static_cast<int>(rng.uniform_int(1, 4)), static_cast<int>(rng.uniform_int(1, 8)));
    // Occasional exact duplicates exercise the tie rule.
    if (n > 3 && trial % 5 == 0) items[1].awe = items[0].awe;
    const bool cross = trial % 3 == 0;
    if (!has_positive(items, cross)) continue;
    const double fast = samediff_map(items, {cross}).map;
    REQUIRE(std::abs(fast - brute_force_map(items, cross)) <= 1e-12);
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("MAP invariances") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto items = random_items(rng, 60, 6, 3, 5);
    const double base = samediff_map(items).map;
    auto scaled = items;
    for (auto& it : scaled) it.awe *= 3.5f;
    CHECK(samediff_map(scaled).map == doctest::Approx(base).epsilon(1e-12));
    auto shuffled = items;
    rng.shuffle(shuffled);
    CHECK(samediff_map(shuffled).map == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("random scores give AP near the positive rate") {
  Rng rng(13);
  for (int seed = 0; seed < 20; ++seed) {
    auto items = random_items(rng, 500, 10, 1, 16);
    EvalReport r = samediff_map(items);
    const double p = static_cast<double>(r.n_positive_pairs) / static_cast<double>(r.n_pairs);
    CHECK(std::abs(r.map - p) <= 0.05);
  }
}

TEST_CASE("noise never helps perfect embeddings on average") {
  Rng rng(14);
  double prev = 1.0;
  for (double noise : {0.0, 0.2, 0.5, 1.0, 2.0}) {
    double total = 0.0;
    for (int seed = 0; seed < 5; ++seed) {
      std::vector<EvalItem> items;
      for (int w = 0; w < 8; ++w)
        for (int k = 0; k < 6; ++k) {
          std::vector<float> v(8, 0.0f);
          v[static_cast<size_t>(w)] = 1.0f;
          for (auto& x : v) x += static_cast<float>(noise * rng.normal());
          items.push_back(item(v, "w" + std::to_string(w)));
        }
      total += samediff_map(items).map;
    }
    const double mean = total / 5.0;
    CHECK(mean <= prev + 1e-9);
    prev = mean;
  }
}

TEST_CASE("cross-speaker filter drops same-speaker pairs") {
  std::vector<EvalItem> items = {item({1, 0}, "a", "s1"), item({1, 0.1f}, "a", "s1"),
                                 item({1, 0.2f}, "a", "s2"), item({0, 1}, "b", "s2")};
  EvalReport all = samediff_map(items);
  EvalReport cross = samediff_map(items, {true});
  CHECK(all.n_pairs == 6);
  CHECK(cross.n_pairs == 4);
  CHECK(cross.n_positive_pairs == 2);
}

TEST_CASE("collect_eval_awes pools and drops short segments") {
  const fs::path dir = fs::temp_directory_path() / ("awe_eval_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<FrameMatrix> utts = {{"u", RowMatrixXf::Random(400, 6), 20.0f}};
  write_features(utts, dir / "f.awf");
  FeatureStore store = FeatureStore::open(dir / "f.awf");

  std::vector<WordSegment> segs;
  for (int i = 0; i < 100; ++i) {
    const bool short_one = i < 3;
    const double start = i * 0.08;
    segs.push_back({"u", start, start + (short_one ? 0.04 : 0.08), "w" + std::to_string(i % 7), "s"});
  }
  CollectedItems mean = collect_eval_awes(store, segs);
  CHECK(mean.items.size() == 100);
  CHECK(mean.dropped == 0);
  CHECK(mean.items[5].awe.isApprox(mean_pool(store.get_frames(mean.items[5].seg))));

  PoolerConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dim = 8;
  cfg.n_heads = 2;
  PoolerParamsF params = init_pooler(cfg);
  CollectedItems learned = collect_eval_awes(store, segs, &params);
  CHECK(learned.items.size() == 97);
  CHECK(learned.dropped == 3);
  CHECK(learned.items[0].awe.size() == 8);
  CollectedItems again = collect_eval_awes(store, segs, &params);
  for (size_t i = 0; i < learned.items.size(); ++i) CHECK(learned.items[i].awe == again.items[i].awe);

  std::vector<WordSegment> bad = {{"nope", 0.0, 0.1, "w", "s"}};
  CHECK_THROWS_AS(collect_eval_awes(store, bad), InputError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace awe
