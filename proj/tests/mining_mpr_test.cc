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

#include <set>

#include "doctest.h"

namespace awe {
namespace {

PhoneAlignment make_alignment(const std::string& utt, const std::vector<std::string>& phones,
                              double dur = 0.06) {
  PhoneAlignment a{utt, "spk", {}};
  double t = 0.0;
  for (const auto& p : phones) {
    a.entries.push_back({t, t + dur, p});
    t += dur;
  }
  return a;
}

std::vector<NgramOccurrence> random_occurrences(Rng& rng, size_t max_occ) {
  std::vector<NgramOccurrence> all;
  const int utts = static_cast<int>(rng.uniform_int(1, 12));
  const int inventory = static_cast<int>(rng.uniform_int(2, 6));
  for (int u = 0; u < utts && all.size() < max_occ; ++u) {
    std::vector<std::string> phones;
    const int len = static_cast<int>(rng.uniform_int(0, 30));
    for (int i = 0; i < len; ++i)
      phones.push_back(rng.uniform() < 0.1 ? "sil" : "p" + std::to_string(rng.uniform_int(0, inventory - 1)));
    auto occ = extract_ngrams(make_alignment("u" + std::to_string(u), phones), 2, 5, 20.0);
    for (auto& o : occ) {
      if (all.size() >= max_occ) break;
      all.push_back(std::move(o));
    }
  }
  return all;
}

TEST_CASE("extract_ngrams counts contiguous runs") {
  auto occ = extract_ngrams(make_alignment("u", {"a", "b", "c", "d", "e", "f"}), 2, 5, 20.0);
  CHECK(occ.size() == 5 + 4 + 3 + 2);
  for (const auto& o : occ) {
    CHECK(o.n >= 2);
    CHECK(o.n <= 5);
    CHECK(std::count(o.key.begin(), o.key.end(), '|') == o.n - 1);
    CHECK(o.seg.utt_id == "u");
    CHECK(o.speaker_id == "spk");
  }

  auto sil = extract_ngrams(make_alignment("u", {"a", "b", "sil", "c", "d"}), 2, 2, 20.0);
  std::set<std::string> keys;
  for (const auto& o : sil) keys.insert(o.key);
  CHECK(keys == std::set<std::string>{"a|b", "c|d"});

  CHECK(extract_ngrams(make_alignment("u", {"a", "b", "c", "d"}), 5, 5, 20.0).empty());
  CHECK(extract_ngrams(PhoneAlignment{"u", "s", {}}, 2, 5, 20.0).empty());
}

TEST_CASE("extract_ngrams maps times to frames") {
  // 60 ms phones at 20 ms frames: a 2-gram starting at phone 1 spans frames [3, 9).
  auto occ = extract_ngrams(make_alignment("u", {"a", "b", "c"}), 2, 2, 20.0);
  REQUIRE(occ.size() == 2);
  CHECK(occ[1].key == "b|c");
  CHECK(occ[1].seg == SegmentRef{"u", 3, 9});
}

TEST_CASE("index_ngrams groups by key") {
  std::vector<NgramOccurrence> occ = {
      {{"u1", 0, 4}, "a|b", 2, "s", 0, 0}, {{"u2", 2, 6}, "a|b", 2, "s", 0, 0},
      {{"u1", 4, 8}, "b|c", 2, "s", 0, 0}};
  NgramIndex idx = index_ngrams(occ);
  CHECK(idx.size() == 2);
  REQUIRE(idx.find("a|b") != nullptr);
  CHECK(idx.find("a|b")->size() == 2);
  CHECK(idx.find("zz") == nullptr);

  std::vector<NgramOccurrence> distinct = {
      {{"u1", 0, 4}, "x", 1, "s", 0, 0}, {{"u1", 4, 8}, "y", 1, "s", 0, 0}};
  NgramIndex d = index_ngrams(distinct);
  CHECK(d.size() == 2);
  for (const auto& [k, list] : d.entries()) CHECK(list.size() == 1);
}

TEST_CASE("mine_pairs handshake counts and caps") {
  std::vector<NgramOccurrence> four;
  for (int i = 0; i < 4; ++i) four.push_back({{"u" + std::to_string(i), 0, 4}, "k", 2, "s", 0, 0});
  CHECK(mine_pairs(index_ngrams(four), 0, 1, true).size() == 6);

  std::vector<NgramOccurrence> many;
  for (int i = 0; i < 500; ++i) many.push_back({{"u" + std::to_string(i), 0, 4}, "k", 2, "s", 0, 0});
  PairSet capped = mine_pairs(index_ngrams(many), 300, 7, true);
  CHECK(capped.size() == 300 * 299 / 2);
  std::set<SegmentRef> used;
  for (const auto& p : capped.pairs) {
    used.insert(p.a);
    used.insert(p.b);
  }
  CHECK(used.size() == 300);

  // Same seed, same subsample; another seed, another subsample.
  CHECK(sorted_pairs(mine_pairs(index_ngrams(many), 300, 7, true)) == sorted_pairs(capped));
  CHECK(sorted_pairs(mine_pairs(index_ngrams(many), 300, 8, true)) != sorted_pairs(capped));

  std::vector<NgramOccurrence> overlap = {{{"u", 0, 6}, "k", 2, "s", 0, 0},
                                          {{"u", 3, 9}, "k", 2, "s", 0, 0}};
  CHECK(mine_pairs(index_ngrams(overlap), 0, 1, true).size() == 0);
  CHECK(mine_pairs(index_ngrams(overlap), 0, 1, false).size() == 1);

  CHECK_THROWS_AS(mine_pairs(index_ngrams(four), 1, 1, true), InputError);
}

TEST_CASE("brute_force_pairs") {
  CHECK(brute_force_pairs({}).size() == 0);
  std::vector<NgramOccurrence> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({{"u" + std::to_string(i), 0, 4}, "k", 2, "s", 0, 0});
  CHECK(brute_force_pairs(ten).size() == 45);
}

TEST_CASE("mine_pairs without a cap equals the brute-force oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    auto occ = random_occurrences(rng, 1000);
    auto oracle = sorted_pairs(brute_force_pairs(occ));
    auto mined = sorted_pairs(mine_pairs(index_ngrams(occ), 0, 5, false));
    REQUIRE(mined == oracle);
    for (const auto& p : mined) REQUIRE(p.a < p.b);
  }
}

TEST_CASE("mine_pairs is deterministic and respects the cap per key") {
  Rng rng(100);
  for (int trial = 0; trial < 20; ++trial) {
    auto occ = random_occurrences(rng, 1000);
    NgramIndex idx = index_ngrams(occ);
    PairSet a = mine_pairs(idx, 4, 11, true);
    PairSet b = mine_pairs(idx, 4, 11, true);
    REQUIRE(a.pairs == b.pairs);
    std::map<std::string, std::set<SegmentRef>> per_key;
    for (const auto& p : a.pairs) {
      per_key[p.key].insert(p.a);
      per_key[p.key].insert(p.b);
      REQUIRE_FALSE(segments_overlap(p.a, p.b));
    }
    for (const auto& [k, s] : per_key) REQUIRE(s.size() <= 4);
  }
}

}  // namespace
}  // namespace awe
