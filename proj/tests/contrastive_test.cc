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

#include "awe/contrastive.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "gradcheck.h"

namespace awe {
namespace {

using Vec = Eigen::VectorXd;

Vec random_vec(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// Unit vector whose cosine with e0 is exactly `c` (to rounding).
Vec with_cosine(double c, int dim, int axis) {
  Vec v = Vec::Zero(dim);
  v(0) = c;
  v(axis) = std::sqrt(1.0 - c * c);
  return v;
}

TEST_CASE("cosine basics") {
  Vec v(3);
  v << 1.0, -2.0, 0.5;
  CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(v, (2.0 * v).eval()) == doctest::Approx(1.0).epsilon(1e-15));
  Vec x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  CHECK(cosine(x, y) == 0.0);
  CHECK(cosine(Vec::Zero(3).eval(), v) == 0.0);
  CHECK_THROWS_AS(cosine(x, v), InputError);
}

TEST_CASE("ntxent_loss closed forms") {
  const Vec anchor = Vec::Unit(3, 0);
  std::vector<Vec> neg = {Vec::Unit(3, 1)};
  CHECK(ntxent_loss<double>(anchor, anchor, neg, 1.0, DenominatorMode::kStandard) ==
        doctest::Approx(0.3132616875182228).epsilon(1e-14));

  // Literal mode with the positive as the only negative: numerator == denominator.
  std::vector<Vec> self = {anchor};
  CHECK(ntxent_loss<double>(anchor, anchor, self, 0.5, DenominatorMode::kLiteral) == 0.0);

  // k negatives at the positive's cosine: loss = log(k + 1).
  for (int k : {1, 3, 10}) {
    const Vec pos = with_cosine(0.3, 12, 1);
    std::vector<Vec> negs;
    for (int i = 0; i < k; ++i) negs.push_back(with_cosine(0.3, 12, 2 + i));
    CHECK(ntxent_loss<double>(Vec::Unit(12, 0), pos, negs, 0.1, DenominatorMode::kStandard) ==
          doctest::Approx(std::log(k + 1.0)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(ntxent_loss<double>(anchor, anchor, {}, 1.0, DenominatorMode::kStandard),
                  InputError);
}

TEST_CASE("ntxent_loss properties") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec a = random_vec(rng, 6), p = random_vec(rng, 6);
    std::vector<Vec> negs;
    for (int i = 0; i < 4; ++i) negs.push_back(random_vec(rng, 6));
    const double tau = rng.uniform(0.05, 2.0);
    const double l = ntxent_loss<double>(a, p, negs, tau, DenominatorMode::kStandard);
    REQUIRE(l >= 0.0);
    // Rescaling any single embedding leaves the loss unchanged.
    std::vector<Vec> scaled = negs;
    scaled[2] *= 3.7;
    REQUIRE(ntxent_loss<double>((0.2 * a).eval(), p, scaled, tau, DenominatorMode::kStandard) ==
            doctest::Approx(l).epsilon(1e-12));
    // Moving the positive toward the anchor lowers the loss when the negative
    // cosines stay fixed: test on the logit form directly.
    const Vec anchor = Vec::Unit(8, 0);
    std::vector<Vec> fixed = {with_cosine(0.1, 8, 5), with_cosine(-0.4, 8, 6)};
    const double c1 = rng.uniform(-0.9, 0.8);
    const double c2 = c1 + rng.uniform(0.01, 0.1);
    REQUIRE(ntxent_loss<double>(anchor, with_cosine(c2, 8, 1), fixed, tau,
                                DenominatorMode::kStandard) <
            ntxent_loss<double>(anchor, with_cosine(c1, 8, 1), fixed, tau,
                                DenominatorMode::kStandard));
  }
  // Extreme cosines and temperatures stay finite.
  const Vec a = Vec::Unit(4, 0);
  std::vector<Vec> negs = {-a, a, -a};
  for (double tau : {1e-3, 1e-2, 1.0})
    for (auto mode : {DenominatorMode::kStandard, DenominatorMode::kLiteral}) {
      CHECK(std::isfinite(ntxent_loss<double>(a, -a, negs, tau, mode)));
      CHECK(std::isfinite(ntxent_loss<double>(a, a, negs, tau, mode)));
      CHECK(std::isfinite(ntxent_loss<float>(Eigen::VectorXf::Unit(4, 0), -Eigen::VectorXf::Unit(4, 0),
                                             std::vector<Eigen::VectorXf>{Eigen::VectorXf::Unit(4, 0)},
                                             static_cast<float>(tau), mode)));
    }
}

double max_ntxent_grad_error(Rng& rng, DenominatorMode mode) {
  const int dim = static_cast<int>(rng.uniform_int(2, 8));
  const int k = static_cast<int>(rng.uniform_int(1, 6));
  Vec a = random_vec(rng, dim), p = random_vec(rng, dim);
  std::vector<Vec> negs;
  for (int i = 0; i < k; ++i) negs.push_back(random_vec(rng, dim));
  const double tau = rng.uniform(0.1, 1.5);
  auto g = ntxent_grad<double>(a, p, negs, tau, mode);
  auto loss = [&] { return ntxent_loss<double>(a, p, negs, tau, mode); };
  awe::testing::GradCheckResult r;
  awe::testing::check_tensor("anchor", std::span<double>(a.data(), a.size()),
                             std::span<const double>(g.anchor.data(), g.anchor.size()), loss, r);
  awe::testing::check_tensor("positive", std::span<double>(p.data(), p.size()),
                             std::span<const double>(g.positive.data(), g.positive.size()), loss,
                             r);
  for (int i = 0; i < k; ++i)
    awe::testing::check_tensor(
        "neg", std::span<double>(negs[i].data(), negs[i].size()),
        std::span<const double>(g.negatives[i].data(), g.negatives[i].size()), loss, r);
  return r.max_rel_err;
}

TEST_CASE("ntxent_grad matches finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    REQUIRE(max_ntxent_grad_error(rng, DenominatorMode::kStandard) < 1e-6);
    REQUIRE(max_ntxent_grad_error(rng, DenominatorMode::kLiteral) < 1e-6);
  }
}

TEST_CASE("ntxent_grad symmetry and temperature decay") {
  const Vec anchor = Vec::Unit(10, 0);
  const Vec pos = with_cosine(0.4, 10, 1);
  std::vector<Vec> negs;
  for (int i = 0; i < 4; ++i) negs.push_back(with_cosine(0.4, 10, 2 + i));
  auto g = ntxent_grad<double>(anchor, pos, negs, 0.5, DenominatorMode::kStandard);
  CHECK(g.positive.norm() > 0.0);
  for (int i = 1; i < 4; ++i) CHECK(g.negatives[i].norm() == doctest::Approx(g.negatives[0].norm()));

  Rng rng(8);
  const Vec a = random_vec(rng, 6), p = random_vec(rng, 6);
  std::vector<Vec> n = {random_vec(rng, 6), random_vec(rng, 6), random_vec(rng, 6)};
  auto total_norm = [&](double tau) {
    auto gr = ntxent_grad<double>(a, p, n, tau, DenominatorMode::kStandard);
    double s = gr.anchor.squaredNorm() + gr.positive.squaredNorm();
    for (const auto& v : gr.negatives) s += v.squaredNorm();
    return std::sqrt(s);
  };
  double prev = total_norm(1.0);
  for (double tau = 2.0; tau <= 1024.0; tau *= 2.0) {
    const double cur = total_norm(tau);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("batch_ntxent agrees with per-anchor gradients and finite differences") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int slots = static_cast<int>(rng.uniform_int(2, 6));
    const int dim = static_cast<int>(rng.uniform_int(2, 7));
    RowMatrixXd awes(2 * slots, dim);
    for (Eigen::Index i = 0; i < awes.size(); ++i) awes.data()[i] = rng.normal();
    std::vector<int> key(slots);
    for (int s = 0; s < slots; ++s) key[s] = static_cast<int>(rng.uniform_int(0, 2));
    std::vector<std::vector<uint32_t>> negatives(slots);
    for (int i = 0; i < slots; ++i)
      for (int j = 0; j < slots; ++j)
        if (i != j && key[i] != key[j]) negatives[i].push_back(j);
    const double tau = rng.uniform(0.1, 1.0);
    const auto mode = trial % 2 ? DenominatorMode::kLiteral : DenominatorMode::kStandard;

    auto bl = batch_ntxent<double>(awes, negatives, tau, mode);

    // Route 2: sum of per-view ntxent_grad calls.
    RowMatrixXd expect = RowMatrixXd::Zero(2 * slots, dim);
    double loss = 0.0;
    size_t terms = 0;
    for (int r = 0; r < 2 * slots; ++r) {
      const int s = r % slots;
      if (negatives[s].empty()) continue;
      const int partner = r < slots ? r + slots : r - slots;
      std::vector<Vec> negs;
      std::vector<int> rows;
      for (uint32_t j : negatives[s]) {
        rows.push_back(static_cast<int>(j));
        rows.push_back(static_cast<int>(j) + slots);
      }
      for (int row : rows) negs.push_back(awes.row(row).transpose());
      auto g = ntxent_grad<double>(awes.row(r).transpose(), awes.row(partner).transpose(), negs,
                                   tau, mode);
      loss += g.loss;
      ++terms;
      expect.row(r) += g.anchor.transpose();
      expect.row(partner) += g.positive.transpose();
      for (size_t i = 0; i < rows.size(); ++i) expect.row(rows[i]) += g.negatives[i].transpose();
    }
    REQUIRE(bl.terms == terms);
    if (terms == 0) continue;
    expect /= static_cast<double>(terms);
    REQUIRE(bl.loss == doctest::Approx(loss / terms).epsilon(1e-12));
    REQUIRE((bl.grad - expect).cwiseAbs().maxCoeff() < 1e-12);

    awe::testing::GradCheckResult r;
    auto f = [&] { return batch_ntxent<double>(awes, negatives, tau, mode).loss; };
    awe::testing::check_tensor("awes", std::span<double>(awes.data(), awes.size()),
                               std::span<const double>(bl.grad.data(), bl.grad.size()), f, r);
    REQUIRE(r.max_rel_err < 1e-6);
  }
}

PairSet keyed_pairs(size_t n, size_t distinct_keys) {
  PairSet set;
  for (size_t i = 0; i < n; ++i)
    set.pairs.push_back(make_pair({"u" + std::to_string(i), 0, 4}, {"v" + std::to_string(i), 0, 4},
                                  "k" + std::to_string(i % distinct_keys)));
  return set;
}

TEST_CASE("build_batches") {
  auto plan = build_batches(keyed_pairs(300, 300), 150, 1);
  REQUIRE(plan.batches.size() == 2);
  CHECK(plan.batches[0].size() == 150);
  CHECK(plan.batches[1].size() == 150);
  CHECK_FALSE(plan.warning);
  std::set<size_t> seen;
  for (const auto& b : plan.batches)
    for (size_t i : b.pair_index) seen.insert(i);
  CHECK(seen.size() == 300);

  auto again = build_batches(keyed_pairs(300, 300), 150, 1);
  CHECK(again.batches[0].pair_index == plan.batches[0].pair_index);
  auto other = build_batches(keyed_pairs(300, 300), 150, 2);
  CHECK(other.batches[0].pair_index != plan.batches[0].pair_index);

  auto small = build_batches(keyed_pairs(40, 40), 150, 1);
  REQUIRE(small.batches.size() == 1);
  CHECK(small.batches[0].size() == 40);
  CHECK(small.warning);

  CHECK_THROWS_AS(build_batches(keyed_pairs(10, 10), 1, 1), InputError);
}

TEST_CASE("build_batches excludes same-key slots from negatives") {
  auto plan = build_batches(keyed_pairs(60, 7), 30, 3);
  for (const auto& b : plan.batches)
    for (size_t i = 0; i < b.size(); ++i) {
      std::set<uint32_t> neg(b.negatives[i].begin(), b.negatives[i].end());
      for (size_t j = 0; j < b.size(); ++j) {
        const bool expected = j != i && b.keys[j] != b.keys[i];
        REQUIRE(neg.contains(static_cast<uint32_t>(j)) == expected);
      }
    }

  PairSet knn = keyed_pairs(10, 1);
  knn.provenance = Provenance::kKnn;
  for (auto& p : knn.pairs) p.key = "knn";
  auto kplan = build_batches(knn, 10, 0);
  for (size_t i = 0; i < 10; ++i) CHECK(kplan.batches[0].negatives[i].size() == 9);
}

}  // namespace
}  // namespace awe
