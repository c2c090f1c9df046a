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

#include "awe/config.h"

#include <filesystem>
#include <fstream>

#include "doctest.h"

namespace awe {
namespace {

namespace fs = std::filesystem;

TEST_CASE("defaults cover every module") {
  RunConfig c;
  CHECK(c.get_uint("seed") == 0);
  CHECK(c.get_int("mine.max_instances") == 300);
  CHECK(c.get_int("kmeans.k") == 500);
  CHECK(c.get_uint("train.batch_size") == 150);
  CHECK(c.get_int("train.epochs") == 5);
  CHECK(c.get_int("train.max_iterations") == 1000);
  CHECK(c.get_double("train.learning_rate") == 1e-4);
  CHECK(c.get_list("mine.silence_labels") == std::vector<std::string>{"sil", "sp", "spn", "nsn"});

  const TrainConfig t = train_config(c);
  CHECK(t.temperature == 0.07);
  CHECK(t.denominator_mode == DenominatorMode::kStandard);
  const PoolerConfig p = pooler_config(c, 768);
  CHECK(p == PoolerConfig{});
  const MprSettings m = mpr_settings(c);
  CHECK(m.n_min == 2);
  CHECK(m.n_max == 5);
  const CorpusSpec s = corpus_spec(c);
  CHECK(s.n_phone_types == 40);
  CHECK(s.n_word_types == 200);
  CHECK(s.n_speakers == 8);
  CHECK(s.feature_dim == 32);
}

TEST_CASE("unknown keys and bad values are rejected") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(c.set("train.lr", "1"), "config: unknown key 'train.lr'", InputError);
  CHECK_THROWS_AS(c.set("train.epochs", "five"), InputError);
  CHECK_THROWS_AS(c.set("seed", "-1"), InputError);
  CHECK_THROWS_AS(c.set("train.learning_rate", "nan"), InputError);
  CHECK_THROWS_AS(c.set("mine.exclude_overlap", "maybe"), InputError);
  CHECK_THROWS_AS(c.apply("no_equals_sign"), InputError);
  c.set("train.denominator", "sideways");
  CHECK_THROWS_AS(train_config(c), InputError);
  RunConfig d;
  d.set("pooler.n_heads", "3");
  CHECK_THROWS_AS(pooler_config(d, 32), InputError);
  RunConfig e;
  e.set("mine.max_instances", "1");
  CHECK_THROWS_AS(mpr_settings(e), InputError);
}

TEST_CASE("config files and resolved output round-trip") {
  const fs::path dir = fs::temp_directory_path() / ("awe_cfg_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "run.cfg");
    os << "# comment\n\nseed = 42\ntrain.epochs=3\n  mine.silence_labels = sil, pau \n";
  }
  RunConfig c;
  c.load_file(dir / "run.cfg");
  CHECK(c.get_uint("seed") == 42);
  CHECK(c.get_int("train.epochs") == 3);
  CHECK(c.get_list("mine.silence_labels") == std::vector<std::string>{"sil", "pau"});

  c.write_resolved(dir / "resolved.cfg");
  RunConfig back;
  back.load_file(dir / "resolved.cfg");
  CHECK(back.resolved() == c.resolved());

  {
    std::ofstream os(dir / "bad.cfg");
    os << "seed=1\nwho=what\n";
  }
  RunConfig bad;
  CHECK_THROWS_WITH_AS(bad.load_file(dir / "bad.cfg"),
                       ((dir / "bad.cfg").string() + ":2: config: unknown key 'who'").c_str(), InputError);
  CHECK_THROWS_AS(bad.load_file(dir / "missing.cfg"), InputError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace awe
