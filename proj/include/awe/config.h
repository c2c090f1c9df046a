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

#ifndef AWE_CONFIG_H_
#define AWE_CONFIG_H_

// Flat key=value run configuration. Every key has a registered default and a
// type; unknown keys and unparsable values are input errors. Files hold one
// assignment per line; blank lines and lines starting with '#' are skipped.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "awe/contrastive.h"
#include "awe/evaluation.h"
#include "awe/kmeans.h"
#include "awe/mining_knn.h"
#include "awe/mining_mpr.h"
#include "awe/pooling.h"
#include "awe/synthcorpus.h"

namespace awe {

enum class ConfigType { kInt, kUInt, kDouble, kBool, kString, kList };

struct ConfigKey {
  const char* name;
  ConfigType type;
  const char* default_value;
  const char* help;
};

class RunConfig {
 public:
  RunConfig();

  static const std::vector<ConfigKey>& known_keys();

  void set(const std::string& key, const std::string& value);
  /// "key=value"
  void apply(const std::string& assignment);
  void load_file(const std::filesystem::path& path);

  const std::string& get(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Sorted "key=value" lines; reloading them reproduces this config.
  std::string resolved() const;
  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

CorpusSpec corpus_spec(const RunConfig& cfg);
MprSettings mpr_settings(const RunConfig& cfg);
SegmentSampling segment_sampling(const RunConfig& cfg);
KMeansOptions kmeans_options(const RunConfig& cfg);
PoolerConfig pooler_config(const RunConfig& cfg, int input_dim);
TrainConfig train_config(const RunConfig& cfg);
EvalOptions eval_options(const RunConfig& cfg);

}  // namespace awe

#endif  // AWE_CONFIG_H_
