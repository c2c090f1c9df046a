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

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace awe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const ConfigKey* lookup(const std::string& name) {
  for (const ConfigKey& k : RunConfig::known_keys())
    if (name == k.name) return &k;
  return nullptr;
}

bool parse_int(const std::string& v, int64_t& out) {
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  return r.ec == std::errc() && r.ptr == v.data() + v.size();
}

bool parse_uint(const std::string& v, uint64_t& out) {
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  return r.ec == std::errc() && r.ptr == v.data() + v.size();
}

bool parse_double(const std::string& v, double& out) {
  if (v.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(v.c_str(), &end);
  return errno == 0 && end == v.c_str() + v.size() && std::isfinite(out);
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    out = false;
    return true;
  }
  return false;
}

bool valid(ConfigType type, const std::string& v) {
  int64_t i;
  uint64_t u;
  double d;
  bool b;
  switch (type) {
    case ConfigType::kInt: return parse_int(v, i);
    case ConfigType::kUInt: return parse_uint(v, u);
    case ConfigType::kDouble: return parse_double(v, d);
    case ConfigType::kBool: return parse_bool(v, b);
    case ConfigType::kString:
    case ConfigType::kList: return v.find('\n') == std::string::npos;
  }
  return false;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw InputError("config: " + key + "=" + value + " is not a valid " + want);
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::known_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", ConfigType::kUInt, "0", "run seed"},
      {"threads", ConfigType::kInt, "1", "worker threads (0 = hardware concurrency)"},

      {"synth.n_phone_types", ConfigType::kInt, "40", ""},
      {"synth.n_word_types", ConfigType::kInt, "200", ""},
      {"synth.phones_per_word_min", ConfigType::kInt, "3", ""},
      {"synth.phones_per_word_max", ConfigType::kInt, "6", ""},
      {"synth.n_speakers", ConfigType::kInt, "8", "training speakers"},
      {"synth.utterances_per_speaker", ConfigType::kInt, "50", ""},
      {"synth.n_test_speakers", ConfigType::kInt, "4", "held-out speakers"},
      {"synth.test_utterances_per_speaker", ConfigType::kInt, "30", ""},
      {"synth.words_per_utterance_min", ConfigType::kInt, "4", ""},
      {"synth.words_per_utterance_max", ConfigType::kInt, "9", ""},
      {"synth.frames_per_phone_min", ConfigType::kInt, "2", ""},
      {"synth.frames_per_phone_max", ConfigType::kInt, "5", ""},
      {"synth.feature_dim", ConfigType::kInt, "32", ""},
      {"synth.speaker_shift_scale", ConfigType::kDouble, "0.5", ""},
      {"synth.noise_scale", ConfigType::kDouble, "0.9", ""},
      {"synth.zipf_exponent", ConfigType::kDouble, "1.0", ""},
      {"synth.frame_period_ms", ConfigType::kDouble, "20", ""},
      {"synth.write_ground_truth", ConfigType::kBool, "true", ""},

      {"mine.ngram_min", ConfigType::kInt, "2", "shortest n-gram, in phones"},
      {"mine.ngram_max", ConfigType::kInt, "5", "longest n-gram, in phones"},
      {"mine.max_instances", ConfigType::kUInt, "300", "per-key occurrence cap (0 = none)"},
      {"mine.exclude_overlap", ConfigType::kBool, "true", "drop same-utterance overlapping pairs"},
      {"mine.silence_labels", ConfigType::kList, "sil,sp,spn,nsn", "labels that break n-grams"},

      {"knn.k", ConfigType::kInt, "5", "neighbours per segment"},
      {"knn.nlist", ConfigType::kInt, "0", "inverted lists (0 = sqrt of the segment count)"},
      {"knn.nprobe", ConfigType::kInt, "0", "lists probed per query (0 = nlist/4)"},
      {"knn.metric", ConfigType::kString, "dot", "dot or cosine"},
      {"knn.min_ms", ConfigType::kDouble, "80", ""},
      {"knn.max_ms", ConfigType::kDouble, "310", ""},
      {"knn.min_gap_ms", ConfigType::kDouble, "80", ""},

      {"kmeans.k", ConfigType::kInt, "500", "clusters"},
      {"kmeans.sample_fraction", ConfigType::kDouble, "0.1", "fraction of frames used for fitting"},
      {"kmeans.max_iters", ConfigType::kInt, "100", ""},
      {"kmeans.tol", ConfigType::kDouble, "0.0001", "relative centroid shift at convergence"},
      {"kmeans.n_init", ConfigType::kInt, "1", "restarts"},

      {"pooler.hidden_dim", ConfigType::kInt, "256", ""},
      {"pooler.conv_kernel", ConfigType::kInt, "4", ""},
      {"pooler.conv_stride", ConfigType::kInt, "2", ""},
      {"pooler.n_heads", ConfigType::kInt, "4", ""},
      {"pooler.max_positions", ConfigType::kInt, "128", ""},

      {"train.temperature", ConfigType::kDouble, "0.07", ""},
      {"train.batch_size", ConfigType::kUInt, "150", ""},
      {"train.epochs", ConfigType::kInt, "5", ""},
      {"train.max_iterations", ConfigType::kInt, "1000", "optimizer steps per epoch"},
      {"train.learning_rate", ConfigType::kDouble, "0.0001", ""},
      {"train.denominator", ConfigType::kString, "standard", "standard or literal"},
      {"train.clip_grad_norm", ConfigType::kDouble, "0", "0 disables clipping"},
      {"train.max_pairs", ConfigType::kUInt, "0", "train on a seeded subsample (0 = all pairs)"},

      {"eval.min_chars", ConfigType::kInt, "0", "test-word character minimum (0 = no filter)"},
      {"eval.min_chars_alt", ConfigType::kInt, "2", "character minimum for short-word languages"},
      {"eval.short_word_language", ConfigType::kBool, "false", ""},
      {"eval.min_dur_s", ConfigType::kDouble, "0", "test-word duration minimum"},
      {"eval.cross_speaker_only", ConfigType::kBool, "false", ""},

      {"sweep.axis", ConfigType::kString, "pairs", "pairs or hours"},
      {"sweep.points", ConfigType::kList, "100,1000,10000", "ascending"},
      {"sweep.single_speaker", ConfigType::kBool, "false", ""},
      {"sweep.speaker", ConfigType::kString, "", "speaker for single-speaker runs (empty = richest)"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const ConfigKey& k : known_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const ConfigKey* k = lookup(key);
  if (k == nullptr) throw InputError("config: unknown key '" + key + "'");
  if (!valid(k->type, value)) {
    static const char* names[] = {"integer", "unsigned integer", "number", "boolean", "string",
                                  "list"};
    bad_value(key, value, names[static_cast<int>(k->type)]);
  }
  values_[key] = value;
}

void RunConfig::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InputError("config: expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      apply(t);
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InternalError("config: unregistered key '" + key + "'");
  return it->second;
}

int64_t RunConfig::get_int(const std::string& key) const {
  int64_t v;
  if (!parse_int(get(key), v)) bad_value(key, get(key), "integer");
  return v;
}

uint64_t RunConfig::get_uint(const std::string& key) const {
  uint64_t v;
  if (!parse_uint(get(key), v)) bad_value(key, get(key), "unsigned integer");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  double v;
  if (!parse_double(get(key), v)) bad_value(key, get(key), "number");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  bool v;
  if (!parse_bool(get(key), v)) bad_value(key, get(key), "boolean");
  return v;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os << resolved();
  if (!os) throw InternalError("write failed: " + path.string());
}

namespace {

int as_int(const RunConfig& c, const char* key) {
  const int64_t v = c.get_int(key);
  if (v < INT32_MIN || v > INT32_MAX) throw InputError(std::string("config: ") + key + " out of range");
  return static_cast<int>(v);
}

}  // namespace

CorpusSpec corpus_spec(const RunConfig& c) {
  CorpusSpec s;
  s.n_phone_types = as_int(c, "synth.n_phone_types");
  s.n_word_types = as_int(c, "synth.n_word_types");
  s.phones_per_word_min = as_int(c, "synth.phones_per_word_min");
  s.phones_per_word_max = as_int(c, "synth.phones_per_word_max");
  s.n_speakers = as_int(c, "synth.n_speakers");
  s.utterances_per_speaker = as_int(c, "synth.utterances_per_speaker");
  s.n_test_speakers = as_int(c, "synth.n_test_speakers");
  s.test_utterances_per_speaker = as_int(c, "synth.test_utterances_per_speaker");
  s.words_per_utterance_min = as_int(c, "synth.words_per_utterance_min");
  s.words_per_utterance_max = as_int(c, "synth.words_per_utterance_max");
  s.frames_per_phone_min = as_int(c, "synth.frames_per_phone_min");
  s.frames_per_phone_max = as_int(c, "synth.frames_per_phone_max");
  s.feature_dim = as_int(c, "synth.feature_dim");
  s.speaker_shift_scale = c.get_double("synth.speaker_shift_scale");
  s.noise_scale = c.get_double("synth.noise_scale");
  s.zipf_exponent = c.get_double("synth.zipf_exponent");
  s.frame_period_ms = c.get_double("synth.frame_period_ms");
  s.gt_ngram_min = as_int(c, "mine.ngram_min");
  s.gt_ngram_max = as_int(c, "mine.ngram_max");
  s.write_ground_truth = c.get_bool("synth.write_ground_truth");
  s.seed = c.get_uint("seed");
  s.validate();
  return s;
}

MprSettings mpr_settings(const RunConfig& c) {
  MprSettings s;
  s.n_min = as_int(c, "mine.ngram_min");
  s.n_max = as_int(c, "mine.ngram_max");
  s.max_instances_per_type = c.get_uint("mine.max_instances");
  s.exclude_overlap = c.get_bool("mine.exclude_overlap");
  const auto labels = c.get_list("mine.silence_labels");
  s.silence = std::unordered_set<std::string>(labels.begin(), labels.end());
  if (s.n_min < 1 || s.n_max < s.n_min) throw InputError("config: need 1 <= mine.ngram_min <= mine.ngram_max");
  if (s.max_instances_per_type == 1) throw InputError("config: mine.max_instances must be 0 or >= 2");
  return s;
}

SegmentSampling segment_sampling(const RunConfig& c) {
  SegmentSampling s;
  s.min_ms = c.get_double("knn.min_ms");
  s.max_ms = c.get_double("knn.max_ms");
  s.min_gap_ms = c.get_double("knn.min_gap_ms");
  s.seed = c.get_uint("seed");
  return s;
}

KMeansOptions kmeans_options(const RunConfig& c) {
  KMeansOptions o;
  o.max_iters = as_int(c, "kmeans.max_iters");
  o.tol = c.get_double("kmeans.tol");
  o.n_init = as_int(c, "kmeans.n_init");
  o.seed = c.get_uint("seed");
  if (o.max_iters < 1 || o.n_init < 1 || o.tol < 0)
    throw InputError("config: kmeans.max_iters and kmeans.n_init must be >= 1, kmeans.tol >= 0");
  return o;
}

PoolerConfig pooler_config(const RunConfig& c, int input_dim) {
  PoolerConfig p;
  p.input_dim = input_dim;
  p.hidden_dim = as_int(c, "pooler.hidden_dim");
  p.conv_kernel = as_int(c, "pooler.conv_kernel");
  p.conv_stride = as_int(c, "pooler.conv_stride");
  p.n_heads = as_int(c, "pooler.n_heads");
  p.max_positions = as_int(c, "pooler.max_positions");
  p.seed = c.get_uint("seed");
  p.validate();
  return p;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.temperature = c.get_double("train.temperature");
  t.batch_size = c.get_uint("train.batch_size");
  t.epochs = as_int(c, "train.epochs");
  t.max_iterations_per_epoch = as_int(c, "train.max_iterations");
  t.learning_rate = c.get_double("train.learning_rate");
  t.denominator_mode = parse_denominator_mode(c.get("train.denominator"));
  t.clip_grad_norm = c.get_double("train.clip_grad_norm");
  t.seed = c.get_uint("seed");
  t.validate();
  return t;
}

EvalOptions eval_options(const RunConfig& c) {
  EvalOptions o;
  o.cross_speaker_only = c.get_bool("eval.cross_speaker_only");
  return o;
}

}  // namespace awe
