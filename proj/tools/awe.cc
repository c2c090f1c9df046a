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

// Command-line front end for the acoustic word embedding toolkit.
//
//   awe [--config f] [--set k=v ...] [--seed n] [--threads n] [--out dir] <command> ...
//
// Exit codes: 0 success, 1 internal error, 2 bad input or configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "awe/config.h"
#include "awe/evaluation.h"
#include "awe/features.h"
#include "awe/kmeans.h"
#include "awe/mining_knn.h"
#include "awe/mining_mpr.h"
#include "awe/parallel.h"
#include "awe/sweep.h"
#include "awe/synthcorpus.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

using namespace awe;

struct Globals {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::string out = ".";
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg.load_file(g.config_path);
  for (const auto& a : g.assignments) cfg.apply(a);
  if (g.seed) cfg.set("seed", std::to_string(*g.seed));
  if (g.threads) cfg.set("threads", std::to_string(*g.threads));
  const int64_t threads = cfg.get_int("threads");
  if (threads < 0) throw InputError("threads must be >= 0");
  set_num_threads(static_cast<size_t>(threads));
  return cfg;
}

fs::path prepare_out(const Globals& g, const RunConfig& cfg, const std::string& command) {
  const fs::path out(g.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());
  cfg.write_resolved(out / (command + ".config"));
  return out;
}

void emit_stats(const fs::path& out, const std::string& command, const Json& stats) {
  const std::string line = stats.dump();
  std::cout << line << "\n";
  std::ofstream os(out / (command + ".stats.jsonl"), std::ios::binary | std::ios::trunc);
  os << line << "\n";
  if (!os) throw InternalError("cannot write stats for " + command);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing required input: ") + what);
  if (!fs::exists(path)) throw InputError(std::string(what) + " not found: " + path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<WordSegment> filtered_words(const RunConfig& cfg, const std::vector<WordSegment>& words) {
  const int64_t min_chars = cfg.get_int("eval.min_chars");
  const double min_dur = cfg.get_double("eval.min_dur_s");
  if (min_chars <= 0 && min_dur <= 0) return words;
  return filter_eval_words(words, static_cast<size_t>(std::max<int64_t>(min_chars, 0)),
                           static_cast<size_t>(cfg.get_int("eval.min_chars_alt")),
                           cfg.get_bool("eval.short_word_language"), min_dur);
}

// ---------------------------------------------------------------- commands

struct IngestArgs {
  std::string features, alignments, words;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  const RunConfig cfg = resolve(g);
  require_file(a.features, "feature file");
  const FeatureStore store = FeatureStore::open(a.features);
  const double period_s = store.frame_period_ms() / 1000.0;
  auto check_span = [&](const std::string& utt, double end_s, const std::string& what) {
    if (!store.contains(utt)) throw InputError(what + " refers to unknown utterance " + utt);
    const double dur = static_cast<double>(store.num_frames(utt)) * period_s;
    if (end_s > dur + period_s + 1e-6)
      throw InputError(what + " for " + utt + " ends after the utterance (" + std::to_string(end_s) +
                       " s > " + std::to_string(dur) + " s)");
  };
  const fs::path out = prepare_out(g, cfg, "ingest");

  std::vector<FrameMatrix> records;
  int64_t frames = 0;
  for (const auto& id : store.utt_ids()) {
    records.push_back({id, store.get_utterance(id), store.frame_period_ms()});
    frames += records.back().frames.rows();
  }
  write_features(records, out / "features.awf");
  Json stats = {{"command", "ingest"}, {"utterances", store.size()}, {"frames", frames},
                {"dim", store.dim()}, {"frame_period_ms", store.frame_period_ms()}};
  if (!a.alignments.empty()) {
    require_file(a.alignments, "alignment file");
    const auto al = load_alignments(a.alignments);
    for (const auto& x : al)
      if (!x.entries.empty()) check_span(x.utt_id, x.entries.back().end_s, "alignment");
    write_alignments(al, out / "alignments.tsv");
    stats["alignments"] = al.size();
  }
  if (!a.words.empty()) {
    require_file(a.words, "word segment file");
    const auto ws = load_word_segments(a.words);
    for (const auto& w : ws) check_span(w.utt_id, w.end_s, "word segment");
    write_word_segments(ws, out / "words.tsv");
    stats["words"] = ws.size();
  }
  emit_stats(out, "ingest", stats);
  return 0;
}

int cmd_synth(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const CorpusSpec spec = corpus_spec(cfg);
  const fs::path out = prepare_out(g, cfg, "synth");
  const CorpusFiles files = write_corpus(spec, out);
  const FeatureStore train = FeatureStore::open(files.train.features);
  const FeatureStore test = FeatureStore::open(files.test.features);
  emit_stats(out, "synth",
             {{"command", "synth"}, {"train_utterances", train.size()},
              {"test_utterances", test.size()}, {"dim", train.dim()}});
  return 0;
}

struct MineArgs {
  std::string mode = "mpr";
  std::string features, alignments;
};

int cmd_mine(const Globals& g, const MineArgs& a) {
  const RunConfig cfg = resolve(g);
  const uint64_t seed = cfg.get_uint("seed");
  Json stats = {{"command", "mine"}, {"mode", a.mode}};
  PairSet pairs;
  fs::path out;
  if (a.mode == "mpr") {
    require_file(a.alignments, "alignment file");
    const MprSettings settings = mpr_settings(cfg);
    const auto al = load_alignments(a.alignments);
    double period = 20.0;
    if (!a.features.empty()) {
      require_file(a.features, "feature file");
      period = FeatureStore::open(a.features).frame_period_ms();
    }
    out = prepare_out(g, cfg, "mine");
    const auto t0 = std::chrono::steady_clock::now();
    MprResult r = mine_mpr(al, settings, period, seed);
    const double wall = seconds_since(t0);
    pairs = std::move(r.pairs);
    stats["pairs"] = pairs.size();
    stats["keys"] = r.n_keys;
    stats["occurrences"] = r.n_occurrences;
    stats["wall_time_s"] = wall;
  } else if (a.mode == "knn") {
    require_file(a.features, "feature file");
    const FeatureStore store = FeatureStore::open(a.features);
    const SegmentSampling sampling = segment_sampling(cfg);
    const int k = static_cast<int>(cfg.get_int("knn.k"));
    const std::string metric = cfg.get("knn.metric");
    if (metric != "dot" && metric != "cosine")
      throw InputError("knn.metric must be dot or cosine, got '" + metric + "'");
    if (k < 0) throw InputError("knn.k must be >= 0");
    out = prepare_out(g, cfg, "mine");
    const auto t0 = std::chrono::steady_clock::now();
    const auto segments = sample_segments(store, sampling);
    if (segments.empty()) throw InputError("knn: no segments could be sampled");
    RowMatrixXf vectors(static_cast<Eigen::Index>(segments.size()), store.dim());
    for (size_t i = 0; i < segments.size(); ++i)
      vectors.row(static_cast<Eigen::Index>(i)) = mean_pool(store.get_frames(segments[i])).transpose();
    if (metric == "cosine") vectors = normalize_rows(vectors);
    int nlist = static_cast<int>(cfg.get_int("knn.nlist"));
    if (nlist <= 0) nlist = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(segments.size())))));
    nlist = std::min<int>(nlist, static_cast<int>(segments.size()));
    int nprobe = static_cast<int>(cfg.get_int("knn.nprobe"));
    if (nprobe <= 0) nprobe = std::max(1, nlist / 4);
    const AnnIndex index = build_ann_index(vectors, nlist, nprobe, seed);
    pairs = knn_pairs(index, segments, k);
    const double wall = seconds_since(t0);
    stats["pairs"] = pairs.size();
    stats["keys"] = pairs.size() > 0 ? 1 : 0;
    stats["segments"] = segments.size();
    stats["nlist"] = nlist;
    stats["nprobe"] = nprobe;
    stats["wall_time_s"] = wall;
  } else {
    throw InputError("unknown mining mode '" + a.mode + "' (expected mpr or knn)");
  }
  write_pairs(pairs, out / "pairs.tsv");
  emit_stats(out, "mine", stats);
  return 0;
}

struct KMeansArgs {
  std::string features;
};

int cmd_kmeans(const Globals& g, const KMeansArgs& a) {
  const RunConfig cfg = resolve(g);
  require_file(a.features, "feature file");
  const FeatureStore store = FeatureStore::open(a.features);
  const int k = static_cast<int>(cfg.get_int("kmeans.k"));
  const KMeansOptions opts = kmeans_options(cfg);
  const fs::path out = prepare_out(g, cfg, "kmeans-targets");
  const RowMatrixXf sample = sample_frames(store, cfg.get_double("kmeans.sample_fraction"), opts.seed,
                                           static_cast<size_t>(std::max(k, 1)));
  const Centroids c = fit_kmeans(sample, k, opts);
  save_centroids(c, out / "centroids.awk");
  export_targets(store, c, out / "targets.tsv");
  emit_stats(out, "kmeans-targets",
             {{"command", "kmeans-targets"}, {"k", k}, {"sampled_frames", sample.rows()},
              {"iterations", c.inertia_history.size()}, {"inertia", c.inertia_history.back()}});
  return 0;
}

struct TrainArgs {
  std::string features, pairs, init;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const RunConfig cfg = resolve(g);
  require_file(a.features, "feature file");
  require_file(a.pairs, "pair file");
  const FeatureStore store = FeatureStore::open(a.features);
  PairSet pairs = read_pairs(a.pairs);
  const TrainConfig tc = train_config(cfg);
  PoolerParamsF params;
  if (!a.init.empty()) {
    require_file(a.init, "pooler checkpoint");
    params = load_pooler(a.init, store.dim());
  } else {
    params = init_pooler(pooler_config(cfg, store.dim()));
  }
  const uint64_t max_pairs = cfg.get_uint("train.max_pairs");
  if (max_pairs > 0) pairs = subsample_pairs(pairs, max_pairs, derive_seed(tc.seed, 0x9a125));
  const fs::path out = prepare_out(g, cfg, "train");
  const TrainResult r = train_pooler(store, pairs, std::move(params), tc);
  for (const auto& w : r.log.warnings) std::cerr << "warning: " << w << "\n";
  save_pooler(r.params, out / "pooler.awp");
  write_train_log(r.log, out / "train_log.csv");
  Json stats = {{"command", "train"}, {"pairs", pairs.size()}, {"dropped_pairs", r.log.dropped_pairs},
                {"steps", r.log.steps.size()}};
  Json losses = Json::array();
  for (int e = 0; e < tc.epochs; ++e) losses.push_back(r.log.mean_epoch_loss(e));
  stats["epoch_loss"] = losses;
  emit_stats(out, "train", stats);
  return 0;
}

struct EvalArgs {
  std::string features, words, pooler, filter;
  bool cross_speaker = false;
};

int cmd_eval(Globals g, const EvalArgs& a) {
  if (!a.filter.empty()) {
    const auto comma = a.filter.find(',');
    if (comma == std::string::npos)
      throw InputError("--filter-words expects <min_chars>,<min_dur_s>, got '" + a.filter + "'");
    g.assignments.push_back("eval.min_chars=" + a.filter.substr(0, comma));
    g.assignments.push_back("eval.min_dur_s=" + a.filter.substr(comma + 1));
  }
  if (a.cross_speaker) g.assignments.push_back("eval.cross_speaker_only=true");
  const RunConfig cfg = resolve(g);
  require_file(a.features, "feature file");
  require_file(a.words, "word segment file");
  const FeatureStore store = FeatureStore::open(a.features);
  const auto words = filtered_words(cfg, load_word_segments(a.words));
  std::optional<PoolerParamsF> pooler;
  if (!a.pooler.empty()) {
    require_file(a.pooler, "pooler checkpoint");
    pooler = load_pooler(a.pooler, store.dim());
  }
  const fs::path out = prepare_out(g, cfg, "eval");
  const CollectedItems items = collect_eval_awes(store, words, pooler ? &*pooler : nullptr);
  const EvalReport report = samediff_map(items.items, eval_options(cfg));
  std::ofstream os(out / "eval.txt", std::ios::binary | std::ios::trunc);
  os << report.text();
  if (items.dropped > 0) os << "  dropped segments: " << items.dropped << "\n";
  os << report.machine_line() << "\n";
  if (!os) throw InternalError("cannot write " + (out / "eval.txt").string());
  std::cerr << report.text();
  if (items.dropped > 0) std::cerr << "  dropped segments: " << items.dropped << "\n";
  std::cout << report.machine_line() << "\n";
  return 0;
}

struct SweepArgs {
  std::string train_features, train_alignments, test_features, test_words;
  std::string axis, points;
  bool single_speaker = false;
};

int cmd_sweep(Globals g, const SweepArgs& a) {
  if (!a.axis.empty()) g.assignments.push_back("sweep.axis=" + a.axis);
  if (!a.points.empty()) g.assignments.push_back("sweep.points=" + a.points);
  if (a.single_speaker) g.assignments.push_back("sweep.single_speaker=true");
  const RunConfig cfg = resolve(g);
  require_file(a.train_features, "training feature file");
  require_file(a.train_alignments, "training alignment file");
  require_file(a.test_features, "test feature file");
  require_file(a.test_words, "test word segment file");
  const FeatureStore train = FeatureStore::open(a.train_features);
  const FeatureStore test = FeatureStore::open(a.test_features);
  SweepData data{&train, load_alignments(a.train_alignments), &test,
                 filtered_words(cfg, load_word_segments(a.test_words))};
  SweepSettings s;
  s.axis = parse_sweep_axis(cfg.get("sweep.axis"));
  for (const auto& p : cfg.get_list("sweep.points")) {
    char* end = nullptr;
    const double v = std::strtod(p.c_str(), &end);
    if (end != p.c_str() + p.size()) throw InputError("sweep.points: bad value '" + p + "'");
    s.points.push_back(v);
  }
  s.single_speaker = cfg.get_bool("sweep.single_speaker");
  s.speaker = cfg.get("sweep.speaker");
  s.mining = mpr_settings(cfg);
  s.pooler = pooler_config(cfg, train.dim());
  s.train = train_config(cfg);
  s.eval = eval_options(cfg);
  s.seed = cfg.get_uint("seed");
  const fs::path out = prepare_out(g, cfg, "sweep");
  const auto rows = run_sweep(data, s);
  write_sweep_csv(rows, out / "sweep.csv");
  for (const auto& r : rows) {
    Json line = {{"command", "sweep"}, {"axis", cfg.get("sweep.axis")}, {"point", r.point},
                 {"map", r.map}, {"n_pairs", r.n_pairs}, {"wall_time_s", r.wall_time_s}};
    if (!r.speaker.empty()) line["speaker"] = r.speaker;
    std::cout << line.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic word embedding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key=value configuration file");
  app.add_option("--set", g.assignments, "configuration override key=value (repeatable)");
  app.add_option("--seed", g.seed, "run seed");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)");
  app.add_option("--out", g.out, "output directory");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate and normalize AWF features with annotations");
  c_ingest->add_option("--features", ingest.features, "AWF feature file")->required();
  c_ingest->add_option("--alignments", ingest.alignments, "phone alignment TSV");
  c_ingest->add_option("--words", ingest.words, "word segment TSV");

  app.add_subcommand("synth", "generate a synthetic corpus");

  MineArgs mine;
  auto* c_mine = app.add_subcommand("mine", "mine positive pairs");
  c_mine->add_option("--mode", mine.mode, "mpr or knn")->check(CLI::IsMember({"mpr", "knn"}));
  c_mine->add_option("--features", mine.features, "AWF feature file");
  c_mine->add_option("--alignments", mine.alignments, "phone alignment TSV (mpr)");

  KMeansArgs km;
  auto* c_km = app.add_subcommand("kmeans-targets", "fit k-means and export frame cluster targets");
  c_km->add_option("--features", km.features, "AWF feature file")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train the learned pooler on mined pairs");
  c_train->add_option("--features", train.features, "AWF feature file")->required();
  c_train->add_option("--pairs", train.pairs, "pair TSV")->required();
  c_train->add_option("--init", train.init, "initial pooler checkpoint");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "same-different word discrimination");
  c_eval->add_option("--features", ev.features, "AWF feature file")->required();
  c_eval->add_option("--words", ev.words, "word segment TSV")->required();
  c_eval->add_option("--pooler", ev.pooler, "pooler checkpoint (default: mean pooling)");
  c_eval->add_option("--filter-words", ev.filter, "<min_chars>,<min_dur_s>");
  c_eval->add_flag("--cross-speaker", ev.cross_speaker, "score different-speaker pairs only");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "data-efficiency sweep");
  c_sweep->add_option("--train-features", sw.train_features)->required();
  c_sweep->add_option("--train-alignments", sw.train_alignments)->required();
  c_sweep->add_option("--test-features", sw.test_features)->required();
  c_sweep->add_option("--test-words", sw.test_words)->required();
  c_sweep->add_option("--axis", sw.axis, "pairs or hours");
  c_sweep->add_option("--points", sw.points, "comma-separated ascending points");
  c_sweep->add_flag("--single-speaker", sw.single_speaker);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "ingest") return cmd_ingest(g, ingest);
    if (name == "synth") return cmd_synth(g);
    if (name == "mine") return cmd_mine(g, mine);
    if (name == "kmeans-targets") return cmd_kmeans(g, km);
    if (name == "train") return cmd_train(g, train);
    if (name == "eval") return cmd_eval(g, ev);
    if (name == "sweep") return cmd_sweep(g, sw);
    throw InternalError("unhandled command " + name);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
