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

#include "awe/pairs.h"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace awe {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kMpr:
      return "mpr";
    case Provenance::kKnn:
      return "knn";
    case Provenance::kGroundTruth:
      return "ground_truth";
  }
  return "unknown";
}

Provenance parse_provenance(std::string_view name) {
  if (name == "mpr") return Provenance::kMpr;
  if (name == "knn") return Provenance::kKnn;
  if (name == "ground_truth") return Provenance::kGroundTruth;
  throw InputError("unknown pair provenance '" + std::string(name) + "'");
}

SegmentPair make_pair(SegmentRef x, SegmentRef y, std::string key) {
  if (x == y) throw InputError("pair of identical segments: " + x.utt_id);
  if (y < x) std::swap(x, y);
  return SegmentPair{std::move(x), std::move(y), std::move(key)};
}

PairSet subsample_pairs(const PairSet& set, size_t n, uint64_t seed) {
  if (n >= set.pairs.size()) return set;
  std::vector<size_t> idx(set.pairs.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i)
    std::swap(idx[i], idx[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i),
                                                              static_cast<int64_t>(idx.size()) - 1))]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  PairSet out;
  out.provenance = set.provenance;
  out.pairs.reserve(n);
  for (size_t i : idx) out.pairs.push_back(set.pairs[i]);
  return out;
}

std::vector<SegmentPair> sorted_pairs(const PairSet& set) {
  std::vector<SegmentPair> out = set.pairs;
  std::sort(out.begin(), out.end());
  return out;
}

void write_pairs(const PairSet& set, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  const std::string_view prov = provenance_name(set.provenance);
  for (const auto& p : set.pairs)
    os << p.a.utt_id << '\t' << p.a.start_frame << '\t' << p.a.end_frame << '\t'
       << p.b.utt_id << '\t' << p.b.start_frame << '\t' << p.b.end_frame << '\t' << p.key
       << '\t' << prov << '\n';
  if (!os) throw InternalError("write failed: " + path.string());
}

namespace {

int64_t parse_frame(std::string_view s, size_t line_no) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw InputError("pairs line " + std::to_string(line_no) + ": bad frame index '" +
                     std::string(s) + "'");
  return v;
}

}  // namespace

PairSet read_pairs(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  PairSet set;
  bool first = true;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (size_t tab; (tab = rest.find('\t')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    f.push_back(rest);
    if (f.size() != 8)
      throw InputError("pairs line " + std::to_string(line_no) + ": expected 8 fields");
    SegmentRef a{std::string(f[0]), parse_frame(f[1], line_no), parse_frame(f[2], line_no)};
    SegmentRef b{std::string(f[3]), parse_frame(f[4], line_no), parse_frame(f[5], line_no)};
    if (a.end_frame <= a.start_frame || b.end_frame <= b.start_frame)
      throw InputError("pairs line " + std::to_string(line_no) + ": empty segment");
    const Provenance prov = parse_provenance(f[7]);
    if (first) {
      set.provenance = prov;
      first = false;
    } else if (prov != set.provenance) {
      throw InputError("pairs line " + std::to_string(line_no) + ": mixed provenance");
    }
    set.pairs.push_back(make_pair(std::move(a), std::move(b), std::string(f[6])));
  }
  return set;
}

}  // namespace awe
