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

#include "awe/corpus_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "awe/common.h"

namespace awe {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t pos = 0;
  for (;;) {
    const size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

double parse_seconds(std::string_view field, size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value))
    throw InputError("line " + std::to_string(line_no) + ": bad time value '" +
                     std::string(field) + "'");
  if (value < 0.0)
    throw InputError("line " + std::to_string(line_no) + ": negative time");
  return value;
}

// Calls fn(fields, line_no) for every non-empty line with exactly 5 fields.
template <typename Fn>
void for_each_record(std::string_view text, Fn&& fn) {
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 5)
      throw InputError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    for (const auto& f : fields)
      if (f.empty())
        throw InputError("line " + std::to_string(line_no) + ": empty field");
    fn(fields, line_no);
  }
}

}  // namespace

std::string format_seconds(double s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", s);
  return buf;
}

std::vector<PhoneAlignment> parse_alignments(std::string_view text) {
  std::vector<PhoneAlignment> out;
  std::unordered_map<std::string, size_t> slot;
  for_each_record(text, [&](const std::vector<std::string_view>& f, size_t line_no) {
    const std::string where = "line " + std::to_string(line_no) + ": ";
    PhoneEntry e{parse_seconds(f[2], line_no), parse_seconds(f[3], line_no),
                 std::string(f[4])};
    if (!(e.end_s > e.start_s)) throw InputError(where + "end time not after start time");
    std::string utt(f[0]);
    auto [it, inserted] = slot.emplace(utt, out.size());
    if (inserted) out.push_back(PhoneAlignment{utt, std::string(f[1]), {}});
    PhoneAlignment& a = out[it->second];
    if (a.speaker_id != f[1])
      throw InputError(where + "speaker changes within utterance " + utt);
    if (!a.entries.empty()) {
      const PhoneEntry& prev = a.entries.back();
      if (e.start_s < prev.start_s) throw InputError(where + "unsorted entries in " + utt);
      if (prev.end_s > e.start_s + kAlignmentOverlapTolerance)
        throw InputError(where + "overlapping phones in " + utt);
    }
    a.entries.push_back(std::move(e));
  });
  return out;
}

std::vector<PhoneAlignment> load_alignments(const std::filesystem::path& path) {
  return parse_alignments(read_file(path));
}

void write_alignments(const std::vector<PhoneAlignment>& alignments,
                      const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  for (const auto& a : alignments)
    for (const auto& e : a.entries)
      os << a.utt_id << '\t' << a.speaker_id << '\t' << format_seconds(e.start_s)
         << '\t' << format_seconds(e.end_s) << '\t' << e.phone << '\n';
}

std::vector<WordSegment> parse_word_segments(std::string_view text) {
  std::vector<WordSegment> out;
  for_each_record(text, [&](const std::vector<std::string_view>& f, size_t line_no) {
    WordSegment w{std::string(f[0]), parse_seconds(f[2], line_no),
                  parse_seconds(f[3], line_no), std::string(f[4]), std::string(f[1])};
    if (!(w.end_s > w.start_s))
      throw InputError("line " + std::to_string(line_no) +
                       ": end time not after start time");
    out.push_back(std::move(w));
  });
  return out;
}

std::vector<WordSegment> load_word_segments(const std::filesystem::path& path) {
  return parse_word_segments(read_file(path));
}

void write_word_segments(const std::vector<WordSegment>& segments,
                         const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  for (const auto& w : segments)
    os << w.utt_id << '\t' << w.speaker_id << '\t' << format_seconds(w.start_s) << '\t'
       << format_seconds(w.end_s) << '\t' << w.word << '\n';
}

size_t utf8_length(std::string_view s) {
  size_t n = 0;
  // Count every byte that is not a continuation byte (10xxxxxx).
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::vector<WordSegment> filter_eval_words(const std::vector<WordSegment>& segments,
                                           size_t min_chars, double min_dur_s) {
  std::vector<WordSegment> out;
  for (const auto& w : segments)
    if (utf8_length(w.word) >= min_chars && w.duration() >= min_dur_s - 1e-9)
      out.push_back(w);
  return out;
}

std::vector<WordSegment> filter_eval_words(const std::vector<WordSegment>& segments,
                                           size_t min_chars, size_t min_chars_alt,
                                           bool short_word_language, double min_dur_s) {
  return filter_eval_words(segments, short_word_language ? min_chars_alt : min_chars,
                           min_dur_s);
}

}  // namespace awe
