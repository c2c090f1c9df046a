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

#ifndef AWE_CORPUS_IO_H_
#define AWE_CORPUS_IO_H_

// Text formats for phone alignments and word segments. Both are UTF-8, LF
// terminated, tab separated:
//   alignment:    utt_id  speaker_id  start_s  end_s  phone
//   word segment: utt_id  speaker_id  start_s  end_s  word

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace awe {

struct PhoneEntry {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string phone;
};

struct PhoneAlignment {
  std::string utt_id;
  std::string speaker_id;
  std::vector<PhoneEntry> entries;
};

struct WordSegment {
  std::string utt_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string word;
  std::string speaker_id;

  double duration() const { return end_s - start_s; }
};

inline constexpr double kAlignmentOverlapTolerance = 1e-6;

/// One alignment per utterance, in order of first appearance in the file.
/// Lines of an utterance must be sorted by start time and must not overlap.
std::vector<PhoneAlignment> load_alignments(const std::filesystem::path& path);
std::vector<PhoneAlignment> parse_alignments(std::string_view text);
void write_alignments(const std::vector<PhoneAlignment>& alignments,
                      const std::filesystem::path& path);

std::vector<WordSegment> load_word_segments(const std::filesystem::path& path);
std::vector<WordSegment> parse_word_segments(std::string_view text);
void write_word_segments(const std::vector<WordSegment>& segments,
                         const std::filesystem::path& path);

/// Number of Unicode scalar values in a UTF-8 string.
size_t utf8_length(std::string_view s);

/// Keeps words with at least `min_chars` characters and `min_dur_s` seconds.
std::vector<WordSegment> filter_eval_words(const std::vector<WordSegment>& segments,
                                           size_t min_chars, double min_dur_s);

/// Variant selecting the short-word threshold (e.g. 2 for Mandarin) when
/// `short_word_language` is set.
std::vector<WordSegment> filter_eval_words(const std::vector<WordSegment>& segments,
                                           size_t min_chars, size_t min_chars_alt,
                                           bool short_word_language, double min_dur_s);

/// Formats seconds with a fixed number of fraction digits (at least three).
std::string format_seconds(double s);

}  // namespace awe

#endif  // AWE_CORPUS_IO_H_
