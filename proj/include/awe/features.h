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

#ifndef AWE_FEATURES_H_
#define AWE_FEATURES_H_

// AWF feature files: frame-level representations of whole utterances.
//
// Layout (little-endian):
//   "AWF1" | u32 version=1 | u32 D | f32 frame_period_ms | u64 utterance_count
//   then per utterance: u16 id_byte_len | UTF-8 id | u64 T | T*D f32, row-major

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "awe/common.h"

namespace awe {

inline constexpr float kDefaultFramePeriodMs = 20.0f;

struct FrameMatrix {
  std::string utt_id;
  RowMatrixXf frames;  // T x D
  float frame_period_ms = kDefaultFramePeriodMs;
};

/// Half-open frame interval [start_frame, end_frame) within one utterance.
struct SegmentRef {
  std::string utt_id;
  int64_t start_frame = 0;
  int64_t end_frame = 0;

  int64_t length() const { return end_frame - start_frame; }

  friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
  friend auto operator<=>(const SegmentRef&, const SegmentRef&) = default;
};

void write_features(const std::vector<FrameMatrix>& records,
                    const std::filesystem::path& path);

/// Read-only, memory-mapped view of an AWF file. Opening parses only the
/// per-utterance headers; frame data is touched on demand.
class FeatureStore {
 public:
  static FeatureStore open(const std::filesystem::path& path);

  FeatureStore(FeatureStore&&) noexcept;
  FeatureStore& operator=(FeatureStore&&) noexcept;
  ~FeatureStore();

  int dim() const { return dim_; }
  float frame_period_ms() const { return frame_period_ms_; }
  const std::vector<std::string>& utt_ids() const { return ids_; }
  size_t size() const { return ids_.size(); }

  bool contains(std::string_view utt_id) const;
  int64_t num_frames(std::string_view utt_id) const;

  /// Copies rows [start_frame, end_frame) of the referenced utterance.
  RowMatrixXf get_frames(const SegmentRef& seg) const;
  RowMatrixXf get_utterance(std::string_view utt_id) const;

 private:
  struct Entry {
    int64_t num_frames;
    size_t data_offset;
  };

  FeatureStore() = default;
  const Entry& entry(std::string_view utt_id) const;

  int dim_ = 0;
  float frame_period_ms_ = kDefaultFramePeriodMs;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Entry> index_;
  const unsigned char* data_ = nullptr;
  size_t size_ = 0;
};

inline FeatureStore open_features(const std::filesystem::path& path) {
  return FeatureStore::open(path);
}

/// Maps a time span in seconds onto frames: floor on the start, ceil on the
/// end, widened to at least one frame.
SegmentRef seconds_to_segment(double start_s, double end_s,
                              double frame_period_ms);

}  // namespace awe

#endif  // AWE_FEATURES_H_
