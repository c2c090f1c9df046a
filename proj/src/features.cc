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

#include "awe/features.h"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace awe {

namespace {

constexpr char kMagic[4] = {'A', 'W', 'F', '1'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8;

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const unsigned char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

}  // namespace

void write_features(const std::vector<FrameMatrix>& records,
                    const std::filesystem::path& path) {
  int dim = records.empty() ? 1 : static_cast<int>(records.front().frames.cols());
  float period =
      records.empty() ? kDefaultFramePeriodMs : records.front().frame_period_ms;
  if (!(period > 0.0f) || !std::isfinite(period))
    throw InputError("frame_period_ms must be positive");

  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.utt_id).second)
      throw InputError("duplicate utt_id: " + r.utt_id);
    if (r.utt_id.empty() || r.utt_id.size() > UINT16_MAX)
      throw InputError("utt_id length out of range: '" + r.utt_id + "'");
    if (r.frames.cols() != dim)
      throw InputError("inconsistent dimension: " + r.utt_id + " has D=" +
                       std::to_string(r.frames.cols()) + ", expected " +
                       std::to_string(dim));
    if (r.frames.rows() < 1 || r.frames.cols() < 1)
      throw InputError("empty feature matrix: " + r.utt_id);
    if (r.frame_period_ms != period)
      throw InputError("inconsistent frame_period_ms: " + r.utt_id);
    if (!r.frames.allFinite())
      throw InputError("non-finite values in " + r.utt_id);
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  put<uint32_t>(os, kVersion);
  put<uint32_t>(os, static_cast<uint32_t>(dim));
  put<float>(os, period);
  put<uint64_t>(os, records.size());
  for (const auto& r : records) {
    put<uint16_t>(os, static_cast<uint16_t>(r.utt_id.size()));
    os.write(r.utt_id.data(), static_cast<std::streamsize>(r.utt_id.size()));
    put<uint64_t>(os, static_cast<uint64_t>(r.frames.rows()));
    // RowMatrixXf is contiguous row-major storage.
    os.write(reinterpret_cast<const char*>(r.frames.data()),
             static_cast<std::streamsize>(r.frames.size() * sizeof(float)));
  }
  if (!os) throw InternalError("write failed: " + path.string());
}

FeatureStore FeatureStore::open(const std::filesystem::path& path) {
  FeatureStore store;
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw InputError("cannot open feature file: " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw InputError("cannot stat feature file: " + path.string());
  }
  store.size_ = static_cast<size_t>(st.st_size);
  if (store.size_ > 0) {
    void* p = ::mmap(nullptr, store.size_, PROT_READ, MAP_PRIVATE, fd, 0);
    ::close(fd);
    if (p == MAP_FAILED) throw InputError("cannot map feature file: " + path.string());
    store.data_ = static_cast<const unsigned char*>(p);
  } else {
    ::close(fd);
  }

  const unsigned char* base = store.data_;
  const size_t size = store.size_;
  const std::string where = path.string() + ": ";
  if (size < 4 || std::memcmp(base, kMagic, 4) != 0)
    throw InputError(where + "unrecognized format");
  if (size < kHeaderBytes) throw InputError(where + "truncated header");
  const uint32_t version = get<uint32_t>(base + 4);
  if (version != kVersion)
    throw InputError(where + "version mismatch: " + std::to_string(version));
  store.dim_ = static_cast<int>(get<uint32_t>(base + 8));
  store.frame_period_ms_ = get<float>(base + 12);
  const uint64_t count = get<uint64_t>(base + 16);
  if (store.dim_ < 1) throw InputError(where + "invalid dimension 0");
  if (!(store.frame_period_ms_ > 0.0f))
    throw InputError(where + "invalid frame period");

  size_t off = kHeaderBytes;
  const size_t row_bytes = static_cast<size_t>(store.dim_) * sizeof(float);
  for (uint64_t u = 0; u < count; ++u) {
    if (off + 2 > size) throw InputError(where + "truncated utterance header");
    const uint16_t id_len = get<uint16_t>(base + off);
    off += 2;
    if (off + id_len + 8 > size) throw InputError(where + "truncated utterance header");
    std::string id(reinterpret_cast<const char*>(base + off), id_len);
    off += id_len;
    const uint64_t frames = get<uint64_t>(base + off);
    off += 8;
    if (frames < 1) throw InputError(where + "empty utterance " + id);
    if (frames > (size - off) / row_bytes)
      throw InputError(where + "truncated payload in utterance " + id);
    if (store.index_.contains(id)) throw InputError(where + "duplicate utt_id " + id);
    store.index_.emplace(id, Entry{static_cast<int64_t>(frames), off});
    store.ids_.push_back(std::move(id));
    off += frames * row_bytes;
  }
  if (off != size) throw InputError(where + "trailing bytes after last utterance");
  return store;
}

FeatureStore::FeatureStore(FeatureStore&& other) noexcept { *this = std::move(other); }

FeatureStore& FeatureStore::operator=(FeatureStore&& other) noexcept {
  if (this != &other) {
    if (data_ != nullptr) ::munmap(const_cast<unsigned char*>(data_), size_);
    dim_ = other.dim_;
    frame_period_ms_ = other.frame_period_ms_;
    ids_ = std::move(other.ids_);
    index_ = std::move(other.index_);
    data_ = other.data_;
    size_ = other.size_;
    other.data_ = nullptr;
    other.size_ = 0;
  }
  return *this;
}

FeatureStore::~FeatureStore() {
  if (data_ != nullptr) ::munmap(const_cast<unsigned char*>(data_), size_);
}

bool FeatureStore::contains(std::string_view utt_id) const {
  return index_.contains(std::string(utt_id));
}

const FeatureStore::Entry& FeatureStore::entry(std::string_view utt_id) const {
  auto it = index_.find(std::string(utt_id));
  if (it == index_.end())
    throw InputError("unknown utt_id: " + std::string(utt_id));
  return it->second;
}

int64_t FeatureStore::num_frames(std::string_view utt_id) const {
  return entry(utt_id).num_frames;
}

RowMatrixXf FeatureStore::get_frames(const SegmentRef& seg) const {
  const Entry& e = entry(seg.utt_id);
  if (seg.start_frame < 0 || seg.start_frame >= seg.end_frame)
    throw InputError("invalid segment " + seg.utt_id + " [" +
                     std::to_string(seg.start_frame) + ", " +
                     std::to_string(seg.end_frame) + ")");
  if (seg.end_frame > e.num_frames)
    throw InputError("segment exceeds utterance " + seg.utt_id + ": end " +
                     std::to_string(seg.end_frame) + " > T=" +
                     std::to_string(e.num_frames));
  RowMatrixXf out(seg.length(), dim_);
  const size_t row_bytes = static_cast<size_t>(dim_) * sizeof(float);
  std::memcpy(out.data(), data_ + e.data_offset + seg.start_frame * row_bytes,
              static_cast<size_t>(seg.length()) * row_bytes);
  return out;
}

RowMatrixXf FeatureStore::get_utterance(std::string_view utt_id) const {
  return get_frames(SegmentRef{std::string(utt_id), 0, num_frames(utt_id)});
}

SegmentRef seconds_to_segment(double start_s, double end_s, double frame_period_ms) {
  if (start_s < 0.0 || end_s < 0.0) throw InputError("negative segment time");
  if (end_s < start_s) throw InputError("segment end precedes start");
  if (!(frame_period_ms > 0.0)) throw InputError("frame period must be positive");
  // Times arrive as decimal text, so 0.3 s / 20 ms is 15.000000000000002;
  // snap values within 1e-6 frames of an integer before rounding.
  auto snap = [](double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-6 ? r : x;
  };
  const double a = snap(start_s * 1000.0 / frame_period_ms);
  const double b = snap(end_s * 1000.0 / frame_period_ms);
  SegmentRef seg;
  seg.start_frame = static_cast<int64_t>(std::floor(a));
  seg.end_frame = static_cast<int64_t>(std::ceil(b));
  if (seg.end_frame <= seg.start_frame) seg.end_frame = seg.start_frame + 1;
  return seg;
}

}  // namespace awe
