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

#ifndef AWE_PARALLEL_H_
#define AWE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace awe {

/// Process-wide worker count used by parallel_for. Defaults to 1.
void set_num_threads(int n);
int num_threads();

/// Runs body(chunk_begin, chunk_end, chunk_index) over [0, n) split into
/// `num_chunks` fixed contiguous chunks. Chunk boundaries depend only on n and
/// num_chunks, never on the worker count, so callers that reduce per-chunk
/// results in chunk order get identical output for any thread setting.
void parallel_chunks(size_t n, size_t num_chunks,
                     const std::function<void(size_t, size_t, size_t)>& body);

}  // namespace awe

#endif  // AWE_PARALLEL_H_
