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

#ifndef AWE_POOLING_H_
#define AWE_POOLING_H_

// Pooling functions mapping a T x D frame sequence to one embedding.
//
// The learned pooler is a fixed architecture:
//   LayerNorm(D) -> Conv1d(D->H, kernel, stride, no padding)
//   -> + learned absolute position embeddings
//   -> pre-norm transformer encoder layer
//        r1 = p  + Attn(LN(p))        (n_heads, scaled dot product)
//        r2 = r1 + FFN(LN(r1))        (H -> 4H, GELU, 4H -> H)
//   -> max over time, per dimension
// Forward records a tape; backward is written out by hand for this network.
//
// Parameters are stored and serialized in this order:
//   ln_in.gain[D] ln_in.bias[D] conv.weight[H][D][kernel] conv.bias[H]
//   pos_embedding[max_positions][H]
//   ln_attn.gain[H] ln_attn.bias[H]
//   attn.wq[H][H] attn.bq[H] attn.wk[H][H] attn.bk[H]
//   attn.wv[H][H] attn.bv[H] attn.wo[H][H] attn.bo[H]
//   ln_ffn.gain[H] ln_ffn.bias[H] ffn.w1[H][4H] ffn.b1[4H] ffn.w2[4H][H] ffn.b2[H]
// Projection matrices are laid out input-major: y = x * W + b.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awe/common.h"

namespace awe {

AweVector mean_pool(const RowMatrixXf& frames);

struct PoolerConfig {
  int input_dim = 768;
  int hidden_dim = 256;
  int conv_kernel = 4;
  int conv_stride = 2;
  int n_heads = 4;
  int max_positions = 128;
  uint64_t seed = 0;

  int ffn_dim() const { return 4 * hidden_dim; }
  int head_dim() const { return hidden_dim / n_heads; }
  /// Post-convolution length for a T-frame input; 0 when T < kernel.
  int64_t output_length(int64_t num_frames) const;
  void validate() const;

  friend bool operator==(const PoolerConfig&, const PoolerConfig&) = default;
};

template <typename Scalar>
struct TensorView {
  const char* name;
  std::span<Scalar> data;
};

template <typename Scalar>
struct PoolerParams {
  using Mat = RowMatrix<Scalar>;
  using Vec = Vector<Scalar>;

  PoolerConfig config;
  Vec ln_in_gain, ln_in_bias;
  Mat conv_weight;  // H x (D * kernel), column d * kernel + j
  Vec conv_bias;
  Mat pos_embedding;  // max_positions x H
  Vec ln_attn_gain, ln_attn_bias;
  Mat wq, wk, wv, wo;
  Vec bq, bk, bv, bo;
  Vec ln_ffn_gain, ln_ffn_bias;
  Mat w1;  // H x 4H
  Vec b1;
  Mat w2;  // 4H x H
  Vec b2;

  /// Same shapes as `config` prescribes, every value zero.
  static PoolerParams zeros(const PoolerConfig& config);

  /// All tensors in serialization order.
  std::vector<TensorView<Scalar>> tensors();
  std::vector<TensorView<const Scalar>> tensors() const;
  size_t num_values() const;

  template <typename To>
  PoolerParams<To> cast() const;
};

using PoolerParamsF = PoolerParams<float>;
using PoolerParamsD = PoolerParams<double>;

/// Gradients share the parameter layout.
template <typename Scalar>
using ParamGrads = PoolerParams<Scalar>;

/// Glorot-uniform weights, zero biases, unit LayerNorm gains, N(0, 0.02^2)
/// position embeddings. Deterministic in config.seed.
PoolerParamsF init_pooler(const PoolerConfig& config);

template <typename Scalar>
struct ForwardTape {
  PoolerConfig config;
  int64_t num_frames = 0;
  int64_t length = 0;  // post-convolution
  RowMatrix<Scalar> xhat_in;
  Vector<Scalar> rstd_in;
  RowMatrix<Scalar> cols;  // im2col of the normalized input, L x (D * kernel)
  RowMatrix<Scalar> p;
  RowMatrix<Scalar> xhat_attn;
  Vector<Scalar> rstd_attn;
  RowMatrix<Scalar> a_in;
  RowMatrix<Scalar> q, k, v;
  std::vector<RowMatrix<Scalar>> probs;  // per head, L x L
  RowMatrix<Scalar> ctx;
  RowMatrix<Scalar> r1;
  RowMatrix<Scalar> xhat_ffn;
  Vector<Scalar> rstd_ffn;
  RowMatrix<Scalar> f_in;
  RowMatrix<Scalar> hidden_pre;  // L x 4H, before GELU
  RowMatrix<Scalar> hidden;      // after GELU
  RowMatrix<Scalar> r2;          // transformer output, L x H
  std::vector<int64_t> argmax;   // per output dimension
};

template <typename Scalar>
struct PoolerOutput {
  Vector<Scalar> awe;
  ForwardTape<Scalar> tape;
};

template <typename Scalar>
PoolerOutput<Scalar> pooler_forward(const PoolerParams<Scalar>& params,
                                    const RowMatrix<Scalar>& frames);

/// Embedding only, for evaluation.
AweVector pooler_embed(const PoolerParamsF& params, const RowMatrixXf& frames);

/// Adds d(awe . grad_awe)/d(param) into `grads`. Max pooling routes each
/// dimension's gradient to its first argmax frame.
template <typename Scalar>
void pooler_backward(const PoolerParams<Scalar>& params, const ForwardTape<Scalar>& tape,
                     const Vector<Scalar>& grad_awe, ParamGrads<Scalar>& grads);

template <typename Scalar>
ParamGrads<Scalar> pooler_backward(const PoolerParams<Scalar>& params,
                                   const ForwardTape<Scalar>& tape,
                                   const Vector<Scalar>& grad_awe);

void save_pooler(const PoolerParamsF& params, const std::filesystem::path& path);

/// Loads a checkpoint; when `expected_input_dim` is given the stored input
/// dimension must match it.
PoolerParamsF load_pooler(const std::filesystem::path& path,
                          std::optional<int> expected_input_dim = std::nullopt);

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace awe

#endif  // AWE_POOLING_H_
