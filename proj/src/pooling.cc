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

#include "awe/pooling.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace awe {

AweVector mean_pool(const RowMatrixXf& frames) {
  if (frames.rows() < 1) throw InputError("mean_pool: empty segment");
  // Accumulate in double so long segments do not drift.
  Eigen::VectorXd sum = frames.cast<double>().colwise().sum().transpose();
  return (sum / static_cast<double>(frames.rows())).cast<float>();
}

int64_t PoolerConfig::output_length(int64_t num_frames) const {
  if (num_frames < conv_kernel) return 0;
  return (num_frames - conv_kernel) / conv_stride + 1;
}

void PoolerConfig::validate() const {
  if (input_dim < 1) throw InputError("pooler: input_dim must be >= 1");
  if (hidden_dim < 1) throw InputError("pooler: hidden_dim must be >= 1");
  if (n_heads < 1 || hidden_dim % n_heads != 0)
    throw InputError("pooler: head divisibility: hidden_dim " +
                     std::to_string(hidden_dim) + " not divisible by n_heads " +
                     std::to_string(n_heads));
  if (conv_kernel < 1) throw InputError("pooler: conv_kernel must be >= 1");
  if (conv_stride < 1) throw InputError("pooler: conv_stride must be >= 1");
  if (max_positions < 1) throw InputError("pooler: max_positions must be >= 1");
}

// ---------------------------------------------------------------------------
// Parameter containers

template <typename Scalar>
PoolerParams<Scalar> PoolerParams<Scalar>::zeros(const PoolerConfig& c) {
  c.validate();
  const int D = c.input_dim, H = c.hidden_dim, F = c.ffn_dim();
  PoolerParams p;
  p.config = c;
  p.ln_in_gain = Vec::Zero(D);
  p.ln_in_bias = Vec::Zero(D);
  p.conv_weight = Mat::Zero(H, D * c.conv_kernel);
  p.conv_bias = Vec::Zero(H);
  p.pos_embedding = Mat::Zero(c.max_positions, H);
  p.ln_attn_gain = Vec::Zero(H);
  p.ln_attn_bias = Vec::Zero(H);
  p.wq = p.wk = p.wv = p.wo = Mat::Zero(H, H);
  p.bq = p.bk = p.bv = p.bo = Vec::Zero(H);
  p.ln_ffn_gain = Vec::Zero(H);
  p.ln_ffn_bias = Vec::Zero(H);
  p.w1 = Mat::Zero(H, F);
  p.b1 = Vec::Zero(F);
  p.w2 = Mat::Zero(F, H);
  p.b2 = Vec::Zero(H);
  return p;
}

namespace {

template <typename Scalar, typename P>
std::vector<TensorView<Scalar>> collect_tensors(P& p) {
  std::vector<TensorView<Scalar>> out;
  auto add = [&out](const char* name, auto& t) {
    out.push_back({name, std::span<Scalar>(t.data(), static_cast<size_t>(t.size()))});
  };
  add("ln_in.gain", p.ln_in_gain);
  add("ln_in.bias", p.ln_in_bias);
  add("conv.weight", p.conv_weight);
  add("conv.bias", p.conv_bias);
  add("pos_embedding", p.pos_embedding);
  add("ln_attn.gain", p.ln_attn_gain);
  add("ln_attn.bias", p.ln_attn_bias);
  add("attn.wq", p.wq);
  add("attn.bq", p.bq);
  add("attn.wk", p.wk);
  add("attn.bk", p.bk);
  add("attn.wv", p.wv);
  add("attn.bv", p.bv);
  add("attn.wo", p.wo);
  add("attn.bo", p.bo);
  add("ln_ffn.gain", p.ln_ffn_gain);
  add("ln_ffn.bias", p.ln_ffn_bias);
  add("ffn.w1", p.w1);
  add("ffn.b1", p.b1);
  add("ffn.w2", p.w2);
  add("ffn.b2", p.b2);
  return out;
}

}  // namespace

template <typename Scalar>
std::vector<TensorView<Scalar>> PoolerParams<Scalar>::tensors() {
  return collect_tensors<Scalar>(*this);
}

template <typename Scalar>
std::vector<TensorView<const Scalar>> PoolerParams<Scalar>::tensors() const {
  return collect_tensors<const Scalar>(*this);
}

template <typename Scalar>
size_t PoolerParams<Scalar>::num_values() const {
  size_t n = 0;
  for (const auto& t : tensors()) n += t.data.size();
  return n;
}

template <typename Scalar>
template <typename To>
PoolerParams<To> PoolerParams<Scalar>::cast() const {
  PoolerParams<To> out = PoolerParams<To>::zeros(config);
  auto src = tensors();
  auto dst = out.tensors();
  for (size_t i = 0; i < src.size(); ++i)
    for (size_t j = 0; j < src[i].data.size(); ++j)
      dst[i].data[j] = static_cast<To>(src[i].data[j]);
  return out;
}

template struct PoolerParams<float>;
template struct PoolerParams<double>;
template PoolerParams<double> PoolerParams<float>::cast<double>() const;
template PoolerParams<float> PoolerParams<double>::cast<float>() const;
template PoolerParams<float> PoolerParams<float>::cast<float>() const;
template PoolerParams<double> PoolerParams<double>::cast<double>() const;

PoolerParamsF init_pooler(const PoolerConfig& config) {
  PoolerParamsF p = PoolerParamsF::zeros(config);
  Rng rng(config.seed);
  auto glorot = [&rng](auto& m, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
  };
  const double D = config.input_dim, H = config.hidden_dim, F = config.ffn_dim(),
               K = config.conv_kernel;
  p.ln_in_gain.setOnes();
  glorot(p.conv_weight, D * K, H * K);
  for (Eigen::Index i = 0; i < p.pos_embedding.size(); ++i)
    p.pos_embedding.data()[i] = static_cast<float>(0.02 * rng.normal());
  p.ln_attn_gain.setOnes();
  glorot(p.wq, H, H);
  glorot(p.wk, H, H);
  glorot(p.wv, H, H);
  glorot(p.wo, H, H);
  p.ln_ffn_gain.setOnes();
  glorot(p.w1, H, F);
  glorot(p.w2, F, H);
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

template <typename Scalar>
void layer_norm_forward(const RowMatrix<Scalar>& x, const Vector<Scalar>& gain,
                        const Vector<Scalar>& bias, RowMatrix<Scalar>& xhat,
                        Vector<Scalar>& rstd, RowMatrix<Scalar>& y) {
  const Eigen::Index n = x.cols();
  xhat.resize(x.rows(), n);
  rstd.resize(x.rows());
  y.resize(x.rows(), n);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar mu = x.row(r).mean();
    auto centered = (x.row(r).array() - mu).eval();
    const Scalar var = centered.square().mean();
    const Scalar rs = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
    rstd(r) = rs;
    xhat.row(r) = centered * rs;
    y.row(r) = xhat.row(r).array() * gain.transpose().array() + bias.transpose().array();
  }
}

// Accumulates gain/bias gradients; returns the input gradient when wanted.
template <typename Scalar>
void layer_norm_backward(const RowMatrix<Scalar>& dy, const RowMatrix<Scalar>& xhat,
                         const Vector<Scalar>& rstd, const Vector<Scalar>& gain,
                         Vector<Scalar>& dgain, Vector<Scalar>& dbias,
                         RowMatrix<Scalar>* dx) {
  dgain += dy.cwiseProduct(xhat).colwise().sum().transpose();
  dbias += dy.colwise().sum().transpose();
  if (dx == nullptr) return;
  RowMatrix<Scalar> dxhat = dy.array().rowwise() * gain.transpose().array();
  dx->resize(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const Scalar m1 = dxhat.row(r).mean();
    const Scalar m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
    dx->row(r) = rstd(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
  }
}

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
  const Scalar pdf = std::exp(Scalar(-0.5) * x * x) * Scalar(0.5 * M_2_SQRTPI * M_SQRT1_2);
  return cdf + x * pdf;
}

}  // namespace

template <typename Scalar>
PoolerOutput<Scalar> pooler_forward(const PoolerParams<Scalar>& w,
                                    const RowMatrix<Scalar>& frames) {
  using Mat = RowMatrix<Scalar>;
  const PoolerConfig& c = w.config;
  const int D = c.input_dim, H = c.hidden_dim, K = c.conv_kernel, S = c.conv_stride;
  if (frames.cols() != D)
    throw InputError("pooler: input has D=" + std::to_string(frames.cols()) +
                     ", expected " + std::to_string(D));
  const int64_t T = frames.rows();
  if (T < K)
    throw InputError("pooler: segment of " + std::to_string(T) +
                     " frames is shorter than the kernel (" + std::to_string(K) + ")");
  const int64_t L = c.output_length(T);
  if (L > c.max_positions)
    throw InputError("pooler: overlong segment, " + std::to_string(L) +
                     " positions exceed max_positions " + std::to_string(c.max_positions));

  PoolerOutput<Scalar> out;
  ForwardTape<Scalar>& tp = out.tape;
  tp.config = c;
  tp.num_frames = T;
  tp.length = L;

  Mat y0;
  layer_norm_forward(frames, w.ln_in_gain, w.ln_in_bias, tp.xhat_in, tp.rstd_in, y0);

  tp.cols.resize(L, static_cast<Eigen::Index>(D) * K);
  for (int64_t l = 0; l < L; ++l)
    for (int d = 0; d < D; ++d)
      for (int j = 0; j < K; ++j) tp.cols(l, d * K + j) = y0(l * S + j, d);

  tp.p.noalias() = tp.cols * w.conv_weight.transpose();
  tp.p.rowwise() += w.conv_bias.transpose();
  tp.p += w.pos_embedding.topRows(L);

  layer_norm_forward(tp.p, w.ln_attn_gain, w.ln_attn_bias, tp.xhat_attn, tp.rstd_attn,
                     tp.a_in);
  tp.q.noalias() = tp.a_in * w.wq;
  tp.q.rowwise() += w.bq.transpose();
  tp.k.noalias() = tp.a_in * w.wk;
  tp.k.rowwise() += w.bk.transpose();
  tp.v.noalias() = tp.a_in * w.wv;
  tp.v.rowwise() += w.bv.transpose();

  const int dh = c.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));
  tp.ctx.resize(L, H);
  tp.probs.resize(c.n_heads);
  for (int h = 0; h < c.n_heads; ++h) {
    Mat scores = (tp.q.middleCols(h * dh, dh) * tp.k.middleCols(h * dh, dh).transpose()) * scale;
    for (Eigen::Index r = 0; r < L; ++r) {
      const Scalar m = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - m).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    tp.ctx.middleCols(h * dh, dh).noalias() = scores * tp.v.middleCols(h * dh, dh);
    tp.probs[h] = std::move(scores);
  }

  tp.r1 = tp.p;
  tp.r1.noalias() += tp.ctx * w.wo;
  tp.r1.rowwise() += w.bo.transpose();

  layer_norm_forward(tp.r1, w.ln_ffn_gain, w.ln_ffn_bias, tp.xhat_ffn, tp.rstd_ffn, tp.f_in);
  tp.hidden_pre.noalias() = tp.f_in * w.w1;
  tp.hidden_pre.rowwise() += w.b1.transpose();
  tp.hidden = tp.hidden_pre.unaryExpr([](Scalar x) { return gelu(x); });
  tp.r2 = tp.r1;
  tp.r2.noalias() += tp.hidden * w.w2;
  tp.r2.rowwise() += w.b2.transpose();

  out.awe.resize(H);
  tp.argmax.assign(H, 0);
  for (int h = 0; h < H; ++h) {
    Scalar best = tp.r2(0, h);
    int64_t arg = 0;
    for (int64_t l = 1; l < L; ++l)
      if (tp.r2(l, h) > best) {
        best = tp.r2(l, h);
        arg = l;
      }
    out.awe(h) = best;
    tp.argmax[h] = arg;
  }
  return out;
}

AweVector pooler_embed(const PoolerParamsF& params, const RowMatrixXf& frames) {
  return pooler_forward(params, frames).awe;
}

template <typename Scalar>
void pooler_backward(const PoolerParams<Scalar>& w, const ForwardTape<Scalar>& tp,
                     const Vector<Scalar>& grad_awe, ParamGrads<Scalar>& g) {
  using Mat = RowMatrix<Scalar>;
  const PoolerConfig& c = w.config;
  if (!(tp.config == c) || tp.length < 1 || tp.r2.rows() != tp.length ||
      static_cast<int>(tp.argmax.size()) != c.hidden_dim)
    throw InputError("pooler_backward: tape does not match parameters");
  if (grad_awe.size() != c.hidden_dim)
    throw InputError("pooler_backward: gradient has wrong dimension");
  if (!(g.config == c)) throw InputError("pooler_backward: gradient buffer mismatch");

  const int D = c.input_dim, H = c.hidden_dim, K = c.conv_kernel, S = c.conv_stride;
  const int64_t L = tp.length;

  Mat dr2 = Mat::Zero(L, H);
  for (int h = 0; h < H; ++h) dr2(tp.argmax[h], h) = grad_awe(h);

  // Feed-forward block.
  g.b2 += dr2.colwise().sum().transpose();
  g.w2.noalias() += tp.hidden.transpose() * dr2;
  Mat dhidden = dr2 * w.w2.transpose();
  for (Eigen::Index i = 0; i < dhidden.size(); ++i)
    dhidden.data()[i] *= gelu_grad(tp.hidden_pre.data()[i]);
  g.b1 += dhidden.colwise().sum().transpose();
  g.w1.noalias() += tp.f_in.transpose() * dhidden;
  Mat df_in = dhidden * w.w1.transpose();
  Mat dr1;
  layer_norm_backward(df_in, tp.xhat_ffn, tp.rstd_ffn, w.ln_ffn_gain, g.ln_ffn_gain,
                      g.ln_ffn_bias, &dr1);
  dr1 += dr2;

  // Attention block.
  g.bo += dr1.colwise().sum().transpose();
  g.wo.noalias() += tp.ctx.transpose() * dr1;
  Mat dctx = dr1 * w.wo.transpose();
  const int dh = c.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));
  Mat dq(L, H), dk(L, H), dv(L, H);
  for (int h = 0; h < c.n_heads; ++h) {
    const Mat& prob = tp.probs[h];
    auto dctx_h = dctx.middleCols(h * dh, dh);
    Mat dprob = dctx_h * tp.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = prob.transpose() * dctx_h;
    Mat dscores(L, L);
    for (Eigen::Index r = 0; r < L; ++r) {
      const Scalar dot = dprob.row(r).dot(prob.row(r));
      dscores.row(r) = prob.row(r).array() * (dprob.row(r).array() - dot);
    }
    dq.middleCols(h * dh, dh).noalias() = (dscores * tp.k.middleCols(h * dh, dh)) * scale;
    dk.middleCols(h * dh, dh).noalias() =
        (dscores.transpose() * tp.q.middleCols(h * dh, dh)) * scale;
  }
  g.bq += dq.colwise().sum().transpose();
  g.bk += dk.colwise().sum().transpose();
  g.bv += dv.colwise().sum().transpose();
  g.wq.noalias() += tp.a_in.transpose() * dq;
  g.wk.noalias() += tp.a_in.transpose() * dk;
  g.wv.noalias() += tp.a_in.transpose() * dv;
  Mat da_in = dq * w.wq.transpose();
  da_in.noalias() += dk * w.wk.transpose();
  da_in.noalias() += dv * w.wv.transpose();
  Mat dp;
  layer_norm_backward(da_in, tp.xhat_attn, tp.rstd_attn, w.ln_attn_gain, g.ln_attn_gain,
                      g.ln_attn_bias, &dp);
  dp += dr1;

  // Position embeddings and convolution.
  g.pos_embedding.topRows(L) += dp;
  g.conv_bias += dp.colwise().sum().transpose();
  g.conv_weight.noalias() += dp.transpose() * tp.cols;
  Mat dcols = dp * w.conv_weight;
  Mat dy0 = Mat::Zero(tp.num_frames, D);
  for (int64_t l = 0; l < L; ++l)
    for (int d = 0; d < D; ++d)
      for (int j = 0; j < K; ++j) dy0(l * S + j, d) += dcols(l, d * K + j);
  layer_norm_backward<Scalar>(dy0, tp.xhat_in, tp.rstd_in, w.ln_in_gain, g.ln_in_gain,
                              g.ln_in_bias, nullptr);
}

template <typename Scalar>
ParamGrads<Scalar> pooler_backward(const PoolerParams<Scalar>& params,
                                   const ForwardTape<Scalar>& tape,
                                   const Vector<Scalar>& grad_awe) {
  ParamGrads<Scalar> g = ParamGrads<Scalar>::zeros(params.config);
  pooler_backward(params, tape, grad_awe, g);
  return g;
}

template PoolerOutput<float> pooler_forward(const PoolerParams<float>&, const RowMatrix<float>&);
template PoolerOutput<double> pooler_forward(const PoolerParams<double>&,
                                             const RowMatrix<double>&);
template void pooler_backward(const PoolerParams<float>&, const ForwardTape<float>&,
                              const Vector<float>&, ParamGrads<float>&);
template void pooler_backward(const PoolerParams<double>&, const ForwardTape<double>&,
                              const Vector<double>&, ParamGrads<double>&);
template ParamGrads<float> pooler_backward(const PoolerParams<float>&, const ForwardTape<float>&,
                                           const Vector<float>&);
template ParamGrads<double> pooler_backward(const PoolerParams<double>&,
                                            const ForwardTape<double>&, const Vector<double>&);

// ---------------------------------------------------------------------------
// Checkpoints: "AWP1" | u32 version | i32 D H kernel stride heads max_positions
//              | u64 seed | u64 value_count | f32 values in tensor order

namespace {

constexpr char kPoolerMagic[4] = {'A', 'W', 'P', '1'};
constexpr uint32_t kPoolerVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& is, const std::string& where) {
  T value;
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw InputError(where + ": truncated checkpoint header");
  return value;
}

}  // namespace

void save_pooler(const PoolerParamsF& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  const PoolerConfig& c = params.config;
  os.write(kPoolerMagic, 4);
  put<uint32_t>(os, kPoolerVersion);
  for (int32_t v : {c.input_dim, c.hidden_dim, c.conv_kernel, c.conv_stride, c.n_heads,
                    c.max_positions})
    put<int32_t>(os, v);
  put<uint64_t>(os, c.seed);
  put<uint64_t>(os, params.num_values());
  for (const auto& t : params.tensors())
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size_bytes()));
  if (!os) throw InternalError("write failed: " + path.string());
}

PoolerParamsF load_pooler(const std::filesystem::path& path,
                          std::optional<int> expected_input_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint: " + path.string());
  const std::string where = path.string();
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kPoolerMagic, 4) != 0)
    throw InputError(where + ": not a pooler checkpoint (bad magic)");
  if (take<uint32_t>(is, where) != kPoolerVersion)
    throw InputError(where + ": unsupported checkpoint version");
  PoolerConfig c;
  c.input_dim = take<int32_t>(is, where);
  c.hidden_dim = take<int32_t>(is, where);
  c.conv_kernel = take<int32_t>(is, where);
  c.conv_stride = take<int32_t>(is, where);
  c.n_heads = take<int32_t>(is, where);
  c.max_positions = take<int32_t>(is, where);
  c.seed = take<uint64_t>(is, where);
  const uint64_t count = take<uint64_t>(is, where);
  try {
    c.validate();
  } catch (const InputError& e) {
    throw InputError(where + ": corrupted checkpoint header (" + e.what() + ")");
  }
  if (expected_input_dim && *expected_input_dim != c.input_dim)
    throw InputError(where + ": dimension mismatch, checkpoint expects D=" +
                     std::to_string(c.input_dim) + " but features have D=" +
                     std::to_string(*expected_input_dim));
  // Guard the allocation below against garbage shapes.
  const uint64_t expected = 2ull * c.input_dim +
                            1ull * c.hidden_dim * c.input_dim * c.conv_kernel + c.hidden_dim +
                            1ull * c.max_positions * c.hidden_dim + 2ull * c.hidden_dim +
                            4ull * (1ull * c.hidden_dim * c.hidden_dim + c.hidden_dim) +
                            2ull * c.hidden_dim + 2ull * c.hidden_dim * c.ffn_dim() +
                            c.ffn_dim() + c.hidden_dim;
  if (count != expected)
    throw InputError(where + ": corrupted checkpoint header (value count mismatch)");
  PoolerParamsF p = PoolerParamsF::zeros(c);
  for (auto& t : p.tensors())
    if (!is.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size_bytes())))
      throw InputError(where + ": truncated checkpoint payload in " + t.name);
  if (is.peek() != std::char_traits<char>::eof())
    throw InputError(where + ": trailing bytes after checkpoint payload");
  return p;
}

}  // namespace awe
