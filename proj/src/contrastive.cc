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

#include "awe/contrastive.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "awe/parallel.h"

namespace awe {

DenominatorMode parse_denominator_mode(std::string_view name) {
  if (name == "standard") return DenominatorMode::kStandard;
  if (name == "literal") return DenominatorMode::kLiteral;
  throw InputError("unknown denominator mode '" + std::string(name) + "'");
}

namespace {

template <typename Scalar>
struct CosineParts {
  Scalar value = 0;
  Vector<Scalar> grad_a;
  Vector<Scalar> grad_b;
};

template <typename Scalar>
CosineParts<Scalar> cosine_with_grads(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  if (a.size() != b.size()) throw InputError("cosine: dimension mismatch");
  CosineParts<Scalar> out;
  const Scalar na = a.norm(), nb = b.norm();
  if (na < Scalar(kCosineNormFloor) || nb < Scalar(kCosineNormFloor)) {
    out.grad_a = Vector<Scalar>::Zero(a.size());
    out.grad_b = Vector<Scalar>::Zero(b.size());
    return out;
  }
  out.value = a.dot(b) / (na * nb);
  out.grad_a = b / (na * nb) - out.value * a / (na * na);
  out.grad_b = a / (na * nb) - out.value * b / (nb * nb);
  return out;
}

template <typename Scalar>
void check_loss_args(std::span<const Vector<Scalar>> negatives, Scalar temperature) {
  if (negatives.empty()) throw InputError("ntxent: empty negative set");
  if (!(temperature > 0)) throw InputError("ntxent: temperature must be positive");
}

// Loss and d(loss)/d(logit) for logits z[0] (positive) and z[1..] (negatives).
template <typename Scalar>
Scalar ntxent_from_logits(const std::vector<Scalar>& z, DenominatorMode mode,
                          std::vector<Scalar>* dz) {
  const size_t first = mode == DenominatorMode::kStandard ? 0 : 1;
  Scalar m = z[first];
  for (size_t i = first; i < z.size(); ++i) m = std::max(m, z[i]);
  Scalar sum = 0;
  for (size_t i = first; i < z.size(); ++i) sum += std::exp(z[i] - m);
  const Scalar lse = m + std::log(sum);
  if (dz != nullptr) {
    dz->assign(z.size(), Scalar(0));
    for (size_t i = first; i < z.size(); ++i) (*dz)[i] = std::exp(z[i] - lse);
    (*dz)[0] -= Scalar(1);
  }
  return lse - z[0];
}

}  // namespace

template <typename Scalar>
Scalar cosine(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  if (a.size() != b.size()) throw InputError("cosine: dimension mismatch");
  const Scalar na = a.norm(), nb = b.norm();
  if (na < Scalar(kCosineNormFloor) || nb < Scalar(kCosineNormFloor)) return Scalar(0);
  return std::clamp(a.dot(b) / (na * nb), Scalar(-1), Scalar(1));
}

template <typename Scalar>
Scalar ntxent_loss(const Vector<Scalar>& anchor, const Vector<Scalar>& positive,
                   std::span<const Vector<Scalar>> negatives, Scalar temperature,
                   DenominatorMode mode) {
  check_loss_args(negatives, temperature);
  std::vector<Scalar> z;
  z.reserve(negatives.size() + 1);
  z.push_back(cosine(anchor, positive) / temperature);
  for (const auto& n : negatives) z.push_back(cosine(anchor, n) / temperature);
  return ntxent_from_logits<Scalar>(z, mode, nullptr);
}

template <typename Scalar>
NtxentGrad<Scalar> ntxent_grad(const Vector<Scalar>& anchor, const Vector<Scalar>& positive,
                               std::span<const Vector<Scalar>> negatives, Scalar temperature,
                               DenominatorMode mode) {
  check_loss_args(negatives, temperature);
  std::vector<CosineParts<Scalar>> parts;
  parts.reserve(negatives.size() + 1);
  parts.push_back(cosine_with_grads(anchor, positive));
  for (const auto& n : negatives) parts.push_back(cosine_with_grads(anchor, n));
  std::vector<Scalar> z, dz;
  for (const auto& p : parts) z.push_back(p.value / temperature);

  NtxentGrad<Scalar> out;
  out.loss = ntxent_from_logits(z, mode, &dz);
  out.anchor = Vector<Scalar>::Zero(anchor.size());
  for (size_t i = 0; i < parts.size(); ++i) out.anchor += (dz[i] / temperature) * parts[i].grad_a;
  out.positive = (dz[0] / temperature) * parts[0].grad_b;
  for (size_t i = 1; i < parts.size(); ++i)
    out.negatives.push_back((dz[i] / temperature) * parts[i].grad_b);
  return out;
}

template <typename Scalar>
BatchLoss<Scalar> batch_ntxent(const RowMatrix<Scalar>& awes,
                               const std::vector<std::vector<uint32_t>>& negatives,
                               Scalar temperature, DenominatorMode mode) {
  if (!(temperature > 0)) throw InputError("ntxent: temperature must be positive");
  const Eigen::Index n = awes.rows();
  const Eigen::Index slots = n / 2;
  if (n % 2 != 0 || static_cast<size_t>(slots) != negatives.size())
    throw InputError("batch_ntxent: expected 2 views per slot");

  Vector<Scalar> norms = awes.rowwise().norm();
  RowMatrix<Scalar> unit = RowMatrix<Scalar>::Zero(n, awes.cols());
  for (Eigen::Index r = 0; r < n; ++r)
    if (norms(r) >= Scalar(kCosineNormFloor)) unit.row(r) = awes.row(r) / norms(r);
  RowMatrix<Scalar> cos = unit * unit.transpose();

  RowMatrix<Scalar> g = RowMatrix<Scalar>::Zero(n, n);
  BatchLoss<Scalar> out;
  std::vector<Scalar> z, dz;
  std::vector<Eigen::Index> cols;
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index slot = r % slots;
    const auto& neg = negatives[static_cast<size_t>(slot)];
    if (neg.empty()) continue;
    cols.clear();
    cols.push_back(r < slots ? r + slots : r - slots);
    for (uint32_t s : neg) {
      cols.push_back(s);
      cols.push_back(s + slots);
    }
    z.clear();
    for (Eigen::Index c : cols) z.push_back(cos(r, c) / temperature);
    out.loss += ntxent_from_logits(z, mode, &dz);
    for (size_t i = 0; i < cols.size(); ++i) g(r, cols[i]) += dz[i] / temperature;
    ++out.terms;
  }
  if (out.terms == 0) {
    out.grad = RowMatrix<Scalar>::Zero(n, awes.cols());
    return out;
  }
  const Scalar inv = Scalar(1) / static_cast<Scalar>(out.terms);
  out.loss *= inv;
  g *= inv;

  // d cos(u, v) / du = (v_hat - cos(u, v) u_hat) / |u|
  RowMatrix<Scalar> sym = g + g.transpose();
  out.grad = sym * unit;
  Vector<Scalar> diag = sym.cwiseProduct(cos).rowwise().sum();
  for (Eigen::Index r = 0; r < n; ++r) {
    if (norms(r) < Scalar(kCosineNormFloor)) {
      out.grad.row(r).setZero();
      continue;
    }
    out.grad.row(r) = (out.grad.row(r) - diag(r) * unit.row(r)) / norms(r);
  }
  return out;
}

template float cosine(const Vector<float>&, const Vector<float>&);
template double cosine(const Vector<double>&, const Vector<double>&);
template float ntxent_loss(const Vector<float>&, const Vector<float>&,
                           std::span<const Vector<float>>, float, DenominatorMode);
template double ntxent_loss(const Vector<double>&, const Vector<double>&,
                            std::span<const Vector<double>>, double, DenominatorMode);
template NtxentGrad<float> ntxent_grad(const Vector<float>&, const Vector<float>&,
                                       std::span<const Vector<float>>, float, DenominatorMode);
template NtxentGrad<double> ntxent_grad(const Vector<double>&, const Vector<double>&,
                                        std::span<const Vector<double>>, double,
                                        DenominatorMode);
template BatchLoss<float> batch_ntxent(const RowMatrix<float>&,
                                       const std::vector<std::vector<uint32_t>>&, float,
                                       DenominatorMode);
template BatchLoss<double> batch_ntxent(const RowMatrix<double>&,
                                        const std::vector<std::vector<uint32_t>>&, double,
                                        DenominatorMode);

// ---------------------------------------------------------------------------
// Batching

BatchPlan build_batches(const PairSet& pairs, size_t batch_size, uint64_t seed) {
  if (batch_size < 2) throw InputError("batch_size must be >= 2");
  BatchPlan plan;
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  if (!pairs.pairs.empty() && pairs.size() < batch_size)
    plan.warning = "only " + std::to_string(pairs.size()) +
                   " pairs available; using a single batch smaller than " +
                   std::to_string(batch_size);

  const bool knn = pairs.provenance == Provenance::kKnn;
  for (size_t begin = 0; begin < order.size(); begin += batch_size) {
    const size_t end = std::min(order.size(), begin + batch_size);
    if (end - begin < 2) break;
    ContrastiveBatch batch;
    for (size_t i = begin; i < end; ++i) {
      const SegmentPair& p = pairs.pairs[order[i]];
      batch.pair_index.push_back(order[i]);
      batch.anchors.push_back(p.a);
      batch.positives.push_back(p.b);
      batch.keys.push_back(p.key);
    }
    const size_t b = batch.size();
    batch.negatives.resize(b);
    for (size_t i = 0; i < b; ++i)
      for (size_t j = 0; j < b; ++j)
        if (j != i && (knn || batch.keys[j] != batch.keys[i]))
          batch.negatives[i].push_back(static_cast<uint32_t>(j));
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (!(temperature > 0)) throw InputError("train: temperature must be > 0");
  if (batch_size < 2) throw InputError("train: batch_size must be >= 2");
  if (epochs < 0) throw InputError("train: epochs must be >= 0");
  if (max_iterations_per_epoch < 1) throw InputError("train: max_iterations must be >= 1");
  if (!(learning_rate >= 0)) throw InputError("train: learning_rate must be >= 0");
  if (clip_grad_norm < 0) throw InputError("train: clip_grad_norm must be >= 0");
}

double TrainLog::mean_epoch_loss(int epoch) const {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& s : steps)
    if (s.epoch == epoch) {
      sum += s.loss;
      ++n;
    }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

void write_train_log(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os << "step,epoch,loss\n";
  char buf[64];
  for (const auto& s : log.steps) {
    std::snprintf(buf, sizeof(buf), "%.9g", s.loss);
    os << s.step << ',' << s.epoch << ',' << buf << '\n';
  }
}

namespace {

// Fixed count so gradient reduction order never depends on the worker count.
constexpr size_t kGradChunks = 8;

class Adam {
 public:
  Adam(size_t n, const TrainConfig& cfg)
      : cfg_(cfg), m_(n, 0.0f), v_(n, 0.0f) {}

  void step(PoolerParamsF& params, const ParamGrads<float>& grads) {
    ++t_;
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const float lr = static_cast<float>(cfg_.learning_rate);
    auto pt = params.tensors();
    auto gt = grads.tensors();
    size_t k = 0;
    for (size_t i = 0; i < pt.size(); ++i)
      for (size_t j = 0; j < pt[i].data.size(); ++j, ++k) {
        const float g = gt[i].data[j];
        m_[k] = static_cast<float>(b1 * m_[k] + (1.0 - b1) * g);
        v_[k] = static_cast<float>(b2 * v_[k] + (1.0 - b2) * double(g) * g);
        const double mhat = m_[k] / c1;
        const double vhat = v_[k] / c2;
        pt[i].data[j] -= lr * static_cast<float>(mhat / (std::sqrt(vhat) + cfg_.adam_eps));
      }
  }

 private:
  TrainConfig cfg_;
  std::vector<float> m_, v_;
  int64_t t_ = 0;
};

bool usable(const FeatureStore& store, const PoolerConfig& pc, const SegmentRef& s) {
  if (s.start_frame < 0 || s.end_frame <= s.start_frame) return false;
  if (s.end_frame > store.num_frames(s.utt_id)) return false;
  const int64_t len = pc.output_length(s.length());
  return len >= 1 && len <= pc.max_positions;
}

}  // namespace

TrainResult train_pooler(const FeatureStore& store, const PairSet& pairs,
                         PoolerParamsF params, const TrainConfig& cfg) {
  cfg.validate();
  const PoolerConfig& pc = params.config;
  if (store.dim() != pc.input_dim)
    throw InputError("train: features have D=" + std::to_string(store.dim()) +
                     " but the pooler expects " + std::to_string(pc.input_dim));

  TrainResult result;
  PairSet kept;
  kept.provenance = pairs.provenance;
  for (const auto& p : pairs.pairs) {
    if (usable(store, pc, p.a) && usable(store, pc, p.b))
      kept.pairs.push_back(p);
    else
      ++result.log.dropped_pairs;
  }

  Adam adam(params.num_values(), cfg);
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    BatchPlan plan = build_batches(kept, cfg.batch_size, derive_seed(cfg.seed, epoch));
    if (plan.warning && epoch == 0) result.log.warnings.push_back(*plan.warning);
    const size_t iters = std::min(plan.batches.size(),
                                  static_cast<size_t>(cfg.max_iterations_per_epoch));
    for (size_t it = 0; it < iters; ++it) {
      const ContrastiveBatch& batch = plan.batches[it];
      std::vector<const SegmentRef*> segs;
      for (const auto& s : batch.anchors) segs.push_back(&s);
      for (const auto& s : batch.positives) segs.push_back(&s);

      std::vector<PoolerOutput<float>> outs(segs.size());
      parallel_chunks(segs.size(), kGradChunks, [&](size_t b, size_t e, size_t) {
        for (size_t r = b; r < e; ++r) outs[r] = pooler_forward(params, store.get_frames(*segs[r]));
      });

      RowMatrixXd awes(static_cast<Eigen::Index>(segs.size()), pc.hidden_dim);
      for (size_t r = 0; r < segs.size(); ++r)
        awes.row(static_cast<Eigen::Index>(r)) = outs[r].awe.cast<double>().transpose();
      BatchLoss<double> bl =
          batch_ntxent<double>(awes, batch.negatives, cfg.temperature, cfg.denominator_mode);
      if (!std::isfinite(bl.loss))
        throw InternalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(it) + " (step " + std::to_string(step) + ")");

      std::vector<ParamGrads<float>> partial(kGradChunks);
      const size_t chunks = std::min(kGradChunks, segs.size());
      parallel_chunks(segs.size(), chunks, [&](size_t b, size_t e, size_t c) {
        partial[c] = ParamGrads<float>::zeros(pc);
        for (size_t r = b; r < e; ++r) {
          Eigen::VectorXf g = bl.grad.row(static_cast<Eigen::Index>(r)).transpose().cast<float>();
          pooler_backward(params, outs[r].tape, g, partial[c]);
        }
      });
      ParamGrads<float> total = std::move(partial[0]);
      for (size_t c = 1; c < chunks; ++c) {
        auto dst = total.tensors();
        auto src = partial[c].tensors();
        for (size_t i = 0; i < dst.size(); ++i)
          for (size_t j = 0; j < dst[i].data.size(); ++j) dst[i].data[j] += src[i].data[j];
      }

      if (cfg.clip_grad_norm > 0) {
        double sq = 0.0;
        for (const auto& t : total.tensors())
          for (float v : t.data) sq += double(v) * v;
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_grad_norm) {
          const float scale = static_cast<float>(cfg.clip_grad_norm / norm);
          for (auto& t : total.tensors())
            for (float& v : t.data) v *= scale;
        }
      }

      adam.step(params, total);
      result.log.steps.push_back({step, epoch, bl.loss});
      ++step;
    }
  }
  result.params = std::move(params);
  return result;
}

}  // namespace awe
