#include "mospred/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mospred/error.hpp"

namespace mospred {

using ad::Matrix;
using ad::Var;

std::vector<ad::Parameter*> ModelParams::all() {
  return {&proj_w, &proj_b, &attn_w, &head_w, &head_b, &judge_table, &bias_attn_w, &bias_head_w, &bias_head_b};
}

std::vector<const ad::Parameter*> ModelParams::all() const {
  return {&proj_w, &proj_b, &attn_w, &head_w, &head_b, &judge_table, &bias_attn_w, &bias_head_w, &bias_head_b};
}

int MosModel::judge_index(const std::string& judge_id) const {
  for (std::size_t i = 0; i < judge_ids.size(); ++i) {
    if (judge_ids[i] == judge_id) return static_cast<int>(i);
  }
  throw LookupError("unknown judge '" + judge_id + "'");
}

MosModel init_model(const ModelConfig& config, FeatureStats stats, std::vector<std::string> judge_ids,
                    std::uint64_t seed) {
  if (config.input_dim < 1 || config.hidden_dim < 1) {
    throw ArgumentError("model dimensions must be positive");
  }
  if (stats.dim() != config.input_dim) {
    throw ShapeError("feature statistics have dimension " + std::to_string(stats.dim()) +
                     ", model expects " + std::to_string(config.input_dim));
  }
  std::mt19937_64 rng(seed);
  const auto d = config.input_dim;
  const auto h = config.hidden_dim;
  const auto k = static_cast<Eigen::Index>(judge_ids.size());

  auto uniform = [&rng](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
  };

  MosModel model;
  model.config = config;
  model.stats = std::move(stats);
  model.judge_ids = std::move(judge_ids);
  auto& p = model.params;
  p.proj_w = {"proj_w", uniform(d, h, d)};
  p.proj_b = {"proj_b", uniform(1, h, d)};
  p.attn_w = {"attn_w", Matrix::Zero(h, 1)};
  p.head_w = {"head_w", uniform(h, 1, h)};
  p.head_b = {"head_b", Matrix::Constant(1, 1, config.clipping() ? 0.0 : 3.0)};

  std::normal_distribution<double> normal(0.0, 0.01);
  Matrix table(k, h);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = normal(rng);
  p.judge_table = {"judge_table", std::move(table)};
  p.bias_attn_w = {"bias_attn_w", Matrix::Zero(h, 1)};
  p.bias_head_w = {"bias_head_w", uniform(h, 1, h)};
  p.bias_head_b = {"bias_head_b", Matrix::Zero(1, 1)};
  return model;
}

PreparedUtterance prepare(const MosModel& model, const FeatureTensor& features) {
  if (features.dim() != model.config.input_dim) {
    throw ShapeError("utterance '" + features.utterance_id + "' has feature dimension " +
                     std::to_string(features.dim()) + ", model expects " +
                     std::to_string(model.config.input_dim));
  }
  PreparedUtterance utt;
  utt.frames = model.stats.apply(features.data);
  utt.segments = segment_frames(static_cast<int>(features.num_frames()), features.frames_per_second,
                                model.config.segments);
  return utt;
}

BoundParams bind_trainable(ad::Tape& tape, ModelParams& p) {
  return {tape.param(p.proj_w),      tape.param(p.proj_b),      tape.param(p.attn_w),
          tape.param(p.head_w),      tape.param(p.head_b),      tape.param(p.judge_table),
          tape.param(p.bias_attn_w), tape.param(p.bias_head_w), tape.param(p.bias_head_b)};
}

BoundParams bind_frozen(ad::Tape& tape, const ModelParams& p) {
  return {tape.constant(p.proj_w.value),      tape.constant(p.proj_b.value),
          tape.constant(p.attn_w.value),      tape.constant(p.head_w.value),
          tape.constant(p.head_b.value),      tape.constant(p.judge_table.value),
          tape.constant(p.bias_attn_w.value), tape.constant(p.bias_head_w.value),
          tape.constant(p.bias_head_b.value)};
}

namespace {

struct Pooled {
  Var units;  // N x H
  std::vector<Eigen::RowVectorXd> attention;
};

// Pools projected frames into one row per scoring unit.
Pooled pool(ad::Tape& tape, Var reps, Var attn_w, const ModelConfig& config, const PreparedUtterance& utt) {
  Pooled out;
  if (config.ablation.no_segments) {
    // Every frame is its own unit with the trivial weight [1].
    out.units = reps;
    return out;
  }
  std::optional<Var> logits;
  if (!config.ablation.mean_pooling) logits = matmul(reps, attn_w);  // frames x 1

  std::vector<Var> rows;
  rows.reserve(utt.segments.size());
  for (const auto& seg : utt.segments) {
    const auto m = seg.length();
    Var frames = slice_rows(reps, seg.start, seg.end);
    Var weights;
    if (logits) {
      weights = softmax_rows(transpose(slice_rows(*logits, seg.start, seg.end)));  // 1 x M
    } else {
      weights = tape.constant(Matrix::Constant(1, m, 1.0 / m));
    }
    out.attention.push_back(weights.value().row(0));
    rows.push_back(matmul(weights, frames));  // 1 x H
  }
  out.units = rows.size() == 1 ? rows.front() : concat_rows(rows);
  return out;
}

// tanh saturates to exactly +-1 in double precision once |g| exceeds ~19, which
// would land clipped scores on the closed bounds. Pin them to the nearest
// interior values; the adjoint passes through unchanged (tanh' is ~0 there).
Var keep_open_range(ad::Tape& tape, Var x) {
  static const double lo = std::nextafter(1.0, 2.0);
  static const double hi = std::nextafter(5.0, 4.0);
  Matrix v = x.value().cwiseMax(lo).cwiseMin(hi);
  return tape.record("keep_open_range", std::move(v), {x}, [](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) *pg[0] += g;
  });
}

Var score_units(ad::Tape& tape, Var units, Var head_w, Var head_b, bool clipping) {
  Var raw = add_row_broadcast(matmul(units, head_w), head_b);
  if (!clipping) return raw;
  return keep_open_range(tape, add_constant(scale(ad::tanh(raw), 2.0), 3.0));
}

}  // namespace

MeanPathGraph build_mean_path(ad::Tape& tape, const BoundParams& p, const ModelConfig& config,
                              const PreparedUtterance& utt) {
  if (utt.frames.cols() != config.input_dim) {
    throw ShapeError("prepared utterance has dimension " + std::to_string(utt.frames.cols()) +
                     ", model expects " + std::to_string(config.input_dim));
  }
  MeanPathGraph g;
  Var frames = tape.constant(utt.frames);
  g.projected = add_row_broadcast(matmul(frames, p.proj_w), p.proj_b);
  auto pooled = pool(tape, g.projected, p.attn_w, config, utt);
  g.attention = std::move(pooled.attention);
  g.unit_scores = score_units(tape, pooled.units, p.head_w, p.head_b, config.clipping());
  g.utterance_score = mean_all(g.unit_scores);
  return g;
}

Var build_judge_delta(ad::Tape& tape, const BoundParams& p, const ModelConfig& config,
                      const PreparedUtterance& utt, Var projected, int judge_index) {
  if (judge_index < 0 || judge_index >= p.judge_table.rows()) {
    throw LookupError("judge index " + std::to_string(judge_index) + " outside the embedding table");
  }
  Var embedding = slice_rows(p.judge_table, judge_index, judge_index + 1);
  Var biased = add_row_broadcast(projected, embedding);
  Var attn = config.bias_shares_attention ? p.attn_w : p.bias_attn_w;
  auto pooled = pool(tape, biased, attn, config, utt);
  return mean_all(score_units(tape, pooled.units, p.bias_head_w, p.bias_head_b, false));
}

ForwardOutput forward_mean(const MosModel& model, const PreparedUtterance& utt) {
  ad::Tape tape;
  const auto p = bind_frozen(tape, model.params);
  auto g = build_mean_path(tape, p, model.config, utt);
  ForwardOutput out;
  out.utterance_score = g.utterance_score.item();
  const auto& s = g.unit_scores.value();
  out.segment_scores.assign(s.data(), s.data() + s.size());
  out.attention = std::move(g.attention);
  return out;
}

ForwardOutput forward_mean(const MosModel& model, const FeatureTensor& features) {
  return forward_mean(model, prepare(model, features));
}

ForwardOutput forward_judge(const MosModel& model, const FeatureTensor& features, const std::string& judge_id) {
  const int k = model.judge_index(judge_id);
  const auto utt = prepare(model, features);
  ad::Tape tape;
  const auto p = bind_frozen(tape, model.params);
  auto g = build_mean_path(tape, p, model.config, utt);
  auto delta = build_judge_delta(tape, p, model.config, utt, g.projected, k);
  ForwardOutput out;
  out.utterance_score = g.utterance_score.item();
  const auto& s = g.unit_scores.value();
  out.segment_scores.assign(s.data(), s.data() + s.size());
  out.attention = std::move(g.attention);
  out.judge_score = out.utterance_score + delta.item();
  return out;
}

double predict(const MosModel& model, const PreparedUtterance& utt) {
  return forward_mean(model, utt).utterance_score;
}

double predict(const MosModel& model, const FeatureTensor& features) {
  return forward_mean(model, features).utterance_score;
}

std::pair<Eigen::VectorXd, Eigen::RowVectorXd> attention_pool(const ad::Matrix& frames,
                                                               const Eigen::VectorXd& attn_w) {
  if (frames.rows() < 1) throw ArgumentError("attention_pool: need at least one frame");
  if (frames.cols() != attn_w.size()) {
    throw ShapeError("attention_pool: frames have width " + std::to_string(frames.cols()) +
                     ", attention vector has " + std::to_string(attn_w.size()));
  }
  ad::Tape tape;
  Var h = tape.constant(frames);
  Var w = tape.constant(attn_w);
  Var q = softmax_rows(transpose(matmul(h, w)));
  Var pooled = matmul(q, h);
  return {pooled.value().row(0).transpose(), q.value().row(0)};
}

double segment_score(const ModelParams& params, const Eigen::VectorXd& pooled, bool clipping) {
  if (pooled.size() != params.head_w.value.rows()) {
    throw ShapeError("segment_score: pooled vector has size " + std::to_string(pooled.size()) +
                     ", head expects " + std::to_string(params.head_w.value.rows()));
  }
  const double g = params.head_w.value.col(0).dot(pooled) + params.head_b.value(0, 0);
  if (!clipping) return g;
  return std::clamp(2.0 * std::tanh(g) + 3.0, std::nextafter(1.0, 2.0), std::nextafter(5.0, 4.0));
}

}  // namespace mospred
