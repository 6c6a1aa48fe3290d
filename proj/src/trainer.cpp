#include "mospred/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "json.hpp"

#include "mospred/checkpoint.hpp"
#include "mospred/error.hpp"

namespace mospred {

using ad::Matrix;
using ad::Var;

void TrainConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ArgumentError("alpha and beta must be non-negative");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rate must be positive");
  if (total_steps < 1) throw ArgumentError("total_steps must be at least 1");
  if (warmup_steps < 0 || warmup_steps >= total_steps) {
    throw ArgumentError("warmup_steps must satisfy 0 <= warmup_steps < total_steps");
  }
  if (validate_every < 1) throw ArgumentError("validate_every must be at least 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  if (hidden_dim < 1) throw ArgumentError("hidden_dim must be at least 1");
  if (!(segments.seg_seconds > 0.0) || !(segments.stride_seconds > 0.0) ||
      segments.stride_seconds > segments.seg_seconds) {
    throw ArgumentError("segmentation must satisfy 0 < stride <= segment duration");
  }
}

double lr_at(int step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps) {
    throw ArgumentError("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(cfg.total_steps) + "]");
  }
  if (step < cfg.warmup_steps) {
    return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  const double remaining = static_cast<double>(cfg.total_steps - step);
  return cfg.lr * remaining / static_cast<double>(cfg.total_steps - cfg.warmup_steps);
}

AdamState make_adam(std::span<ad::Parameter* const> params) {
  AdamState s;
  for (auto* p : params) {
    s.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    s.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void optimizer_step(std::span<ad::Parameter* const> params, AdamState& state, double lr) {
  if (state.m.size() != params.size()) throw ShapeError("optimizer_step: moment count does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.m[i].rows() != p.value.rows() || state.m[i].cols() != p.value.cols()) {
      throw ShapeError("optimizer_step: shape mismatch for '" + p.name + "'");
    }
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * p.grad;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + state.eps);
  }
}

Var example_loss(ad::Tape& tape, const BoundParams& p, const ModelConfig& config, const TrainExample& ex,
                 double alpha, double beta) {
  if (ex.utterance == nullptr) throw ArgumentError("example_loss: missing utterance");
  auto g = build_mean_path(tape, p, config, *ex.utterance);
  const Var target = tape.constant_scalar(ex.mean_score);
  Var total = mse(g.utterance_score, target);

  if (alpha > 0.0) {
    const auto n = g.unit_scores.rows();
    const Var unit_target = tape.constant(Matrix::Constant(n, 1, ex.mean_score));
    total = add(total, scale(mse(g.unit_scores, unit_target), alpha));
  }
  if (beta > 0.0 && !ex.judges.empty()) {
    std::vector<Var> judged;
    Matrix judge_targets(static_cast<Eigen::Index>(ex.judges.size()), 1);
    for (std::size_t j = 0; j < ex.judges.size(); ++j) {
      Var delta = build_judge_delta(tape, p, config, *ex.utterance, g.projected, ex.judges[j].first);
      judged.push_back(add(g.utterance_score, delta));
      judge_targets(static_cast<Eigen::Index>(j), 0) = ex.judges[j].second;
    }
    Var pred = judged.size() == 1 ? judged.front() : concat_rows(judged);
    total = add(total, scale(mse(pred, tape.constant(std::move(judge_targets))), beta));
  }
  return total;
}

double loss(std::span<const TrainExample> batch, MosModel& model, const TrainConfig& cfg, bool accumulate) {
  if (batch.empty()) throw ArgumentError("loss: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  const double beta = cfg.effective_beta();
  double total = 0.0;
  for (const auto& ex : batch) {
    ad::Tape tape;
    const auto p = accumulate ? bind_trainable(tape, model.params) : bind_frozen(tape, model.params);
    Var l = scale(example_loss(tape, p, model.config, ex, cfg.alpha, beta), inv);
    total += l.item();
    if (accumulate) tape.backward(l);
  }
  return total;
}

namespace {

nlohmann::ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), 0x5eedU};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// Every example builds a fresh tape full of frame-sized matrices. With glibc's
// defaults each of those is mmapped and unmapped again, which costs more than
// the arithmetic; raising the thresholds keeps them on the heap.
void keep_allocations_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
  });
#endif
}

}  // namespace

std::string to_json_line(const ValidationRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["train_loss"] = finite_or_null(r.train_loss);
  j["valid_utt_mse"] = finite_or_null(r.valid.utterance.mse);
  j["valid_utt_lcc"] = finite_or_null(r.valid.utterance.lcc);
  j["valid_utt_srcc"] = finite_or_null(r.valid.utterance.srcc);
  j["valid_sys_mse"] = finite_or_null(r.valid.system.mse);
  j["valid_sys_lcc"] = finite_or_null(r.valid.system.lcc);
  j["valid_sys_srcc"] = finite_or_null(r.valid.system.srcc);
  j["is_best"] = r.is_best;
  return j.dump();
}

ModelConfig model_config_for(const TrainConfig& cfg, int input_dim) {
  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.segments = cfg.segments;
  mc.ablation = cfg.ablation;
  mc.bias_shares_attention = cfg.bias_shares_attention;
  return mc;
}

std::vector<metrics::ScoredUtterance> score_split(const MosModel& model, const LoadedSplit& split) {
  std::vector<metrics::ScoredUtterance> out;
  out.reserve(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& rec = split.manifest.entries[i];
    out.push_back({rec.utterance_id, rec.system_id, predict(model, split.features[i]), rec.mean_score});
  }
  return out;
}

TrainResult train(const LoadedSplit& train_split, const LoadedSplit& valid_split, const TrainConfig& cfg,
                  const std::function<void(const ValidationRecord&)>& on_validation) {
  cfg.validate();
  if (train_split.features.empty()) throw ArgumentError("train: empty training split");
  if (valid_split.features.empty()) throw ArgumentError("train: empty validation split");
  const auto dim = static_cast<int>(train_split.features.front().dim());
  for (const auto& t : valid_split.features) {
    if (t.dim() != dim) throw ShapeError("train: train and valid feature dimensions differ");
  }
  if (valid_split.manifest.system_ids().size() < 2) {
    throw ArgumentError("train: the validation split needs at least two systems");
  }

  if (train_split.manifest.split != Split::train) throw ArgumentError("train: first split must be the train split");
  keep_allocations_on_heap();

  TrainResult result;
  MosModel model = init_model(model_config_for(cfg, dim), standardize_features(train_split),
                              train_split.manifest.judge_ids(), cfg.seed);

  std::vector<PreparedUtterance> prepared;
  prepared.reserve(train_split.size());
  for (const auto& t : train_split.features) prepared.push_back(prepare(model, t));
  std::vector<PreparedUtterance> valid_prepared;
  valid_prepared.reserve(valid_split.size());
  for (const auto& t : valid_split.features) valid_prepared.push_back(prepare(model, t));

  const bool use_judges = cfg.effective_beta() > 0.0;
  std::vector<TrainExample> examples;
  for (std::size_t i = 0; i < train_split.size(); ++i) {
    const auto& rec = train_split.manifest.entries[i];
    TrainExample ex;
    ex.utterance_id = rec.utterance_id;
    ex.utterance = &prepared[i];
    ex.mean_score = rec.mean_score;
    if (use_judges) {
      for (const auto& j : rec.judge_scores) ex.judges.emplace_back(model.judge_index(j.judge_id), j.score);
    }
    examples.push_back(std::move(ex));
  }

  auto params = model.params.all();
  auto adam = make_adam(params);

  std::uint64_t epoch = 0;
  auto order = epoch_order(examples.size(), cfg.seed, epoch);
  std::size_t cursor = 0;

  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  double loss_since = 0.0;
  int steps_since = 0;
  std::vector<TrainExample> batch;

  for (int step = 1; step <= cfg.total_steps; ++step) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        order = epoch_order(examples.size(), cfg.seed, ++epoch);
        cursor = 0;
      }
      TrainExample ex = examples[order[cursor++]];
      if (cfg.judge_sampling == JudgeSampling::one && ex.judges.size() > 1) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(step),
                          static_cast<std::uint32_t>(b), 0x1dU};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> pick(0, ex.judges.size() - 1);
        ex.judges = {ex.judges[pick(rng)]};
      }
      batch.push_back(std::move(ex));
    }

    const double lr = lr_at(step, cfg);
    for (auto* p : params) p->zero_grad();
    double batch_loss = 0.0;
    try {
      batch_loss = loss(batch, model, cfg, true);
    } catch (const NumericError&) {
      batch_loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(batch_loss)) {
      std::string ids;
      for (const auto& ex : batch) ids += (ids.empty() ? "" : ",") + ex.utterance_id;
      throw TrainingError("non-finite loss at step " + std::to_string(step) + " (lr " + std::to_string(lr) +
                          ", batch " + ids + ")");
    }
    optimizer_step(params, adam, lr);
    result.step_losses.push_back(batch_loss);
    loss_since += batch_loss;
    ++steps_since;

    if (step % cfg.validate_every == 0 || step == cfg.total_steps) {
      std::vector<metrics::ScoredUtterance> scored;
      scored.reserve(valid_split.size());
      for (std::size_t i = 0; i < valid_split.size(); ++i) {
        const auto& rec = valid_split.manifest.entries[i];
        scored.push_back({rec.utterance_id, rec.system_id, predict(model, valid_prepared[i]), rec.mean_score});
      }
      ValidationRecord record;
      record.step = step;
      record.lr = lr;
      record.train_loss = loss_since / steps_since;
      record.valid = metrics::evaluate(scored);
      const double srcc = record.valid.system.srcc;
      if (std::isfinite(srcc) && srcc > best) {
        best = srcc;
        have_best = true;
        record.is_best = true;
        result.best_step = step;
        result.best_checkpoint = encode_checkpoint(model);
      }
      loss_since = 0.0;
      steps_since = 0;
      if (on_validation) on_validation(record);
      result.log.push_back(std::move(record));
    }
  }

  if (!have_best) {
    // No validation produced a defined SRCC; keep the final parameters.
    result.best_step = cfg.total_steps;
    result.best_checkpoint = encode_checkpoint(model);
    best = std::numeric_limits<double>::quiet_NaN();
  }
  result.best_valid_srcc = best;
  result.best_model = decode_checkpoint(result.best_checkpoint);
  return result;
}

}  // namespace mospred
