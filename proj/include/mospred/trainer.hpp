#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mospred/manifest.hpp"
#include "mospred/metrics.hpp"
#include "mospred/model.hpp"

namespace mospred {

enum class JudgeSampling { all, one };

struct TrainConfig {
  double alpha = 1.0;  // segment-level loss weight
  double beta = 1.0;   // judge-level loss weight
  double lr = 1e-4;
  int total_steps = 20000;
  int warmup_steps = 500;
  int validate_every = 250;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Ablation ablation;
  /// Drop the bias network entirely, equivalent to beta = 0.
  bool no_bias = false;
  JudgeSampling judge_sampling = JudgeSampling::all;
  int hidden_dim = 256;
  SegmentConfig segments;
  bool bias_shares_attention = false;

  void validate() const;
  double effective_beta() const { return no_bias ? 0.0 : beta; }
};

/// Linear warmup from 0 to `lr` over `warmup_steps`, then linear decay to 0
/// at `total_steps`.
double lr_at(int step, const TrainConfig& cfg);

struct AdamState {
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(std::span<ad::Parameter* const> params);

/// Bias-corrected Adam update using each parameter's accumulated `grad`.
void optimizer_step(std::span<ad::Parameter* const> params, AdamState& state, double lr);

/// One training item: an utterance plus the judge scores used in this batch.
struct TrainExample {
  std::string utterance_id;
  const PreparedUtterance* utterance = nullptr;
  double mean_score = 0.0;
  std::vector<std::pair<int, double>> judges;  // (judge row, score)
};

/// Per-utterance objective
///   (y_hat - y)^2 + alpha * mean_i (w_i - y)^2 + beta * mean_k (y_hat_k - y_k)^2,
/// with w_i the (clipped) scores of the scoring units.
ad::Var example_loss(ad::Tape& tape, const BoundParams& p, const ModelConfig& config, const TrainExample& example,
                     double alpha, double beta);

/// Batch mean of example_loss. With `accumulate`, gradients of the batch mean
/// are added into the parameters' `grad` (one tape per example).
double loss(std::span<const TrainExample> batch, MosModel& model, const TrainConfig& cfg, bool accumulate);

struct ValidationRecord {
  int step = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean over steps since the previous validation
  metrics::EvalReport valid;
  bool is_best = false;
};

std::string to_json_line(const ValidationRecord& record);

struct TrainResult {
  MosModel best_model;
  std::string best_checkpoint;
  int best_step = 0;
  double best_valid_srcc = 0.0;
  std::vector<ValidationRecord> log;
  std::vector<double> step_losses;
};

/// Head-only training over frozen features. Deterministic given `cfg.seed`.
TrainResult train(const LoadedSplit& train_split, const LoadedSplit& valid_split, const TrainConfig& cfg,
                  const std::function<void(const ValidationRecord&)>& on_validation = {});

/// Scores every utterance of a split with the mean path.
std::vector<metrics::ScoredUtterance> score_split(const MosModel& model, const LoadedSplit& split);

ModelConfig model_config_for(const TrainConfig& cfg, int input_dim);

}  // namespace mospred
