#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mospred/autodiff.hpp"
#include "mospred/feature_file.hpp"
#include "mospred/segmentation.hpp"
#include "mospred/standardize.hpp"

namespace mospred {

/// Component removals used in the ablation study.
struct Ablation {
  /// Score every frame on its own (no segmental embeddings); the segment term
  /// of the loss becomes a frame-level term.
  bool no_segments = false;
  /// Uniform weights in place of attention pooling.
  bool mean_pooling = false;
  /// Raw head output instead of 2 tanh(.) + 3.
  bool no_clipping = false;

  bool operator==(const Ablation&) const = default;
};

struct ModelConfig {
  int input_dim = 0;
  int hidden_dim = 256;
  SegmentConfig segments;
  Ablation ablation;
  /// When set, the bias network reuses the mean path's attention vector.
  bool bias_shares_attention = false;

  bool clipping() const { return !ablation.no_clipping; }
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ad::Parameter proj_w;       // d x H
  ad::Parameter proj_b;       // 1 x H
  ad::Parameter attn_w;       // H x 1
  ad::Parameter head_w;       // H x 1
  ad::Parameter head_b;       // 1 x 1
  ad::Parameter judge_table;  // K x H
  ad::Parameter bias_attn_w;  // H x 1
  ad::Parameter bias_head_w;  // H x 1
  ad::Parameter bias_head_b;  // 1 x 1

  std::vector<ad::Parameter*> all();
  std::vector<const ad::Parameter*> all() const;
};

struct MosModel {
  ModelConfig config;
  FeatureStats stats;
  ModelParams params;
  std::vector<std::string> judge_ids;

  /// Row of `judge_id` in the embedding table; throws LookupError when unknown.
  int judge_index(const std::string& judge_id) const;
};

/// Projection and heads ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); attention vectors
/// start at zero; judge embeddings ~ N(0, 0.01^2). The mean head's bias starts
/// at 3.0 without clipping and 0.0 with it, so the first predictions sit mid-scale.
MosModel init_model(const ModelConfig& config, FeatureStats stats, std::vector<std::string> judge_ids,
                    std::uint64_t seed);

/// Standardized frames plus their segmentation.
struct PreparedUtterance {
  ad::Matrix frames;
  std::vector<FrameRange> segments;
};

PreparedUtterance prepare(const MosModel& model, const FeatureTensor& features);

/// Graph handles for the parameters of one tape.
struct BoundParams {
  ad::Var proj_w, proj_b, attn_w, head_w, head_b, judge_table, bias_attn_w, bias_head_w, bias_head_b;
};

BoundParams bind_trainable(ad::Tape& tape, ModelParams& params);
BoundParams bind_frozen(ad::Tape& tape, const ModelParams& params);

struct MeanPathGraph {
  ad::Var projected;        // frames x H
  ad::Var unit_scores;      // N x 1 (segments, or frames under no_segments)
  ad::Var utterance_score;  // 1 x 1
  std::vector<Eigen::RowVectorXd> attention;
};

MeanPathGraph build_mean_path(ad::Tape& tape, const BoundParams& p, const ModelConfig& config,
                              const PreparedUtterance& utt);

/// Judge offset delta_k: the judge embedding is added to every projected
/// frame, then pooled and scored by the bias network without clipping.
ad::Var build_judge_delta(ad::Tape& tape, const BoundParams& p, const ModelConfig& config,
                          const PreparedUtterance& utt, ad::Var projected, int judge_index);

struct ForwardOutput {
  double utterance_score = 0.0;
  std::vector<double> segment_scores;
  std::optional<double> judge_score;
  std::vector<Eigen::RowVectorXd> attention;
};

ForwardOutput forward_mean(const MosModel& model, const PreparedUtterance& utt);
ForwardOutput forward_mean(const MosModel& model, const FeatureTensor& features);

/// Mean path plus the bias network for one training judge; `judge_score` is set.
ForwardOutput forward_judge(const MosModel& model, const FeatureTensor& features, const std::string& judge_id);

/// Inference: the mean path only, the bias network is never evaluated.
double predict(const MosModel& model, const FeatureTensor& features);
double predict(const MosModel& model, const PreparedUtterance& utt);

/// Softmax attention pooling over the rows of `frames` (M x H):
/// returns (pooled H-vector, weights over M frames).
std::pair<Eigen::VectorXd, Eigen::RowVectorXd> attention_pool(const ad::Matrix& frames,
                                                               const Eigen::VectorXd& attn_w);

/// Score head g(h) = head_w . h + head_b, mapped to 2 tanh(g) + 3 when clipping.
double segment_score(const ModelParams& params, const Eigen::VectorXd& pooled, bool clipping);

}  // namespace mospred
