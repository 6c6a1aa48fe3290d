#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mospred/manifest.hpp"

namespace mospred {

/// Knobs of the planted-quality corpus generator.
struct SynthConfig {
  int n_systems = 10;
  int utterances_per_system = 50;
  int dim = 32;
  double frames_per_second = 50.0;
  double min_duration = 1.5;  // seconds
  double max_duration = 3.5;
  int n_judges = 20;
  int judges_per_utterance = 4;
  double judge_bias_std = 0.3;
  /// Standard deviation of both the utterance deviation from its system's
  /// quality and each judge's observation noise.
  double noise_std = 0.2;
  double train_fraction = 0.7;
  double valid_fraction = 0.15;

  void validate() const;
};

/// The generator's hidden ground truth.
struct PlantedTruth {
  std::map<std::string, double> system_quality;
  std::map<std::string, double> judge_bias;
  std::map<std::string, double> utterance_truth;
  /// quality = weights . frame_mean + intercept, exactly, before f32 rounding.
  std::vector<double> weights;
  double intercept = 0.0;
};

struct SynthCorpus {
  LoadedSplit train;
  LoadedSplit valid;
  LoadedSplit test;
  PlantedTruth truth;
};

/// Each system gets a latent quality q ~ U[1.5, 4.5]; every utterance's frames
/// are drawn so that a fixed linear functional of its frame mean equals
/// q + N(0, noise_std^2). Judge k's score is clamp(truth + b_k + noise, 1, 5).
/// Everything is a function of `seed`. Feature paths are set to
/// `features/<utterance_id>.mosf` for a later `write_synthetic_corpus`.
SynthCorpus generate_synthetic_corpus(const SynthConfig& cfg, std::uint64_t seed);

/// Writes features/, train.csv, valid.csv, test.csv and corpus.json under
/// `out_dir`, updating the manifests' feature paths to the written files.
void write_synthetic_corpus(SynthCorpus& corpus, const SynthConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir);

}  // namespace mospred
