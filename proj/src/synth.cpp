#include "mospred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "json.hpp"

#include "binary_io.hpp"
#include "mospred/error.hpp"

namespace fs = std::filesystem;

namespace mospred {

namespace {

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_systems < 2) throw ArgumentError("synthetic corpus needs at least 2 systems");
  if (utterances_per_system < 3) throw ArgumentError("synthetic corpus needs at least 3 utterances per system");
  if (dim < 1) throw ArgumentError("feature dimension must be at least 1");
  if (!(frames_per_second > 0.0)) throw ArgumentError("frames_per_second must be positive");
  if (!(min_duration > 0.0) || max_duration < min_duration) {
    throw ArgumentError("durations must satisfy 0 < min_duration <= max_duration");
  }
  if (n_judges < 1) throw ArgumentError("need at least one judge");
  if (judges_per_utterance < 1 || judges_per_utterance > n_judges) {
    throw ArgumentError("judges_per_utterance must lie in [1, n_judges]");
  }
  if (judge_bias_std < 0.0 || noise_std < 0.0) throw ArgumentError("standard deviations must be non-negative");
  if (!(train_fraction > 0.0) || !(valid_fraction > 0.0) || train_fraction + valid_fraction >= 1.0) {
    throw ArgumentError("split fractions must be positive and leave room for a test split");
  }
}

SynthCorpus generate_synthetic_corpus(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<std::size_t>(cfg.dim);

  // Hidden functional: a unit direction in whitened space, mapped back through
  // per-dimension offsets and scales.
  std::vector<double> direction(d), offset(d), scale(d);
  double norm = 0.0;
  for (auto& v : direction) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : direction) v /= norm;
  for (std::size_t i = 0; i < d; ++i) {
    offset[i] = normal(rng);
    scale[i] = 0.5 + 1.5 * unit(rng);
  }

  SynthCorpus corpus;
  auto& truth = corpus.truth;
  truth.weights.resize(d);
  truth.intercept = 3.0;
  for (std::size_t i = 0; i < d; ++i) {
    truth.weights[i] = direction[i] / scale[i];
    truth.intercept -= direction[i] * offset[i] / scale[i];
  }

  std::vector<std::string> judges;
  for (int k = 0; k < cfg.n_judges; ++k) {
    judges.push_back(numbered("judge", k));
    truth.judge_bias[judges.back()] = cfg.judge_bias_std * normal(rng);
  }

  corpus.train.manifest.split = Split::train;
  corpus.valid.manifest.split = Split::valid;
  corpus.test.manifest.split = Split::test;
  for (auto* s : {&corpus.train, &corpus.valid, &corpus.test}) s->manifest.feature_dim = cfg.dim;

  const int n = cfg.utterances_per_system;
  const int n_train = std::max(1, static_cast<int>(std::lround(cfg.train_fraction * n)));
  const int n_valid = std::max(1, static_cast<int>(std::lround(cfg.valid_fraction * n)));
  if (n_train + n_valid >= n) {
    throw ArgumentError("split fractions leave no test utterances");
  }

  std::vector<int> judge_order(judges.size());
  for (int s = 0; s < cfg.n_systems; ++s) {
    const auto system_id = numbered("sys", s);
    const double quality = 1.5 + 3.0 * unit(rng);
    truth.system_quality[system_id] = quality;

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    for (int u = 0; u < n; ++u) {
      const auto utt_id = system_id + "_" + numbered("utt", u);
      const double utt_truth = quality + cfg.noise_std * normal(rng);
      truth.utterance_truth[utt_id] = utt_truth;

      const double duration = cfg.min_duration + (cfg.max_duration - cfg.min_duration) * unit(rng);
      const int frames = std::max(1, static_cast<int>(std::lround(duration * cfg.frames_per_second)));

      // Whitened frames, then shift along the hidden direction so the frame
      // mean projects exactly onto (truth - 3).
      std::vector<double> z(static_cast<std::size_t>(frames) * d);
      for (auto& v : z) v = normal(rng);
      double projected = 0.0;
      for (int r = 0; r < frames; ++r) {
        for (std::size_t c = 0; c < d; ++c) projected += direction[c] * z[r * d + c];
      }
      projected /= frames;
      const double shift = (utt_truth - 3.0) - projected;

      FeatureTensor tensor;
      tensor.utterance_id = utt_id;
      tensor.frames_per_second = static_cast<float>(cfg.frames_per_second);
      tensor.data.resize(frames, cfg.dim);
      for (int r = 0; r < frames; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          const double white = z[r * d + c] + shift * direction[c];
          tensor.data(r, static_cast<Eigen::Index>(c)) = static_cast<float>(offset[c] + scale[c] * white);
        }
      }

      UtteranceRecord rec;
      rec.utterance_id = utt_id;
      rec.system_id = system_id;
      rec.feature_path = (fs::path("features") / (utt_id + ".mosf")).string();
      std::iota(judge_order.begin(), judge_order.end(), 0);
      for (int k = 0; k < cfg.judges_per_utterance; ++k) {
        // Partial Fisher-Yates draw without replacement.
        std::uniform_int_distribution<int> pick(k, cfg.n_judges - 1);
        std::swap(judge_order[static_cast<std::size_t>(k)],
                  judge_order[static_cast<std::size_t>(pick(rng))]);
        const auto& judge = judges[static_cast<std::size_t>(judge_order[static_cast<std::size_t>(k)])];
        const double raw = utt_truth + truth.judge_bias[judge] + cfg.noise_std * normal(rng);
        rec.judge_scores.push_back({judge, std::clamp(raw, 1.0, 5.0)});
      }
      double sum = 0.0;
      for (const auto& j : rec.judge_scores) sum += j.score;
      rec.mean_score = sum / static_cast<double>(rec.judge_scores.size());

      const int slot = order[static_cast<std::size_t>(u)];
      auto& target = slot < n_train ? corpus.train : (slot < n_train + n_valid ? corpus.valid : corpus.test);
      target.manifest.entries.push_back(std::move(rec));
      target.features.push_back(std::move(tensor));
    }
  }
  return corpus;
}

void write_synthetic_corpus(SynthCorpus& corpus, const SynthConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir) {
  const fs::path root(out_dir);
  fs::create_directories(root / "features");
  for (auto* split : {&corpus.train, &corpus.valid, &corpus.test}) {
    for (std::size_t i = 0; i < split->size(); ++i) {
      auto& rec = split->manifest.entries[i];
      const auto path = root / "features" / (rec.utterance_id + ".mosf");
      write_feature_file(split->features[i], path.string());
      rec.feature_path = path.string();
    }
    write_manifest(split->manifest, (root / (std::string(to_string(split->manifest.split)) + ".csv")).string());
  }

  nlohmann::ordered_json meta;
  meta["seed"] = seed;
  meta["config"] = {{"n_systems", cfg.n_systems},
                    {"utterances_per_system", cfg.utterances_per_system},
                    {"dim", cfg.dim},
                    {"frames_per_second", cfg.frames_per_second},
                    {"min_duration", cfg.min_duration},
                    {"max_duration", cfg.max_duration},
                    {"n_judges", cfg.n_judges},
                    {"judges_per_utterance", cfg.judges_per_utterance},
                    {"judge_bias_std", cfg.judge_bias_std},
                    {"noise_std", cfg.noise_std},
                    {"train_fraction", cfg.train_fraction},
                    {"valid_fraction", cfg.valid_fraction}};
  meta["system_quality"] = corpus.truth.system_quality;
  meta["judge_bias"] = corpus.truth.judge_bias;
  meta["planted_weights"] = corpus.truth.weights;
  meta["planted_intercept"] = corpus.truth.intercept;
  meta["counts"] = {{"train", corpus.train.size()}, {"valid", corpus.valid.size()}, {"test", corpus.test.size()}};
  detail::write_whole_file((root / "corpus.json").string(), meta.dump(2) + "\n");
}

}  // namespace mospred
