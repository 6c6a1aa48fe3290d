#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mospred/feature_file.hpp"

namespace mospred {

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct JudgeScore {
  std::string judge_id;
  double score = 0.0;
};

/// One manifest entry. `judge_scores` may be empty for mean-only corpora, in
/// which case `mean_score` is taken verbatim from the manifest.
struct UtteranceRecord {
  std::string utterance_id;
  std::string feature_path;
  std::string system_id;
  std::vector<JudgeScore> judge_scores;
  double mean_score = 0.0;
};

struct DatasetManifest {
  std::vector<UtteranceRecord> entries;
  int feature_dim = 0;
  Split split = Split::train;

  std::vector<std::string> system_ids() const;
  std::vector<std::string> judge_ids() const;
};

/// Manifest CSV header: utterance_id,feature_path,system_id,judge_id,score.
/// One row per (utterance, judge); an empty judge_id marks a mean-only row.
/// Relative feature paths resolve against the manifest's directory.
DatasetManifest parse_manifest_csv(std::string_view text, const std::string& base_dir,
                                   Split split);

/// Loads a manifest and validates that every feature file exists and shares
/// one dimension.
DatasetManifest load_manifest(const std::string& path, Split split, bool check_features = true);

/// Writes feature paths relative to `base_dir` when they lie beneath it.
std::string format_manifest_csv(const DatasetManifest& manifest, const std::string& base_dir);
void write_manifest(const DatasetManifest& manifest, const std::string& path);

/// A manifest with its feature tensors resident in memory.
struct LoadedSplit {
  DatasetManifest manifest;
  std::vector<FeatureTensor> features;

  std::size_t size() const { return features.size(); }
};

LoadedSplit load_split(const DatasetManifest& manifest);
LoadedSplit load_split(const std::string& manifest_path, Split split);

}  // namespace mospred
