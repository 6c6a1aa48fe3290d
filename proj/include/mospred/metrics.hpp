#pragma once

#include <span>
#include <string>
#include <vector>

namespace mospred::metrics {

/// Mean of squared residuals. Throws ArgumentError on empty or unequal input.
double mse(std::span<const double> pred, std::span<const double> truth);

/// Pearson product-moment correlation. Throws UndefinedCorrelation when either
/// input is constant, ArgumentError when fewer than two pairs are given.
double lcc(std::span<const double> pred, std::span<const double> truth);

/// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Spearman correlation: Pearson correlation of fractional ranks.
double srcc(std::span<const double> pred, std::span<const double> truth);

struct ScoredUtterance {
  std::string utterance_id;
  std::string system_id;
  double predicted = 0.0;
  double truth = 0.0;
};

struct SystemMean {
  std::string system_id;
  double predicted_mean = 0.0;
  double true_mean = 0.0;
  std::size_t count = 0;
};

/// Per-system means, ordered by system id. Within a system the sums run in
/// utterance-id order, so the result does not depend on input order.
std::vector<SystemMean> system_aggregate(std::span<const ScoredUtterance> records);

enum class Level { utterance, system };

struct LevelReport {
  Level level = Level::utterance;
  double mse = 0.0;
  /// NaN when undefined; a line is appended to `warnings`.
  double lcc = 0.0;
  double srcc = 0.0;
  std::size_t n = 0;
  std::vector<SystemMean> per_system;  // system level only
  std::vector<std::string> warnings;
};

struct EvalReport {
  LevelReport utterance;
  LevelReport system;
};

LevelReport level_report(Level level, std::span<const double> pred, std::span<const double> truth);
EvalReport evaluate(std::span<const ScoredUtterance> records);

}  // namespace mospred::metrics
