#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mospred/feature_file.hpp"
#include "mospred/manifest.hpp"

namespace mospred {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kStdFloor = 1e-8;

/// Per-dimension frame statistics of the training split.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;

  int dim() const { return static_cast<int>(mean.size()); }

  /// (x - mean) / std per frame, in double precision.
  MatrixRM apply(const FrameMatrix& frames) const;

  /// mean 0 / std 1, i.e. a no-op transform.
  static FeatureStats identity(int dim);
};

/// Population mean/std over every frame of every tensor; std floored at kStdFloor.
FeatureStats standardize_features(std::span<const FeatureTensor> tensors);

/// Same, restricted to a train-split dataset.
FeatureStats standardize_features(const LoadedSplit& train);

}  // namespace mospred
