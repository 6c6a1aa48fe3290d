#include "mospred/standardize.hpp"

#include <algorithm>
#include <cmath>

#include "mospred/error.hpp"

namespace mospred {

MatrixRM FeatureStats::apply(const FrameMatrix& frames) const {
  if (frames.cols() != dim()) {
    throw ShapeError("feature dimension " + std::to_string(frames.cols()) +
                     " does not match standardization dimension " + std::to_string(dim()));
  }
  MatrixRM out = frames.cast<double>();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double m = mean[static_cast<std::size_t>(c)];
    const double inv = 1.0 / std[static_cast<std::size_t>(c)];
    out.col(c) = (out.col(c).array() - m) * inv;
  }
  return out;
}

FeatureStats FeatureStats::identity(int dim) {
  return {std::vector<double>(static_cast<std::size_t>(dim), 0.0),
          std::vector<double>(static_cast<std::size_t>(dim), 1.0)};
}

FeatureStats standardize_features(std::span<const FeatureTensor> tensors) {
  if (tensors.empty()) {
    throw ArgumentError("cannot compute feature statistics of an empty dataset");
  }
  const auto dim = tensors.front().dim();
  std::vector<double> sum(static_cast<std::size_t>(dim), 0.0);
  double count = 0.0;
  for (const auto& t : tensors) {
    if (t.dim() != dim) {
      throw ShapeError("inconsistent feature dimensions in dataset");
    }
    for (Eigen::Index r = 0; r < t.num_frames(); ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) sum[static_cast<std::size_t>(c)] += t.data(r, c);
    }
    count += static_cast<double>(t.num_frames());
  }
  if (count == 0.0) {
    throw ArgumentError("cannot compute feature statistics without frames");
  }

  FeatureStats stats;
  stats.mean.resize(sum.size());
  for (std::size_t c = 0; c < sum.size(); ++c) stats.mean[c] = sum[c] / count;

  // Two-pass variance.
  std::vector<double> sq(sum.size(), 0.0);
  for (const auto& t : tensors) {
    for (Eigen::Index r = 0; r < t.num_frames(); ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) {
        const double d = t.data(r, c) - stats.mean[static_cast<std::size_t>(c)];
        sq[static_cast<std::size_t>(c)] += d * d;
      }
    }
  }
  stats.std.resize(sum.size());
  for (std::size_t c = 0; c < sum.size(); ++c) {
    stats.std[c] = std::max(std::sqrt(sq[c] / count), kStdFloor);
  }
  return stats;
}

FeatureStats standardize_features(const LoadedSplit& train) {
  if (train.manifest.split != Split::train) {
    throw ArgumentError("feature statistics must come from the train split, got '" +
                        std::string(to_string(train.manifest.split)) + "'");
  }
  return standardize_features(std::span<const FeatureTensor>(train.features));
}

}  // namespace mospred
