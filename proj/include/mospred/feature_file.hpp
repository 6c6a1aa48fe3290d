#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace mospred {

/// Frame-level representations of one utterance, one row per frame.
using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureTensor {
  FrameMatrix data;
  float frames_per_second = 0.0F;
  std::string utterance_id;

  Eigen::Index num_frames() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

/// MOSF container layout (all little-endian):
///   "MOSF" | u32 version=1 | u32 num_frames | u32 d | f32 frames_per_second |
///   num_frames * d f32 values, row-major by frame.
inline constexpr std::string_view kFeatureMagic = "MOSF";
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 20;

struct FeatureHeader {
  std::uint32_t num_frames = 0;
  std::uint32_t dim = 0;
  float frames_per_second = 0.0F;
};

std::string encode_feature_tensor(const FeatureTensor& tensor);

/// Strict decoder: rejects bad magic/version, zero sizes, non-positive frame
/// rate, truncation, trailing bytes and non-finite values.
FeatureTensor decode_feature_tensor(std::string_view bytes, std::string utterance_id = {});

void write_feature_file(const FeatureTensor& tensor, const std::string& path);

/// Reads and validates a feature file. The utterance id defaults to the file stem.
FeatureTensor read_feature_file(const std::string& path);

/// Reads only the 20-byte header, checking that the payload size matches.
FeatureHeader read_feature_header(const std::string& path);

}  // namespace mospred
