#include "mospred/segmentation.hpp"

#include <cmath>

#include "mospred/error.hpp"

namespace mospred {

std::vector<FrameRange> segment_frames(int num_frames, double frames_per_second,
                                       double seg_seconds, double stride_seconds) {
  if (!(frames_per_second > 0.0) || !std::isfinite(frames_per_second)) {
    throw ArgumentError("frames_per_second must be positive, got " + std::to_string(frames_per_second));
  }
  if (!(seg_seconds > 0.0)) {
    throw ArgumentError("segment duration must be positive");
  }
  if (!(stride_seconds > 0.0) || stride_seconds > seg_seconds) {
    throw ArgumentError("stride must satisfy 0 < stride <= segment duration");
  }
  if (num_frames < 1) {
    throw ArgumentError("num_frames must be at least 1");
  }

  const auto seg_frames = static_cast<int>(std::lround(seg_seconds * frames_per_second));
  const auto stride_frames = static_cast<int>(std::lround(stride_seconds * frames_per_second));
  if (seg_frames < 1 || stride_frames < 1) {
    throw ArgumentError("segment or stride rounds to zero frames at this frame rate");
  }

  if (num_frames <= seg_frames) {
    return {FrameRange{0, num_frames}};
  }
  const int count = (num_frames - seg_frames) / stride_frames + 1;
  std::vector<FrameRange> ranges;
  ranges.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ranges.push_back({i * stride_frames, i * stride_frames + seg_frames});
  }
  return ranges;
}

std::vector<SegmentView> segment_views(const std::string& utterance_id, int num_frames,
                                       double frames_per_second, const SegmentConfig& cfg) {
  std::vector<SegmentView> views;
  int index = 0;
  for (const auto& r : segment_frames(num_frames, frames_per_second, cfg)) {
    views.push_back({utterance_id, r, index++});
  }
  return views;
}

}  // namespace mospred
