#pragma once

#include <string>
#include <vector>

namespace mospred {

/// Half-open frame interval [start, end).
struct FrameRange {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  bool operator==(const FrameRange&) const = default;
};

struct SegmentView {
  std::string parent;
  FrameRange frames;
  int index_in_utterance = 0;
};

/// Segment duration and stride in seconds.
struct SegmentConfig {
  double seg_seconds = 1.0;
  double stride_seconds = 0.5;

  bool operator==(const SegmentConfig&) const = default;
};

/// Fixed-length windows over a frame sequence. Incomplete tail windows are
/// dropped; an utterance no longer than one window becomes a single segment
/// spanning all of its frames.
std::vector<FrameRange> segment_frames(int num_frames, double frames_per_second,
                                       double seg_seconds, double stride_seconds);

inline std::vector<FrameRange> segment_frames(int num_frames, double frames_per_second,
                                              const SegmentConfig& cfg) {
  return segment_frames(num_frames, frames_per_second, cfg.seg_seconds, cfg.stride_seconds);
}

std::vector<SegmentView> segment_views(const std::string& utterance_id, int num_frames,
                                       double frames_per_second, const SegmentConfig& cfg);

}  // namespace mospred
