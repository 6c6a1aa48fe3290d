#pragma once

#include <string>
#include <string_view>

#include "mospred/model.hpp"

namespace mospred {

/// Binary checkpoint, little-endian:
///   "MOSC" | u32 version=1 |
///   u32 input_dim | u32 hidden_dim | f64 seg_seconds | f64 stride_seconds |
///   u8 flags (bit0 no_segments, bit1 mean_pooling, bit2 no_clipping, bit3 bias_shares_attention) |
///   u32 d | f32 mean[d] | f32 std[d] |
///   u32 n_judges | n_judges x (u32 len, bytes) |
///   u32 n_tensors | n_tensors x (u32 name_len, name, u32 rows, u32 cols, f32 values row-major)
inline constexpr std::string_view kCheckpointMagic = "MOSC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const MosModel& model);
MosModel decode_checkpoint(std::string_view bytes);

void save_checkpoint(const MosModel& model, const std::string& path);
MosModel load_checkpoint(const std::string& path);

}  // namespace mospred
