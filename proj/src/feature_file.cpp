#include "mospred/feature_file.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "mospred/error.hpp"

namespace mospred {

namespace detail {

std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_whole_file(const std::string& path, std::string_view contents) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

}  // namespace detail

namespace {

FeatureHeader parse_header(detail::ByteReader& in) {
  if (in.bytes(4) != kFeatureMagic) {
    in.fail("bad magic, expected \"MOSF\"", 0);
  }
  const auto version = in.u32();
  if (version != kFeatureVersion) {
    in.fail("unsupported version " + std::to_string(version), 4);
  }
  FeatureHeader header;
  header.num_frames = in.u32();
  if (header.num_frames == 0) {
    in.fail("num_frames must be at least 1", 8);
  }
  header.dim = in.u32();
  if (header.dim == 0) {
    in.fail("feature dimension must be at least 1", 12);
  }
  header.frames_per_second = in.f32();
  if (!std::isfinite(header.frames_per_second) || header.frames_per_second <= 0.0F) {
    in.fail("frames_per_second must be finite and positive", 16);
  }
  return header;
}

std::uint64_t payload_bytes(const FeatureHeader& h) {
  return static_cast<std::uint64_t>(h.num_frames) * h.dim * 4U;
}

}  // namespace

std::string encode_feature_tensor(const FeatureTensor& tensor) {
  const auto frames = tensor.num_frames();
  const auto dim = tensor.dim();
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (frames < 1 || dim < 1) {
    throw ArgumentError("feature tensor must have at least one frame and one dimension");
  }
  if (static_cast<std::uint64_t>(frames) > kMax || static_cast<std::uint64_t>(dim) > kMax) {
    throw ArgumentError("feature tensor dimensions exceed 32-bit range");
  }
  if (!std::isfinite(tensor.frames_per_second) || tensor.frames_per_second <= 0.0F) {
    throw ArgumentError("frames_per_second must be finite and positive");
  }
  if (!tensor.data.allFinite()) {
    throw ArgumentError("feature tensor '" + tensor.utterance_id + "' contains non-finite values");
  }

  detail::ByteWriter out;
  out.bytes(kFeatureMagic);
  out.u32(kFeatureVersion);
  out.u32(static_cast<std::uint32_t>(frames));
  out.u32(static_cast<std::uint32_t>(dim));
  out.f32(tensor.frames_per_second);
  for (Eigen::Index r = 0; r < frames; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      out.f32(tensor.data(r, c));
    }
  }
  return out.take();
}

FeatureTensor decode_feature_tensor(std::string_view bytes, std::string utterance_id) {
  detail::ByteReader in(bytes, "feature file" + (utterance_id.empty() ? "" : " '" + utterance_id + "'"));
  const auto header = parse_header(in);
  const auto expected = payload_bytes(header);
  if (in.remaining() < expected) {
    in.fail("truncated payload, expected " + std::to_string(expected) + " bytes but found " +
                std::to_string(in.remaining()),
            bytes.size());
  }
  if (in.remaining() > expected) {
    in.fail("unexpected trailing bytes after payload", kFeatureHeaderBytes + expected);
  }

  FeatureTensor tensor;
  tensor.frames_per_second = header.frames_per_second;
  tensor.utterance_id = std::move(utterance_id);
  tensor.data.resize(header.num_frames, header.dim);
  for (std::uint32_t r = 0; r < header.num_frames; ++r) {
    for (std::uint32_t c = 0; c < header.dim; ++c) {
      const auto at = in.offset();
      const float v = in.f32();
      if (!std::isfinite(v)) {
        in.fail("non-finite value at frame " + std::to_string(r) + ", dim " + std::to_string(c), at);
      }
      tensor.data(r, c) = v;
    }
  }
  return tensor;
}

void write_feature_file(const FeatureTensor& tensor, const std::string& path) {
  detail::write_whole_file(path, encode_feature_tensor(tensor));
}

FeatureTensor read_feature_file(const std::string& path) {
  const auto bytes = detail::read_whole_file(path);
  return decode_feature_tensor(bytes, std::filesystem::path(path).stem().string());
}

FeatureHeader read_feature_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  const auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  std::string head(std::min<std::uint64_t>(size, kFeatureHeaderBytes), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));

  detail::ByteReader reader(head, "feature file '" + path + "'");
  const auto header = parse_header(reader);
  const auto expected = kFeatureHeaderBytes + payload_bytes(header);
  if (size != expected) {
    reader.fail("file size " + std::to_string(size) + " does not match header (expected " +
                    std::to_string(expected) + ")",
                std::min(size, expected));
  }
  return header;
}

}  // namespace mospred
