#include "mospred/checkpoint.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "mospred/error.hpp"

namespace mospred {

namespace {

void write_tensor(detail::ByteWriter& out, const ad::Parameter& p) {
  out.str(p.name);
  out.u32(static_cast<std::uint32_t>(p.value.rows()));
  out.u32(static_cast<std::uint32_t>(p.value.cols()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) out.f32(static_cast<float>(p.value.data()[i]));
}

void read_tensor(detail::ByteReader& in, ad::Parameter& p, Eigen::Index rows, Eigen::Index cols) {
  const auto at = in.offset();
  const auto name = in.str();
  if (name != p.name) in.fail("expected tensor '" + p.name + "', found '" + name + "'", at);
  const auto r = in.u32();
  const auto c = in.u32();
  if (r != rows || c != cols) {
    in.fail("tensor '" + name + "' has shape " + std::to_string(r) + "x" + std::to_string(c) +
                ", expected " + std::to_string(rows) + "x" + std::to_string(cols),
            at);
  }
  p.value.resize(rows, cols);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    const auto vat = in.offset();
    const float v = in.f32();
    if (!std::isfinite(v)) in.fail("non-finite value in tensor '" + name + "'", vat);
    p.value.data()[i] = v;
  }
  p.zero_grad();
}

}  // namespace

std::string encode_checkpoint(const MosModel& model) {
  const auto& cfg = model.config;
  detail::ByteWriter out;
  out.bytes(kCheckpointMagic);
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(cfg.input_dim));
  out.u32(static_cast<std::uint32_t>(cfg.hidden_dim));
  out.f64(cfg.segments.seg_seconds);
  out.f64(cfg.segments.stride_seconds);
  std::uint8_t flags = 0;
  if (cfg.ablation.no_segments) flags |= 1U;
  if (cfg.ablation.mean_pooling) flags |= 2U;
  if (cfg.ablation.no_clipping) flags |= 4U;
  if (cfg.bias_shares_attention) flags |= 8U;
  out.u8(flags);

  out.u32(static_cast<std::uint32_t>(model.stats.dim()));
  for (double m : model.stats.mean) out.f32(static_cast<float>(m));
  for (double s : model.stats.std) out.f32(static_cast<float>(s));

  out.u32(static_cast<std::uint32_t>(model.judge_ids.size()));
  for (const auto& j : model.judge_ids) out.str(j);

  const auto params = model.params.all();
  out.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) write_tensor(out, *p);
  return out.take();
}

MosModel decode_checkpoint(std::string_view bytes) {
  detail::ByteReader in(bytes, "checkpoint");
  if (in.bytes(4) != kCheckpointMagic) in.fail("bad magic, expected \"MOSC\"", 0);
  const auto version = in.u32();
  if (version != kCheckpointVersion) in.fail("unsupported version " + std::to_string(version), 4);

  MosModel model;
  auto& cfg = model.config;
  cfg.input_dim = static_cast<int>(in.u32());
  cfg.hidden_dim = static_cast<int>(in.u32());
  if (cfg.input_dim < 1 || cfg.hidden_dim < 1) in.fail("model dimensions must be positive", 8);
  cfg.segments.seg_seconds = in.f64();
  cfg.segments.stride_seconds = in.f64();
  const auto flags_at = in.offset();
  const auto flags = in.u8();
  if (flags > 15U) in.fail("unknown flag bits", flags_at);
  cfg.ablation.no_segments = (flags & 1U) != 0;
  cfg.ablation.mean_pooling = (flags & 2U) != 0;
  cfg.ablation.no_clipping = (flags & 4U) != 0;
  cfg.bias_shares_attention = (flags & 8U) != 0;

  const auto dim_at = in.offset();
  const auto d = in.u32();
  if (static_cast<int>(d) != cfg.input_dim) in.fail("statistics dimension does not match input_dim", dim_at);
  model.stats.mean.resize(d);
  model.stats.std.resize(d);
  for (auto& m : model.stats.mean) m = in.f32();
  for (auto& s : model.stats.std) {
    const auto at = in.offset();
    s = in.f32();
    if (!(s > 0.0)) in.fail("standard deviation must be positive", at);
  }

  const auto n_judges = in.u32();
  for (std::uint32_t i = 0; i < n_judges; ++i) model.judge_ids.push_back(in.str());

  const auto count_at = in.offset();
  const auto n_tensors = in.u32();
  auto params = model.params.all();
  if (n_tensors != params.size()) in.fail("expected " + std::to_string(params.size()) + " tensors", count_at);

  const Eigen::Index h = cfg.hidden_dim;
  const Eigen::Index k = n_judges;
  const std::pair<const char*, std::pair<Eigen::Index, Eigen::Index>> layout[] = {
      {"proj_w", {cfg.input_dim, h}}, {"proj_b", {1, h}},      {"attn_w", {h, 1}},
      {"head_w", {h, 1}},             {"head_b", {1, 1}},      {"judge_table", {k, h}},
      {"bias_attn_w", {h, 1}},        {"bias_head_w", {h, 1}}, {"bias_head_b", {1, 1}}};
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->name = layout[i].first;
    read_tensor(in, *params[i], layout[i].second.first, layout[i].second.second);
  }
  if (in.remaining() != 0) in.fail("unexpected trailing bytes", in.offset());
  return model;
}

void save_checkpoint(const MosModel& model, const std::string& path) {
  detail::write_whole_file(path, encode_checkpoint(model));
}

MosModel load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_whole_file(path)); }

}  // namespace mospred
