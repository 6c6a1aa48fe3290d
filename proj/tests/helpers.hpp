#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "mospred/model.hpp"

namespace testing {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mospred_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline mospred::ad::Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  mospred::ad::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Model with every parameter drawn at random (attention included).
inline mospred::MosModel random_model(std::mt19937_64& rng, int d, int h, int judges,
                                      mospred::Ablation ablation = {}, double scale = 0.5) {
  mospred::ModelConfig cfg;
  cfg.input_dim = d;
  cfg.hidden_dim = h;
  cfg.ablation = ablation;
  std::vector<std::string> ids;
  for (int k = 0; k < judges; ++k) ids.push_back("j" + std::to_string(k));
  auto model = mospred::init_model(cfg, mospred::FeatureStats::identity(d), ids, rng());
  for (auto* p : model.params.all()) p->value = random_matrix(rng, p->value.rows(), p->value.cols(), scale);
  return model;
}

inline mospred::FeatureTensor random_features(std::mt19937_64& rng, int frames, int d, float fps = 10.0F) {
  std::normal_distribution<float> n(0.0F, 1.0F);
  mospred::FeatureTensor t;
  t.frames_per_second = fps;
  t.utterance_id = "u";
  t.data.resize(frames, d);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = n(rng);
  return t;
}

}  // namespace testing
