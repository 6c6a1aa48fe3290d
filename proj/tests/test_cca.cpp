#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "mospred/cca.hpp"
#include "mospred/error.hpp"
#include "mospred/synth.hpp"

using namespace mospred;
using namespace mospred::cca;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return static_cast<double>(oracle::ld_pearson(std::vector<double>(a.data(), a.data() + a.size()),
                                                std::vector<double>(b.data(), b.data() + b.size())));
}

}  // namespace

TEST_SUITE("cca") {
  TEST_CASE("realizable linear target gives unit correlation") {
    std::mt19937_64 rng(1);
    const auto x = gaussian(rng, 200, 6);
    const Eigen::VectorXd w = gaussian(rng, 6, 1).col(0);
    const Eigen::VectorXd y = (x * w).array() + 2.0;
    const auto m = cca_fit(x, y, 1e-10);
    CHECK(std::abs(m.train_correlation - 1.0) < 1e-9);
    CHECK((m.weights - w).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(m.intercept - 2.0) < 1e-6);
    CHECK(cca_apply(m, x, y) == doctest::Approx(m.train_correlation).epsilon(1e-14));
  }

  TEST_CASE("independent noise gives near-zero correlation") {
    std::mt19937_64 rng(2);
    const auto x = gaussian(rng, 2000, 8);
    const Eigen::VectorXd y = gaussian(rng, 2000, 1).col(0);
    const auto m = cca_fit(x, y, kDefaultLambda);
    // Held-out data from the same distribution.
    const auto x2 = gaussian(rng, 2000, 8);
    const Eigen::VectorXd y2 = gaussian(rng, 2000, 1).col(0);
    CHECK(std::abs(cca_apply(m, x2, y2)) < 0.1);
    CHECK(m.train_correlation < 0.15);
  }

  TEST_CASE("fitted map beats random linear maps on the training data") {
    std::mt19937_64 rng(3);
    const auto x = gaussian(rng, 100, 5);
    std::normal_distribution<double> noise(0, 1);
    Eigen::VectorXd y = x.col(0) - 0.5 * x.col(3);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise(rng);
    const auto m = cca_fit(x, y, 0.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::VectorXd v = gaussian(rng, 5, 1).col(0);
      CHECK(std::abs(pearson(x * v, y)) <= m.train_correlation + 1e-12);
    }
  }

  TEST_CASE("correlation is invariant to affine rescaling of the targets") {
    std::mt19937_64 rng(4);
    const auto x = gaussian(rng, 80, 4);
    const Eigen::VectorXd y = x.col(1).array().sin() + x.col(2).array();
    const auto a = cca_fit(x, y, 0.0);
    const auto b = cca_fit(x, (3.0 * y).array() + 5.0, 0.0);
    CHECK(std::abs(a.train_correlation - b.train_correlation) < 1e-10);
  }

  TEST_CASE("correlation is invariant to affine rescaling of an input coordinate") {
    std::mt19937_64 rng(44);
    const auto x = gaussian(rng, 90, 5);
    const Eigen::VectorXd y = x.col(0) - x.col(4) + gaussian(rng, 90, 1).col(0);
    const double base = cca_fit(x, y, 0.0).train_correlation;
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd xs = x;
      const auto col = trial % 5;
      double a = u(rng);
      if (std::abs(a) < 0.1) a = 0.1;
      xs.col(col) = (a * xs.col(col)).array() + u(rng);
      CHECK(std::abs(cca_fit(xs, y, 0.0).train_correlation - base) < 1e-10);
    }
  }

  TEST_CASE("utterance embedding is the frame mean") {
    FeatureTensor one;
    one.data.resize(1, 3);
    one.data << 1.5F, -2.0F, 4.0F;
    CHECK(utterance_embed(one) == Eigen::Vector3d(1.5, -2.0, 4.0));

    FeatureTensor sym;
    sym.data.resize(2, 3);
    sym.data << 0.25F, -3.0F, 7.0F, -0.25F, 3.0F, -7.0F;
    CHECK(utterance_embed(sym) == Eigen::Vector3d::Zero());

    FeatureTensor t;
    t.data.resize(5, 3);
    t.data << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15;
    CHECK(utterance_embed(t) == Eigen::Vector3d(7, 8, 9));
    CHECK_THROWS_AS(utterance_embed(FeatureTensor{}), ArgumentError);
  }

  TEST_CASE("apply on the training set equals the training correlation") {
    std::mt19937_64 rng(5);
    const auto x = gaussian(rng, 60, 3);
    const Eigen::VectorXd y = x.col(0) + gaussian(rng, 60, 1).col(0);
    const auto m = cca_fit(x, y, 1e-3);
    CHECK(cca_apply(m, x, y) == doctest::Approx(m.train_correlation).epsilon(1e-14));
  }

  TEST_CASE("large ridge drives the weights to zero") {
    std::mt19937_64 rng(6);
    const auto x = gaussian(rng, 100, 4);
    const Eigen::VectorXd y = x.col(0) + gaussian(rng, 100, 1).col(0);
    double prev = cca_fit(x, y, 1e-6).weights.norm();
    for (double lambda : {1e-2, 1.0, 1e2, 1e4, 1e8}) {
      const double norm = cca_fit(x, y, lambda).weights.norm();
      CHECK(norm < prev);
      prev = norm;
    }
    CHECK(prev < 1e-7);
  }

  TEST_CASE("held-out correlation on a noise-free planted corpus") {
    SynthConfig c;
    c.n_systems = 6;
    c.utterances_per_system = 30;
    c.dim = 8;
    c.frames_per_second = 20;
    c.noise_std = 0.0;
    c.judge_bias_std = 0.0;
    const auto corpus = generate_synthetic_corpus(c, 5);
    auto targets = [](const LoadedSplit& s) {
      Eigen::VectorXd y(static_cast<Eigen::Index>(s.size()));
      for (std::size_t i = 0; i < s.size(); ++i) y(static_cast<Eigen::Index>(i)) = s.manifest.entries[i].mean_score;
      return y;
    };
    const auto m = cca_fit(embed_split(corpus.train), targets(corpus.train), kDefaultLambda);
    CHECK(cca_apply(m, embed_split(corpus.test), targets(corpus.test)) >= 0.99);
    std::vector<std::string> systems;
    for (const auto& e : corpus.test.manifest.entries) systems.push_back(e.system_id);
    CHECK(cca_apply_system(m, embed_split(corpus.test), targets(corpus.test), systems) >= 0.99);
  }

  TEST_CASE("singular systems throw and the fallback raises lambda") {
    std::mt19937_64 rng(7);
    Eigen::MatrixXd x = gaussian(rng, 50, 3);
    x.col(2) = x.col(0) * 2.0;  // rank deficient
    const Eigen::VectorXd y = x.col(0);
    CHECK_THROWS_AS(cca_fit(x, y, 0.0), NumericError);
    try {
      cca_fit(x, y, 0.0);
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
    std::vector<std::string> warnings;
    const auto m = cca_fit_with_fallback(x, y, 0.0, &warnings);
    CHECK_FALSE(warnings.empty());
    CHECK(m.ridge_lambda > 0.0);
    CHECK(m.train_correlation > 0.99);

    CHECK_THROWS_AS(cca_fit(Eigen::MatrixXd::Ones(5, 2), Eigen::VectorXd::Ones(5), 1e-6), NumericError);
    CHECK_THROWS_AS(cca_fit(x, Eigen::VectorXd::Ones(3), 1e-6), ShapeError);
    CHECK_THROWS_AS(cca_fit(x, y, -1.0), ArgumentError);
  }
}
