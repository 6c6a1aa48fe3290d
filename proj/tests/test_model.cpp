#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

#include "mospred/checkpoint.hpp"
#include "mospred/error.hpp"
#include "mospred/model.hpp"

using namespace mospred;
using ad::Matrix;

namespace {

const Ablation kAllAblations[] = {
    {false, false, false}, {true, false, false}, {false, true, false}, {false, false, true}, {true, true, true},
};

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("zero attention vector gives the frame mean") {
    std::mt19937_64 rng(1);
    const Matrix frames = testing::random_matrix(rng, 6, 4);
    const auto [pooled, weights] = attention_pool(frames, Eigen::VectorXd::Zero(4));
    const Eigen::VectorXd mean = frames.colwise().mean().transpose();
    CHECK((pooled - mean).cwiseAbs().maxCoeff() < 1e-15);
    for (int i = 0; i < 6; ++i) CHECK(weights(i) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  }

  TEST_CASE("single frame pools to itself") {
    std::mt19937_64 rng(2);
    const Matrix frame = testing::random_matrix(rng, 1, 5);
    const auto [pooled, weights] = attention_pool(frame, Eigen::VectorXd::Random(5));
    CHECK(weights(0) == 1.0);
    CHECK((pooled.transpose() - frame).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("pooled vector lies inside the convex hull of the frames") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix frames = testing::random_matrix(rng, 1 + trial % 9, 3);
      const Eigen::VectorXd w = testing::random_matrix(rng, 3, 1, 3.0).col(0);
      const auto [pooled, weights] = attention_pool(frames, w);
      CHECK(std::abs(weights.sum() - 1.0) < 1e-12);
      CHECK(weights.minCoeff() >= 0.0);
      for (int c = 0; c < 3; ++c) {
        CHECK(pooled(c) >= frames.col(c).minCoeff() - 1e-12);
        CHECK(pooled(c) <= frames.col(c).maxCoeff() + 1e-12);
      }
      // Permuting frames permutes the weights and leaves the pooled vector unchanged.
      std::vector<int> perm(static_cast<std::size_t>(frames.rows()));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Matrix shuffled(frames.rows(), frames.cols());
      for (Eigen::Index i = 0; i < frames.rows(); ++i) shuffled.row(i) = frames.row(perm[static_cast<std::size_t>(i)]);
      const auto [pooled2, weights2] = attention_pool(shuffled, w);
      CHECK((pooled2 - pooled).cwiseAbs().maxCoeff() < 1e-12);
      for (Eigen::Index i = 0; i < frames.rows(); ++i)
        CHECK(std::abs(weights2(i) - weights(perm[static_cast<std::size_t>(i)])) < 1e-12);
    }
  }

  TEST_CASE("score head clipping anchors") {
    ModelParams p;
    p.head_w = {"head_w", Matrix::Zero(2, 1)};
    p.head_b = {"head_b", Matrix::Zero(1, 1)};
    CHECK(segment_score(p, Eigen::VectorXd::Zero(2), true) == 3.0);
    p.head_b.value(0, 0) = std::atanh(0.5);
    CHECK(segment_score(p, Eigen::VectorXd::Zero(2), true) == doctest::Approx(4.0).epsilon(1e-14));
    p.head_b.value(0, 0) = 1e6;
    const double top = segment_score(p, Eigen::VectorXd::Zero(2), true);
    CHECK(top < 5.0);
    CHECK(top > 5.0 - 1e-12);
    CHECK(segment_score(p, Eigen::VectorXd::Zero(2), false) == 1e6);
  }

  TEST_CASE("one scoring unit: utterance score equals the segment score") {
    std::mt19937_64 rng(4);
    auto m = testing::random_model(rng, 3, 5, 2);
    auto f = testing::random_features(rng, 10, 3, 10.0F);  // exactly 1 s at 10 fps
    const auto out = forward_mean(m, f);
    REQUIRE(out.segment_scores.size() == 1);
    CHECK(out.utterance_score == out.segment_scores[0]);
  }

  TEST_CASE("tape forward matches the plain-loop reference under every ablation") {
    std::mt19937_64 rng(5);
    for (const auto& ab : kAllAblations) {
      for (int trial = 0; trial < 10; ++trial) {
        auto m = testing::random_model(rng, 4, 6, 3, ab);
        m.config.bias_shares_attention = trial % 2 == 1;
        const auto f = testing::random_features(rng, 7 + 3 * trial, 4, 10.0F);
        const auto utt = prepare(m, f);
        const oracle::Reference ref{m};
        const auto out = forward_mean(m, utt);
        const auto units = ref.unit_scores(utt);
        REQUIRE(out.segment_scores.size() == units.size());
        for (std::size_t i = 0; i < units.size(); ++i) CHECK(std::abs(out.segment_scores[i] - units[i]) < 1e-10);
        CHECK(std::abs(out.utterance_score - ref.utterance_score(utt)) < 1e-10);
        for (int k = 0; k < 3; ++k) {
          const auto j = forward_judge(m, f, m.judge_ids[static_cast<std::size_t>(k)]);
          CHECK(std::abs(*j.judge_score - (ref.utterance_score(utt) + ref.delta(utt, k))) < 1e-10);
        }
        if (ab.no_segments) CHECK(units.size() == static_cast<std::size_t>(f.num_frames()));
      }
    }
  }

  TEST_CASE("each ablation flag alters only its own part of the graph") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 20; ++trial) {
      const auto base = testing::random_model(rng, 3, 5, 2);
      const auto f = testing::random_features(rng, 14 + trial, 3, 10.0F);
      const auto utt = prepare(base, f);
      const auto ref = forward_mean(base, utt);
      REQUIRE(ref.segment_scores.size() == utt.segments.size());

      // Frame-level scoring: one unit per frame, each scored from its own projected frame.
      auto frames = base;
      frames.config.ablation.no_segments = true;
      const auto fo = forward_mean(frames, utt);
      REQUIRE(fo.segment_scores.size() == static_cast<std::size_t>(f.num_frames()));
      const Matrix projected = (utt.frames * base.params.proj_w.value).rowwise() +
                               base.params.proj_b.value.row(0);
      for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        const double expect = segment_score(base.params, projected.row(i).transpose(), true);
        CHECK(std::abs(fo.segment_scores[static_cast<std::size_t>(i)] - expect) < 1e-12);
      }

      // Mean pooling: uniform weights whatever the attention vector holds.
      auto mean = base;
      mean.config.ablation.mean_pooling = true;
      const auto mo = forward_mean(mean, utt);
      REQUIRE(mo.attention.size() == utt.segments.size());
      for (std::size_t s = 0; s < utt.segments.size(); ++s) {
        const auto& w = mo.attention[s];
        CHECK((w.array() - 1.0 / static_cast<double>(w.size())).abs().maxCoeff() < 1e-15);
        CHECK(ref.attention[s].size() == w.size());
      }

      // No clipping: units are the raw head output g, and 2 tanh(g) + 3 recovers the clipped run.
      auto raw = base;
      raw.config.ablation.no_clipping = true;
      const auto ro = forward_mean(raw, utt);
      REQUIRE(ro.segment_scores.size() == ref.segment_scores.size());
      for (std::size_t s = 0; s < ro.segment_scores.size(); ++s)
        CHECK(std::abs(2.0 * std::tanh(ro.segment_scores[s]) + 3.0 - ref.segment_scores[s]) < 1e-12);
      CHECK(std::abs(ro.utterance_score -
                     std::accumulate(ro.segment_scores.begin(), ro.segment_scores.end(), 0.0) /
                         static_cast<double>(ro.segment_scores.size())) < 1e-12);
    }
  }

  TEST_CASE("zero embedding and zero bias head give a zero offset") {
    std::mt19937_64 rng(6);
    auto m = testing::random_model(rng, 3, 4, 2);
    m.params.judge_table.value.setZero();
    m.params.bias_head_w.value.setZero();
    m.params.bias_head_b.value.setZero();
    const auto f = testing::random_features(rng, 25, 3);
    const auto j = forward_judge(m, f, "j1");
    CHECK(*j.judge_score == j.utterance_score);
  }

  TEST_CASE("judge offsets depend only on their own embedding row") {
    std::mt19937_64 rng(7);
    auto m = testing::random_model(rng, 3, 4, 3);
    const auto f = testing::random_features(rng, 25, 3);
    const double before = *forward_judge(m, f, "j0").judge_score;
    m.params.judge_table.value.row(2).setRandom();
    CHECK(*forward_judge(m, f, "j0").judge_score == before);
    CHECK(*forward_judge(m, f, "j2").judge_score != before);
  }

  TEST_CASE("unknown judge") {
    std::mt19937_64 rng(8);
    auto m = testing::random_model(rng, 3, 4, 2);
    CHECK_THROWS_AS(forward_judge(m, testing::random_features(rng, 5, 3), "nobody"), LookupError);
    CHECK_THROWS_AS(m.judge_index("nobody"), LookupError);
  }

  TEST_CASE("inference never touches the bias network") {
    std::mt19937_64 rng(9);
    auto m = testing::random_model(rng, 3, 4, 2);
    const auto f = testing::random_features(rng, 30, 3);
    const double y = predict(m, f);
    CHECK(y == forward_mean(m, f).utterance_score);
    m.params.judge_table.value.setConstant(1e3);
    m.params.bias_head_w.value.setConstant(-7);
    m.params.bias_attn_w.value.setConstant(2);
    CHECK(predict(m, f) == y);
  }

  TEST_CASE("clipped outputs stay strictly inside (1, 5)") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
      auto m = testing::random_model(rng, 3, 4, 1, {}, 20.0);
      const auto out = forward_mean(m, testing::random_features(rng, 12, 3));
      for (double s : out.segment_scores) {
        CHECK(s > 1.0);
        CHECK(s < 5.0);
      }
    }
  }

  TEST_CASE("initialization") {
    ModelConfig cfg;
    cfg.input_dim = 16;
    cfg.hidden_dim = 64;
    auto m = init_model(cfg, FeatureStats::identity(16), {"a", "b"}, 3);
    CHECK(m.params.attn_w.value.isZero());
    CHECK(m.params.bias_attn_w.value.isZero());
    CHECK(m.params.head_b.value(0, 0) == 0.0);
    CHECK(m.params.proj_w.value.cwiseAbs().maxCoeff() <= 0.25);
    CHECK(m.params.judge_table.value.rows() == 2);
    CHECK(m.params.judge_table.value.cols() == 64);
    cfg.ablation.no_clipping = true;
    CHECK(init_model(cfg, FeatureStats::identity(16), {}, 3).params.head_b.value(0, 0) == 3.0);
    CHECK(init_model(cfg, FeatureStats::identity(16), {}, 3).params.proj_w.value ==
          init_model(cfg, FeatureStats::identity(16), {}, 3).params.proj_w.value);
    CHECK_THROWS_AS(init_model(cfg, FeatureStats::identity(15), {}, 3), ShapeError);
  }

  TEST_CASE("dimension mismatch") {
    std::mt19937_64 rng(11);
    auto m = testing::random_model(rng, 3, 4, 1);
    CHECK_THROWS_AS(predict(m, testing::random_features(rng, 5, 4)), ShapeError);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip preserves configuration, statistics and f32 parameters") {
    std::mt19937_64 rng(12);
    Ablation ab;
    ab.mean_pooling = true;
    auto m = testing::random_model(rng, 3, 5, 4, ab);
    m.config.bias_shares_attention = true;
    m.config.segments = {0.8, 0.3};
    m.stats.mean = {1.0, 2.0, 3.0};
    m.stats.std = {0.5, 1.0, 2.0};
    const auto bytes = encode_checkpoint(m);
    const auto back = decode_checkpoint(bytes);
    CHECK(back.config == m.config);
    CHECK(back.judge_ids == m.judge_ids);
    CHECK(back.stats.mean == m.stats.mean);
    const auto a = m.params.all();
    const auto b = back.params.all();
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i]->name == b[i]->name);
      CHECK((a[i]->value.cast<float>().cast<double>() - b[i]->value).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(encode_checkpoint(back) == bytes);

    testing::TempDir dir("ckpt");
    save_checkpoint(m, dir.file("sub/m.mosc"));
    CHECK(encode_checkpoint(load_checkpoint(dir.file("sub/m.mosc"))) == bytes);
    const auto f = testing::random_features(rng, 20, 3);
    CHECK(std::abs(predict(back, f) - predict(m, f)) < 1e-5);
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    std::mt19937_64 rng(13);
    const auto bytes = encode_checkpoint(testing::random_model(rng, 2, 3, 1));
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(bytes + "z"), FormatError);
    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/missing.mosc"), IoError);
  }
}
