#include "mospred/cca.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "mospred/error.hpp"
#include "mospred/metrics.hpp"

namespace mospred::cca {

namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return metrics::lcc(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                      std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

}  // namespace

Eigen::VectorXd utterance_embed(const FeatureTensor& features) {
  if (features.num_frames() < 1) throw ArgumentError("utterance_embed: no frames");
  return features.data.cast<double>().colwise().mean().transpose();
}

Eigen::MatrixXd embed_split(const LoadedSplit& split) {
  if (split.features.empty()) throw ArgumentError("embed_split: empty split");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(split.size()), split.features.front().dim());
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split.features[i].dim() != x.cols()) throw ShapeError("embed_split: inconsistent feature dimensions");
    x.row(static_cast<Eigen::Index>(i)) = utterance_embed(split.features[i]).transpose();
  }
  return x;
}

CcaModel cca_fit(const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores, double lambda) {
  const auto n = embeddings.rows();
  const auto d = embeddings.cols();
  if (n != scores.size()) {
    throw ShapeError("cca_fit: " + std::to_string(n) + " embeddings but " + std::to_string(scores.size()) + " scores");
  }
  if (n < 2 || d < 1) throw ArgumentError("cca_fit: need at least two samples and one feature");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("cca_fit: lambda must be finite and >= 0");

  const Eigen::RowVectorXd x_mean = embeddings.colwise().mean();
  const double y_mean = scores.mean();
  const Eigen::MatrixXd xc = embeddings.rowwise() - x_mean;
  const Eigen::VectorXd yc = scores.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  const double scale = gram.diagonal().mean();
  if (!(scale > 0.0)) {
    throw NumericError("cca_fit: embeddings have zero variance; raise lambda or check inputs");
  }
  const double ridge = lambda * scale;
  gram.diagonal().array() += ridge;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw NumericError("cca_fit: normal equations are singular at lambda=" + std::to_string(lambda) +
                       "; raise lambda");
  }

  CcaModel model;
  model.weights = llt.solve(xc.transpose() * yc);
  model.intercept = y_mean - x_mean.dot(model.weights);
  model.ridge_lambda = lambda;
  model.effective_lambda = ridge;
  if (!model.weights.allFinite()) throw NumericError("cca_fit: non-finite solution; raise lambda");
  try {
    model.train_correlation = pearson(cca_predict(model, embeddings), scores);
  } catch (const UndefinedCorrelation&) {
    model.train_correlation = 0.0;
  }
  return model;
}

CcaModel cca_fit_with_fallback(const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores, double lambda,
                               std::vector<std::string>* warnings) {
  double current = lambda;
  for (int attempt = 0;; ++attempt) {
    try {
      return cca_fit(embeddings, scores, current);
    } catch (const NumericError& e) {
      if (attempt >= 12) throw;
      const double next = current > 0.0 ? current * 10.0 : kDefaultLambda;
      if (warnings) {
        warnings->push_back(std::string(e.what()) + "; retrying with lambda=" + std::to_string(next));
      }
      current = next;
    }
  }
}

Eigen::VectorXd cca_predict(const CcaModel& model, const Eigen::MatrixXd& embeddings) {
  if (embeddings.cols() != model.weights.size()) {
    throw ShapeError("cca: embeddings have dimension " + std::to_string(embeddings.cols()) + ", model expects " +
                     std::to_string(model.weights.size()));
  }
  return (embeddings * model.weights).array() + model.intercept;
}

double cca_apply(const CcaModel& model, const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores) {
  if (embeddings.rows() != scores.size()) throw ShapeError("cca_apply: embeddings and scores differ in length");
  return pearson(cca_predict(model, embeddings), scores);
}

double cca_apply_system(const CcaModel& model, const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores,
                        std::span<const std::string> system_ids) {
  if (embeddings.rows() != scores.size() || static_cast<std::size_t>(scores.size()) != system_ids.size()) {
    throw ShapeError("cca_apply_system: embeddings, scores and system ids differ in length");
  }
  const auto estimated = cca_predict(model, embeddings);
  std::vector<metrics::ScoredUtterance> records;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    records.push_back({std::to_string(i), system_ids[static_cast<std::size_t>(i)], estimated(i), scores(i)});
  }
  std::vector<double> pred;
  std::vector<double> truth;
  for (const auto& s : metrics::system_aggregate(records)) {
    pred.push_back(s.predicted_mean);
    truth.push_back(s.true_mean);
  }
  return metrics::lcc(pred, truth);
}

}  // namespace mospred::cca
