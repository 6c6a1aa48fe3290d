#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mospred/feature_file.hpp"
#include "mospred/manifest.hpp"

namespace mospred::cca {

/// Linear map from utterance embeddings to scores whose output correlation
/// with the training scores is maximal. For a scalar target the first
/// canonical correlation equals the multiple correlation of least squares, so
/// the fit is a ridge regression on centered data.
struct CcaModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  /// Ridge strength relative to the mean diagonal of the centered Gram matrix.
  double ridge_lambda = 0.0;
  /// Absolute ridge term actually added to the diagonal.
  double effective_lambda = 0.0;
  double train_correlation = 0.0;
};

inline constexpr double kDefaultLambda = 1e-6;

/// Frame-mean vector of an utterance.
Eigen::VectorXd utterance_embed(const FeatureTensor& features);

/// One row per utterance.
Eigen::MatrixXd embed_split(const LoadedSplit& split);

/// Solves (Xc'Xc + lambda * mean(diag(Xc'Xc)) I) w = Xc'yc by Cholesky. Throws
/// NumericError when the system is singular or ill-conditioned.
CcaModel cca_fit(const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores, double lambda);

/// cca_fit, raising lambda tenfold on failure (up to 12 times). Each retry
/// appends a line to `warnings`.
CcaModel cca_fit_with_fallback(const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores, double lambda,
                               std::vector<std::string>* warnings);

Eigen::VectorXd cca_predict(const CcaModel& model, const Eigen::MatrixXd& embeddings);

/// Pearson correlation between the transform's outputs and `scores`.
double cca_apply(const CcaModel& model, const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores);

/// System-level variant: estimated and true scores are averaged per system first.
double cca_apply_system(const CcaModel& model, const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& scores,
                        std::span<const std::string> system_ids);

}  // namespace mospred::cca
