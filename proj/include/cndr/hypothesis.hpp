#pragma once

#include "cndr/constraints.hpp"
#include "cndr/kernels.hpp"
#include "cndr/spectral.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace cndr {

inline constexpr int kModelFormatVersion = 1;

enum class SelectionMode { discrete, continuous };

// A trained element of the hypothesis class: mixture weights, selected
// (kernel, eigenvector) pairs and coefficients, plus everything needed to
// evaluate h(x) without the training data.
//
// `weights` is p x m (m = anchor size); column j of row k is w_{k,j} and only
// columns below kernel k's effective rank are used. In discrete mode only the
// pairs in `selection` contribute; in continuous mode every pair contributes
// with factor xi(k, j).
struct Model {
  std::vector<KernelSpec> kernels;
  Vector mu;
  SelectionMode mode = SelectionMode::discrete;
  IndexSet selection;
  Matrix xi;
  Matrix weights;
  PointSet anchor;
  SpectralBundle bundle;
  ConstraintParams params;

  int num_kernels() const { return static_cast<int>(kernels.size()); }
  // sum_{k,j} w_{k,j}^2 / mu_k over all stored coefficients.
  double weight_energy() const;
  // Coefficient multiplier of pair (k, j) in h: 1/0 in discrete mode, xi in continuous.
  Matrix selection_mask() const;
};

// c_{k,j}(x) = (1 / sqrt(m lambda_bar_{k,j})) sum_n K_k(x, x_n) [v_{k,j}]_n.
// Throws InputError if (k, j) is beyond the effective rank.
double c_feature(const SpectralBundle& bundle, const std::vector<KernelSpec>& kernels,
                 const PointSet& anchor, PairIndex pair, const Eigen::Ref<const Vector>& x);

// c-features of every point for every pair below the effective rank: entry k
// is an N x r_k matrix.
using FeatureTable = std::vector<Matrix>;

FeatureTable feature_table(const SpectralBundle& bundle, const std::vector<KernelSpec>& kernels,
                           const PointSet& anchor, const PointSet& points);

// Scores h(x_i) from precomputed features.
Vector scores_from_features(const Model& model, const FeatureTable& features);

double evaluate(const Model& model, const Eigen::Ref<const Vector>& x);
Vector evaluate_batch(const Model& model, const PointSet& points);

// sign(h), with h = 0 mapped to +1.
int predict(const Model& model, const Eigen::Ref<const Vector>& x);
int sign_label(double score);

// Fraction of points with y_i h(x_i) < rho.
double margin_loss(const Vector& scores, const Vector& labels, double rho);
double margin_loss(const Model& model, const PointSet& points, const Vector& labels, double rho);

// Fraction of points with predicted label != y_i.
double classification_error(const Vector& scores, const Vector& labels);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace cndr
