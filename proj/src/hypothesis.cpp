#include "cndr/hypothesis.hpp"

#include "cndr/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cndr {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(i, c);
    rows.push_back(row);
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw DataError("matrix row count mismatch");
  Matrix m(rows, cols);
  Eigen::Index i = 0;
  for (const auto& row : data) {
    const auto v = row.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != cols) throw DataError("matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = v[static_cast<std::size_t>(c)];
    ++i;
  }
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_pair(const SpectralBundle& bundle, PairIndex pair) {
  if (pair.kernel < 0 || pair.kernel >= bundle.num_kernels() || pair.index < 0 ||
      pair.index >= bundle.spectra[static_cast<std::size_t>(pair.kernel)].effective_rank)
    throw InputError("pair (" + std::to_string(pair.kernel) + ", " + std::to_string(pair.index) +
                     ") is outside the effective rank");
}

// One c-feature from a row of kernel values against the anchor. Shared by the
// single-point and batch paths so both produce identical bits.
double feature_from_row(const Eigen::Ref<const Vector>& kernel_row, const KernelSpectrum& sp, int j,
                        int m) {
  const double denom = std::sqrt(static_cast<double>(m) * sp.values(j));
  return kernel_row.dot(sp.vectors.col(j)) / denom;
}

}  // namespace

double Model::weight_energy() const {
  double s = 0.0;
  for (int k = 0; k < num_kernels(); ++k) s += weights.row(k).squaredNorm() / mu(k);
  return s;
}

Matrix Model::selection_mask() const {
  if (mode == SelectionMode::continuous) return xi;
  Matrix mask = Matrix::Zero(weights.rows(), weights.cols());
  for (const auto& pr : selection) mask(pr.kernel, pr.index) = 1.0;
  return mask;
}

double c_feature(const SpectralBundle& bundle, const std::vector<KernelSpec>& kernels,
                 const PointSet& anchor, PairIndex pair, const Eigen::Ref<const Vector>& x) {
  check_pair(bundle, pair);
  if (anchor.rows() != bundle.sample_size) throw InputError("anchor size does not match the bundle");
  const auto& spec = kernels.at(static_cast<std::size_t>(pair.kernel));
  Vector row(anchor.rows());
  for (Eigen::Index n = 0; n < anchor.rows(); ++n) row(n) = eval_kernel(spec, x, anchor.row(n).transpose());
  return feature_from_row(row, bundle.spectra[static_cast<std::size_t>(pair.kernel)], pair.index,
                          bundle.sample_size);
}

FeatureTable feature_table(const SpectralBundle& bundle, const std::vector<KernelSpec>& kernels,
                           const PointSet& anchor, const PointSet& points) {
  if (static_cast<int>(kernels.size()) != bundle.num_kernels())
    throw InputError("kernel list does not match the bundle");
  if (anchor.rows() != bundle.sample_size) throw InputError("anchor size does not match the bundle");
  if (points.cols() != anchor.cols()) throw InputError("point dimension does not match the anchor sample");
  FeatureTable table;
  table.reserve(kernels.size());
  for (int k = 0; k < bundle.num_kernels(); ++k) {
    const auto& sp = bundle.spectra[static_cast<std::size_t>(k)];
    const Matrix g = cross_gram(kernels[static_cast<std::size_t>(k)], points, anchor);
    Matrix f(points.rows(), sp.effective_rank);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Vector row = g.row(i).transpose();
      for (int j = 0; j < sp.effective_rank; ++j) f(i, j) = feature_from_row(row, sp, j, bundle.sample_size);
    }
    table.push_back(std::move(f));
  }
  return table;
}

Vector scores_from_features(const Model& model, const FeatureTable& features) {
  if (static_cast<int>(features.size()) != model.num_kernels())
    throw InputError("feature table does not match the model");
  const Eigen::Index n = features.empty() ? 0 : features.front().rows();
  const Matrix mask = model.selection_mask();
  Vector h = Vector::Zero(n);
  for (int k = 0; k < model.num_kernels(); ++k) {
    const Matrix& f = features[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      const double coef = mask(k, j) * model.weights(k, j);
      if (coef == 0.0) continue;
      h += coef * f.col(j);
    }
  }
  return h;
}

Vector evaluate_batch(const Model& model, const PointSet& points) {
  return scores_from_features(model, feature_table(model.bundle, model.kernels, model.anchor, points));
}

double evaluate(const Model& model, const Eigen::Ref<const Vector>& x) {
  PointSet one(1, x.size());
  one.row(0) = x.transpose();
  return evaluate_batch(model, one)(0);
}

int sign_label(double score) { return score >= 0.0 ? 1 : -1; }

int predict(const Model& model, const Eigen::Ref<const Vector>& x) { return sign_label(evaluate(model, x)); }

double margin_loss(const Vector& scores, const Vector& labels, double rho) {
  if (!(rho > 0.0)) throw InputError("margin rho must be positive");
  if (scores.size() == 0) throw InputError("margin loss of an empty sample");
  if (scores.size() != labels.size()) throw InputError("score and label counts differ");
  Eigen::Index below = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (labels(i) * scores(i) < rho) ++below;
  return static_cast<double>(below) / static_cast<double>(scores.size());
}

double margin_loss(const Model& model, const PointSet& points, const Vector& labels, double rho) {
  return margin_loss(evaluate_batch(model, points), labels, rho);
}

double classification_error(const Vector& scores, const Vector& labels) {
  if (scores.size() == 0) throw InputError("classification error of an empty sample");
  if (scores.size() != labels.size()) throw InputError("score and label counts differ");
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (sign_label(scores(i)) != static_cast<int>(labels(i))) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(scores.size());
}

json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["kind"] = std::string(to_string(spec.kind));
  j["degree"] = spec.degree;
  j["bandwidth"] = spec.bandwidth;
  j["coords"] = spec.coords;
  j["normalize"] = spec.normalize;
  j["scale"] = spec.scale;
  if (spec.kind == KernelKind::precomputed && spec.matrix) j["matrix"] = matrix_to_json(*spec.matrix);
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec s;
  s.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  if (s.kind == KernelKind::precomputed) s = KernelSpec::precomputed(matrix_from_json(j.at("matrix")));
  s.degree = j.at("degree").get<int>();
  s.bandwidth = j.at("bandwidth").get<double>();
  s.coords = j.at("coords").get<std::vector<std::size_t>>();
  s.normalize = j.at("normalize").get<bool>();
  s.scale = j.at("scale").get<double>();
  return s;
}

json model_to_json(const Model& model) {
  json j;
  j["format"] = "cndr-model";
  j["version"] = kModelFormatVersion;
  j["kernels"] = json::array();
  for (const auto& k : model.kernels) j["kernels"].push_back(kernel_to_json(k));
  j["mu"] = vector_to_json(model.mu);
  j["selection_mode"] = model.mode == SelectionMode::discrete ? "discrete" : "continuous";
  j["selection"] = json::array();
  for (const auto& pr : model.selection) j["selection"].push_back({pr.kernel, pr.index});
  if (model.mode == SelectionMode::continuous) j["xi"] = matrix_to_json(model.xi);
  j["weights"] = matrix_to_json(model.weights);
  j["anchor"] = matrix_to_json(model.anchor);
  j["bundle_hash"] = model.bundle.anchor_hash;
  j["bundle"] = bundle_to_json(model.bundle);
  j["constraints"] = {{"r", model.params.r},
                      {"lambda_r", model.params.lambda_r},
                      {"nu", model.params.nu},
                      {"delta", model.params.delta}};
  return j;
}

Model model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "cndr-model") throw DataError("not a model document");
    if (j.at("version").get<int>() != kModelFormatVersion) throw DataError("unsupported model format version");
    Model m;
    for (const auto& k : j.at("kernels")) m.kernels.push_back(kernel_from_json(k));
    m.mu = vector_from_json(j.at("mu"));
    const auto mode = j.at("selection_mode").get<std::string>();
    if (mode == "discrete") {
      m.mode = SelectionMode::discrete;
    } else if (mode == "continuous") {
      m.mode = SelectionMode::continuous;
    } else {
      throw DataError("unknown selection mode '" + mode + "'");
    }
    for (const auto& pr : j.at("selection")) m.selection.push_back({pr.at(0).get<int>(), pr.at(1).get<int>()});
    if (m.mode == SelectionMode::continuous) m.xi = matrix_from_json(j.at("xi"));
    m.weights = matrix_from_json(j.at("weights"));
    m.anchor = matrix_from_json(j.at("anchor"));
    m.bundle = bundle_from_json(j.at("bundle"));
    const auto& c = j.at("constraints");
    m.params.r = c.at("r").get<int>();
    m.params.lambda_r = c.at("lambda_r").get<double>();
    m.params.nu = c.at("nu").get<double>();
    m.params.delta = c.at("delta").get<double>();

    if (j.at("bundle_hash").get<std::string>() != m.bundle.anchor_hash ||
        hash_points(m.anchor) != m.bundle.anchor_hash)
      throw DataError("model anchor sample does not match its spectral bundle");
    const Eigen::Index p = static_cast<Eigen::Index>(m.kernels.size());
    if (m.mu.size() != p || m.bundle.num_kernels() != p || m.weights.rows() != p ||
        m.weights.cols() != m.anchor.rows())
      throw DataError("model dimensions are inconsistent");
    for (const auto& pr : m.selection) check_pair(m.bundle, pr);
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const InputError& e) {
    throw DataError(std::string("invalid model file: ") + e.what());
  }
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw DataError("failed writing model file '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + std::string(e.what()));
  }
  return model_from_json(j);
}

}  // namespace cndr
