#include "cndr/spectral.hpp"

#include "cndr/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace cndr {

namespace {

void check_mu(const SpectralBundle& bundle, const Vector& mu) {
  if (mu.size() != bundle.num_kernels())
    throw InputError("weight vector has length " + std::to_string(mu.size()) + ", expected " +
                     std::to_string(bundle.num_kernels()));
  for (Eigen::Index k = 0; k < mu.size(); ++k)
    if (!(mu(k) >= 0.0) || !std::isfinite(mu(k)))
      throw InputError("mixture weights must be finite and non-negative");
}

void check_sigma(const SpectralBundle& bundle, const Vector& sigma) {
  if (sigma.size() != bundle.sample_size)
    throw InputError("sign vector has length " + std::to_string(sigma.size()) +
                     ", expected anchor sample size " + std::to_string(bundle.sample_size));
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) != 1.0 && sigma(i) != -1.0) throw InputError("sign vector entries must be +1 or -1");
}

void check_r(const SpectralBundle& bundle, int r) {
  if (r < 1) throw ConfigError("rank r must be >= 1");
  if (r > bundle.total_rank())
    throw ConfigError("rank r = " + std::to_string(r) + " exceeds total effective rank " +
                      std::to_string(bundle.total_rank()));
}

}  // namespace

int SpectralBundle::total_rank() const {
  int s = 0;
  for (const auto& sp : spectra) s += sp.effective_rank;
  return s;
}

double SpectralBundle::value(int k, int j) const {
  const auto& sp = spectra.at(static_cast<std::size_t>(k));
  if (j < 0 || j >= sp.effective_rank) return 0.0;
  return sp.values(j);
}

Eigenpairs eigendecompose(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("eigendecompose expects a square matrix");
  if (m.rows() == 0) return {};
  if (!m.allFinite()) throw NumericError("eigendecompose: matrix has non-finite entries");
  const double norm = m.norm();
  if ((m - m.transpose()).norm() > 1e-10 * std::max(norm, 1e-300))
    throw InputError("eigendecompose: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericError("eigendecompose: solver did not converge");

  const Eigen::Index n = m.rows();
  Eigenpairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = n - 1 - i;
    out.values(i) = es.eigenvalues()(src);
    Vector v = es.eigenvectors().col(src);
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (std::abs(v(t)) > best) {
        best = std::abs(v(t));
        arg = t;
      }
    }
    if (v(arg) < 0) v = -v;
    out.vectors.col(i) = v;
  }
  return out;
}

std::string hash_points(const PointSet& points) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t rows = points.rows();
  const std::int64_t cols = points.cols();
  mix(&rows, sizeof rows);
  mix(&cols, sizeof cols);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      const double v = points(i, j);
      mix(&v, sizeof v);
    }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

SpectralBundle bundle_from_normalized_grams(const std::vector<Matrix>& grams, double rank_tol,
                                            std::string anchor_hash) {
  if (grams.empty()) throw InputError("spectral bundle needs at least one kernel");
  if (!(rank_tol >= 0.0)) throw InputError("rank tolerance must be non-negative");
  const Eigen::Index m = grams.front().rows();
  for (const auto& g : grams)
    if (g.rows() != m || g.cols() != m) throw InputError("Gram matrices must share one sample size");

  SpectralBundle bundle;
  bundle.rank_tol = rank_tol;
  bundle.anchor_hash = std::move(anchor_hash);
  bundle.sample_size = static_cast<int>(m);
  bundle.spectra.resize(grams.size());

  const int p = static_cast<int>(grams.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < p; ++k) {
    try {
      Eigenpairs ep = eigendecompose(grams[static_cast<std::size_t>(k)]);
      KernelSpectrum sp;
      const double top = ep.values.size() > 0 ? ep.values(0) : 0.0;
      const double floor = -1e-8 * std::max(top, 0.0);
      for (Eigen::Index j = 0; j < ep.values.size(); ++j) {
        if (ep.values(j) < floor)
          throw NumericError("kernel " + std::to_string(k + 1) +
                             " Gram matrix is not positive semi-definite (eigenvalue " +
                             std::to_string(ep.values(j)) + ")");
        if (ep.values(j) < 0.0) ep.values(j) = 0.0;
      }
      int rank = 0;
      if (top > 0.0)
        for (Eigen::Index j = 0; j < ep.values.size(); ++j)
          if (ep.values(j) > rank_tol * top) ++rank;
      sp.values = std::move(ep.values);
      sp.vectors = std::move(ep.vectors);
      sp.effective_rank = rank;
      bundle.spectra[static_cast<std::size_t>(k)] = std::move(sp);
    } catch (...) {
#pragma omp critical(cndr_bundle_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return bundle;
}

SpectralBundle build_bundle(const std::vector<KernelSpec>& kernels, const PointSet& points,
                            double rank_tol) {
  if (kernels.empty()) throw InputError("spectral bundle needs at least one kernel");
  std::vector<Matrix> grams;
  grams.reserve(kernels.size());
  for (const auto& k : kernels) grams.push_back(normalized_gram(k, points));
  return bundle_from_normalized_grams(grams, rank_tol, hash_points(points));
}

std::vector<SpectrumEntry> union_spectrum(const SpectralBundle& bundle, const Vector& mu) {
  check_mu(bundle, mu);
  std::vector<SpectrumEntry> out;
  out.reserve(static_cast<std::size_t>(bundle.total_rank()));
  for (int k = 0; k < bundle.num_kernels(); ++k) {
    const auto& sp = bundle.spectra[static_cast<std::size_t>(k)];
    for (int j = 0; j < sp.effective_rank; ++j) out.push_back({mu(k) * sp.values(j), {k, j}});
  }
  std::sort(out.begin(), out.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.pair < b.pair;
  });
  return out;
}

IndexSet top_r_index_set(const SpectralBundle& bundle, const Vector& mu, int r) {
  check_r(bundle, r);
  const auto spectrum = union_spectrum(bundle, mu);
  IndexSet set;
  set.reserve(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) set.push_back(spectrum[static_cast<std::size_t>(i)].pair);
  std::sort(set.begin(), set.end());
  return set;
}

double kyfan_r(const SpectralBundle& bundle, const Vector& mu, int r) {
  check_r(bundle, r);
  const auto spectrum = union_spectrum(bundle, mu);
  double s = 0.0;
  for (int i = 0; i < r; ++i) s += spectrum[static_cast<std::size_t>(i)].value;
  return s;
}

double prefix_sum(const SpectralBundle& bundle, int k, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += bundle.value(k, j);
  return s;
}

Eigengap eigengap_plugin(const SpectralBundle& bundle, int r) {
  if (r < 1) throw ConfigError("rank r must be >= 1");
  Eigengap gap;
  gap.value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < bundle.num_kernels(); ++k)
    gap.value = std::min(gap.value, bundle.value(k, r - 1) - bundle.value(k, r));
  gap.value = std::max(gap.value, 0.0);
  if (gap.value < 1e-12) {
    gap.value = 0.0;
    gap.degenerate = true;
  }
  return gap;
}

double projected_sigma_norm(const SpectralBundle& bundle, const Vector& mu, const IndexSet& set,
                            const Vector& sigma) {
  check_mu(bundle, mu);
  check_sigma(bundle, sigma);
  double s = 0.0;
  for (const auto& pr : set) {
    const auto& sp = bundle.spectra.at(static_cast<std::size_t>(pr.kernel));
    if (pr.index < 0 || pr.index >= sp.effective_rank)
      throw InputError("index pair beyond effective rank");
    const double proj = sp.vectors.col(pr.index).dot(sigma);
    s += mu(pr.kernel) * sp.values(pr.index) * proj * proj;
  }
  return std::sqrt(static_cast<double>(bundle.sample_size) * s);
}

double projected_sigma_norm(const SpectralBundle& bundle, const Vector& mu, int r,
                            const Vector& sigma) {
  return projected_sigma_norm(bundle, mu, top_r_index_set(bundle, mu, r), sigma);
}

double full_sigma_norm(const SpectralBundle& bundle, const Vector& mu, const Vector& sigma) {
  check_mu(bundle, mu);
  check_sigma(bundle, sigma);
  double s = 0.0;
  for (int k = 0; k < bundle.num_kernels(); ++k) {
    const auto& sp = bundle.spectra[static_cast<std::size_t>(k)];
    const Vector proj = sp.vectors.transpose() * sigma;
    s += mu(k) * sp.values.dot(proj.cwiseAbs2());
  }
  return std::sqrt(static_cast<double>(bundle.sample_size) * std::max(s, 0.0));
}

nlohmann::json bundle_to_json(const SpectralBundle& bundle) {
  nlohmann::json j;
  j["format"] = "cndr-spectral-bundle";
  j["version"] = 1;
  j["rank_tol"] = bundle.rank_tol;
  j["anchor_hash"] = bundle.anchor_hash;
  j["sample_size"] = bundle.sample_size;
  auto& arr = j["spectra"] = nlohmann::json::array();
  for (const auto& sp : bundle.spectra) {
    nlohmann::json e;
    e["effective_rank"] = sp.effective_rank;
    e["values"] = std::vector<double>(sp.values.data(), sp.values.data() + sp.values.size());
    auto& vecs = e["vectors"] = nlohmann::json::array();
    for (Eigen::Index c = 0; c < sp.vectors.cols(); ++c) {
      const Vector col = sp.vectors.col(c);
      vecs.push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
    arr.push_back(std::move(e));
  }
  return j;
}

SpectralBundle bundle_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "cndr-spectral-bundle")
      throw DataError("not a spectral bundle document");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported spectral bundle version");
    SpectralBundle b;
    b.rank_tol = j.at("rank_tol").get<double>();
    b.anchor_hash = j.at("anchor_hash").get<std::string>();
    b.sample_size = j.at("sample_size").get<int>();
    for (const auto& e : j.at("spectra")) {
      KernelSpectrum sp;
      sp.effective_rank = e.at("effective_rank").get<int>();
      const auto vals = e.at("values").get<std::vector<double>>();
      sp.values = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      const auto& vecs = e.at("vectors");
      sp.vectors.resize(b.sample_size, static_cast<Eigen::Index>(vecs.size()));
      Eigen::Index c = 0;
      for (const auto& col : vecs) {
        const auto v = col.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != b.sample_size) throw DataError("eigenvector length mismatch");
        sp.vectors.col(c++) = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      if (sp.values.size() != sp.vectors.cols() || sp.effective_rank > sp.values.size())
        throw DataError("inconsistent spectrum in bundle document");
      b.spectra.push_back(std::move(sp));
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed spectral bundle: ") + e.what());
  }
}

}  // namespace cndr
