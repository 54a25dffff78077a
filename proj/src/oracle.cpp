#include "cndr/oracle.hpp"

#include "cndr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace cndr::oracle {

JacobiResult jacobi_eigen(const Matrix& input, int max_sweeps) {
  const Eigen::Index n = input.rows();
  if (n != input.cols()) throw InputError("jacobi_eigen expects a square matrix");
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double total = a.squaredNorm();
  JacobiResult res;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * total || off == 0.0) break;
    res.sweeps = sweep + 1;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  res.values.resize(n);
  res.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    res.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    res.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return res;
}

ExplicitFeatureMap::ExplicitFeatureMap(KernelSpec spec, int input_dim)
    : spec_(std::move(spec)), input_dim_(input_dim) {
  spec_.validate(input_dim);
  switch (spec_.kind) {
    case KernelKind::linear:
      dim_ = input_dim;
      for (int i = 0; i < input_dim; ++i) support_.push_back(static_cast<std::size_t>(i));
      break;
    case KernelKind::coordinate_linear:
      dim_ = static_cast<int>(spec_.coords.size());
      support_ = spec_.coords;
      break;
    case KernelKind::polynomial: {
      double d = std::pow(static_cast<double>(input_dim), spec_.degree);
      if (d > 1e4) throw InputError("explicit polynomial feature space exceeds 1e4 dimensions");
      dim_ = static_cast<int>(d);
      for (int i = 0; i < input_dim; ++i) support_.push_back(static_cast<std::size_t>(i));
      break;
    }
    default:
      throw InputError("no finite explicit feature map for this kernel kind");
  }
  std::sort(support_.begin(), support_.end());
}

Vector ExplicitFeatureMap::map(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != input_dim_) throw InputError("point dimension does not match the feature map");
  const double root = std::sqrt(spec_.scale);
  Vector out(dim_);
  switch (spec_.kind) {
    case KernelKind::linear:
      out = x;
      break;
    case KernelKind::coordinate_linear:
      for (int i = 0; i < dim_; ++i) out(i) = x(static_cast<Eigen::Index>(spec_.coords[static_cast<std::size_t>(i)]));
      break;
    case KernelKind::polynomial: {
      // Tensor power x (x) x (x) ... (x) x.
      Vector cur = x;
      for (int d = 1; d < spec_.degree; ++d) {
        Vector next(cur.size() * x.size());
        for (Eigen::Index a = 0; a < cur.size(); ++a)
          for (Eigen::Index b = 0; b < x.size(); ++b) next(a * x.size() + b) = cur(a) * x(b);
        cur = std::move(next);
      }
      out = cur;
      break;
    }
    default:
      break;
  }
  return root * out;
}

Matrix ExplicitFeatureMap::map_all(const PointSet& points) const {
  Matrix f(points.rows(), dim_);
  for (Eigen::Index i = 0; i < points.rows(); ++i) f.row(i) = map(points.row(i).transpose()).transpose();
  return f;
}

Matrix explicit_covariance(const ExplicitFeatureMap& map, const PointSet& points) {
  if (points.rows() == 0) throw InputError("covariance of an empty sample");
  Matrix c = Matrix::Zero(map.dim(), map.dim());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector f = map.map(points.row(i).transpose());
    c += f * f.transpose();
  }
  return c / static_cast<double>(points.rows());
}

namespace {

void require_disjoint(const std::vector<ExplicitFeatureMap>& maps) {
  std::set<std::size_t> seen;
  for (const auto& m : maps)
    for (std::size_t c : m.support())
      if (!seen.insert(c).second) throw InputError("feature maps overlap: kernels are not independent");
}

// Unweighted stacked features (n x D_total) and block offsets.
Matrix stacked_features(const std::vector<ExplicitFeatureMap>& maps, const PointSet& points,
                        std::vector<int>& offsets) {
  int total = 0;
  offsets.clear();
  for (const auto& m : maps) {
    offsets.push_back(total);
    total += m.dim();
  }
  Matrix f(points.rows(), total);
  for (std::size_t k = 0; k < maps.size(); ++k) f.middleCols(offsets[k], maps[k].dim()) = maps[k].map_all(points);
  return f;
}

Vector stacked_scale(const std::vector<ExplicitFeatureMap>& maps, const Vector& mu) {
  int total = 0;
  for (const auto& m : maps) total += m.dim();
  Vector s(total);
  int c = 0;
  for (std::size_t k = 0; k < maps.size(); ++k)
    for (int i = 0; i < maps[k].dim(); ++i) s(c++) = std::sqrt(mu(static_cast<Eigen::Index>(k)));
  return s;
}

// Direct-sum covariance: the diagonal blocks (1/n) F_k^T F_k of the weighted
// features, cross blocks dropped.
Matrix direct_sum_covariance(const Matrix& weighted, const std::vector<int>& offsets) {
  const Eigen::Index n = weighted.rows();
  Matrix cov = Matrix::Zero(weighted.cols(), weighted.cols());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const int begin = offsets[k];
    const int end = k + 1 < offsets.size() ? offsets[k + 1] : static_cast<int>(weighted.cols());
    const auto block = weighted.middleCols(begin, end - begin);
    cov.block(begin, begin, end - begin, end - begin) = block.transpose() * block / static_cast<double>(n);
  }
  return cov;
}

}  // namespace

double explicit_projection_norm(const std::vector<ExplicitFeatureMap>& maps, const Vector& mu, int r,
                                const Vector& sigma, const PointSet& points) {
  require_disjoint(maps);
  if (mu.size() != static_cast<Eigen::Index>(maps.size())) throw InputError("weight vector length mismatch");
  if (sigma.size() != points.rows()) throw InputError("sign vector length mismatch");
  std::vector<int> offsets;
  const Matrix f = stacked_features(maps, points, offsets) * stacked_scale(maps, mu).asDiagonal();
  if (r < 1 || r > f.cols()) throw InputError("rank out of range for the feature space");
  const JacobiResult eig = jacobi_eigen(direct_sum_covariance(f, offsets));
  const Vector s = f.transpose() * sigma;
  return (eig.vectors.leftCols(r).transpose() * s).norm();
}

double exhaustive_rademacher(const std::vector<ExplicitFeatureMap>& maps, const ConstraintParams& params,
                             const PointSet& points, int grid) {
  const int m = static_cast<int>(points.rows());
  if (m < 1 || m > 12) throw InputError("exhaustive oracle is limited to 1 <= m <= 12");
  const int p = static_cast<int>(maps.size());
  if (p < 1 || p > 2) throw InputError("exhaustive oracle supports p = 1 or p = 2");
  require_disjoint(maps);
  params.validate(p);
  std::vector<int> offsets;
  const Matrix f = stacked_features(maps, points, offsets);
  const int r = params.r;
  const long long codes = 1LL << m;
  auto sigma_of = [&](long long code) {
    Vector s(m);
    for (int n = 0; n < m; ++n) s(n) = ((code >> n) & 1LL) ? 1.0 : -1.0;
    return s;
  };

  // Each admissible weight vector contributes a matrix W with ||W f^T sigma||^2
  // equal to the squared projected norm.
  std::vector<Matrix> candidates;
  auto add_candidate = [&](const Vector& mu) {
    const Vector scale = stacked_scale(maps, mu);
    const Matrix fw = f * scale.asDiagonal();
    const JacobiResult eig = jacobi_eigen(direct_sum_covariance(fw, offsets));
    if (r > eig.values.size()) throw InputError("rank exceeds the feature dimension");
    if (eig.values.head(r).sum() > params.lambda_r) return;
    candidates.push_back(eig.vectors.leftCols(r).transpose() * scale.asDiagonal());
  };

  if (p == 1) {
    const JacobiResult eig = jacobi_eigen(f.transpose() * f / static_cast<double>(m));
    if (r > eig.values.size()) throw InputError("rank exceeds the feature dimension");
    const double mu = std::min(1.0, params.lambda_r / eig.values.head(r).sum());
    if (mu * params.nu < 1.0 - 1e-12) throw InfeasibleError("weight set is empty");
    candidates.push_back(std::sqrt(mu) * eig.vectors.leftCols(r).transpose());
  } else {
    for (int i = 1; i <= grid; ++i) {
      for (int j = 1; i + j <= grid; ++j) {
        Vector mu(2);
        mu << static_cast<double>(i) / grid, static_cast<double>(j) / grid;
        if (1.0 / mu(0) + 1.0 / mu(1) > params.nu) continue;
        add_candidate(mu);
      }
    }
    if (candidates.empty()) throw InfeasibleError("no grid point lies in the weight set");
  }

  double total = 0.0;
  for (long long code = 0; code < codes; ++code) {
    const Vector s = f.transpose() * sigma_of(code);
    double best = 0.0;
    for (const auto& w : candidates) best = std::max(best, (w * s).squaredNorm());
    total += std::sqrt(best) / m;
  }
  return total / static_cast<double>(codes);
}

namespace {

std::vector<double> unscaled_values(const SpectralBundle& bundle) {
  std::vector<double> vals;
  const double m = static_cast<double>(bundle.sample_size);
  for (int k = 0; k < bundle.num_kernels(); ++k)
    for (int j = 0; j < bundle.sample_size; ++j) vals.push_back(m * bundle.value(k, j));
  return vals;
}

}  // namespace

double coupled_term_bruteforce(const SpectralBundle& bundle, int r) {
  const std::vector<double> vals = unscaled_values(bundle);
  const int n = static_cast<int>(vals.size());
  if (n > 24) throw InputError("brute-force enumeration is limited to p * m <= 24");
  if (r < 1 || r > n) throw InputError("rank out of range");
  std::uint32_t best_mask = 0;
  double best = -1.0;
  // Gosper's hack over all r-subsets.
  std::uint32_t mask = (1u << r) - 1u;
  const std::uint32_t limit = 1u << n;
  while (mask < limit) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s += vals[static_cast<std::size_t>(i)];
    if (s > best) {
      best = s;
      best_mask = mask;
    }
    const std::uint32_t c = mask & (~mask + 1u);
    const std::uint32_t rr = mask + c;
    mask = (((rr ^ mask) >> 2) / c) | rr;
  }
  // Re-sum the winning set from the largest value down.
  std::vector<double> chosen;
  for (int i = 0; i < n; ++i)
    if (best_mask & (1u << i)) chosen.push_back(vals[static_cast<std::size_t>(i)]);
  std::sort(chosen.begin(), chosen.end(), std::greater<>());
  double s = 0.0;
  for (double v : chosen) s += v;
  return s;
}

double standard_term_bruteforce(const SpectralBundle& bundle) {
  const double m = static_cast<double>(bundle.sample_size);
  double best = 0.0;
  for (const auto& sp : bundle.spectra) {
    double trace = 0.0;
    for (Eigen::Index j = 0; j < sp.values.size(); ++j) trace += m * sp.values(j);
    best = std::max(best, trace);
  }
  return best;
}

}  // namespace cndr::oracle
