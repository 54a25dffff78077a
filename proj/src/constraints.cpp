#include "cndr/constraints.hpp"

#include "cndr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace cndr {

namespace {

FeasibilityReport check_with_budget(const Vector& mu, const ConstraintParams& params,
                                    const SpectralBundle& bundle, double budget, double tol) {
  if (mu.size() != bundle.num_kernels())
    throw InputError("weight vector length does not match the number of kernels");
  FeasibilityReport rep;
  rep.budget = budget;
  rep.min_mu = mu.size() > 0 ? mu.minCoeff() : 0.0;
  rep.positive_ok = rep.min_mu > 0.0;

  const Vector clamped = mu.cwiseMax(0.0);
  rep.kyfan = kyfan_r(bundle, clamped, params.r);
  rep.kyfan_slack = budget - rep.kyfan;
  rep.kyfan_ok = rep.kyfan_slack >= -tol;

  rep.l1_slack = 1.0 - mu.cwiseAbs().sum();
  rep.l1_ok = rep.l1_slack >= -tol;

  if (rep.positive_ok) {
    rep.inv_sum_slack = params.nu - mu.cwiseInverse().sum();
    rep.inv_sum_ok = rep.inv_sum_slack >= -tol;
  } else {
    rep.inv_sum_slack = -std::numeric_limits<double>::infinity();
    rep.inv_sum_ok = false;
  }
  return rep;
}

void enumerate_rec(const std::vector<int>& caps, std::size_t k, int remaining,
                   std::vector<int>& cur, std::vector<std::vector<int>>& out, std::size_t limit) {
  if (k + 1 == caps.size()) {
    if (remaining <= caps[k]) {
      cur[k] = remaining;
      out.push_back(cur);
      if (out.size() > limit) throw ConfigError("too many Ky-Fan count vectors to enumerate");
    }
    return;
  }
  int tail = 0;
  for (std::size_t l = k + 1; l < caps.size(); ++l) tail += caps[l];
  for (int n = std::min(caps[k], remaining); n >= 0; --n) {
    if (remaining - n > tail) break;
    cur[k] = n;
    enumerate_rec(caps, k + 1, remaining - n, cur, out, limit);
  }
}

WeightRegion base_region(const ConstraintParams& params, int p) {
  WeightRegion region;
  region.A.resize(0, p);
  region.nu = params.nu;
  region.add_row(Vector::Ones(p), 1.0);
  return region;
}

}  // namespace

void ConstraintParams::validate(int p) const {
  if (r < 1) throw ConfigError("constraints.r must be >= 1");
  if (!(lambda_r > 0.0) || !std::isfinite(lambda_r)) throw ConfigError("constraints.lambda_r must be positive");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("constraints.nu must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("constraints.delta must lie in (0, 1)");
  if (p >= 1 && nu < static_cast<double>(p) * p)
    throw ConfigError("constraints.nu = " + std::to_string(nu) + " < p^2 = " +
                      std::to_string(p * p) + ": the weight set is empty");
}

double kappa(int p, double delta) {
  if (p < 1) throw InputError("kappa: p must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("kappa: delta must lie in (0, 1)");
  const double arg = 2.0 * p / delta;
  return 4.0 * (1.0 + std::sqrt(std::log(arg) / 2.0));
}

FeasibilityReport check_M(const Vector& mu, const ConstraintParams& params,
                          const SpectralBundle& bundle, double tol) {
  return check_with_budget(mu, params, bundle, params.lambda_r, tol);
}

FeasibilityReport check_N(const Vector& mu, const ConstraintParams& params,
                          const SpectralBundle& bundle_s, double tol) {
  const double budget = params.lambda_r + kappa(bundle_s.num_kernels(), params.delta);
  return check_with_budget(mu, params, bundle_s, budget, tol);
}

std::vector<int> selection_counts(const SpectralBundle& bundle, const IndexSet& set) {
  std::vector<int> counts(static_cast<std::size_t>(bundle.num_kernels()), 0);
  for (const auto& pr : set) counts.at(static_cast<std::size_t>(pr.kernel)) += 1;
  return counts;
}

Vector kyfan_cut(const SpectralBundle& bundle, const std::vector<int>& counts) {
  Vector a(bundle.num_kernels());
  for (int k = 0; k < bundle.num_kernels(); ++k)
    a(k) = prefix_sum(bundle, k, counts.at(static_cast<std::size_t>(k)));
  return a;
}

std::vector<std::vector<int>> enumerate_count_vectors(const SpectralBundle& bundle, int r,
                                                      std::size_t limit) {
  if (r < 1 || r > bundle.total_rank()) throw ConfigError("rank r out of range for this bundle");
  std::vector<int> caps;
  for (const auto& sp : bundle.spectra) caps.push_back(std::min(sp.effective_rank, r));
  std::vector<std::vector<int>> out;
  std::vector<int> cur(caps.size(), 0);
  enumerate_rec(caps, 0, r, cur, out, limit);
  return out;
}

WeightRegion selection_cone(const SpectralBundle& bundle, const std::vector<int>& counts,
                            double margin) {
  const int p = bundle.num_kernels();
  WeightRegion cone;
  cone.A.resize(0, p);
  for (int k = 0; k < p; ++k) {
    const int nk = counts.at(static_cast<std::size_t>(k));
    if (nk == 0) continue;
    const double last_in = bundle.value(k, nk - 1);
    for (int l = 0; l < p; ++l) {
      if (l == k) continue;
      const int nl = counts.at(static_cast<std::size_t>(l));
      if (nl >= bundle.spectra[static_cast<std::size_t>(l)].effective_rank) continue;
      const double first_out = bundle.value(l, nl);
      // mu_l * first_out - mu_k * last_in <= -margin
      Vector a = Vector::Zero(p);
      a(l) = first_out;
      a(k) = -last_in;
      cone.add_row(a, -margin * std::max(first_out, last_in));
    }
  }
  return cone;
}

Vector project_to_M(const Vector& mu, const ConstraintParams& params, const SpectralBundle& bundle) {
  WeightRegion none;
  none.A.resize(0, bundle.num_kernels());
  return project_to_M(mu, params, bundle, none);
}

Vector project_to_M(const Vector& mu, const ConstraintParams& params, const SpectralBundle& bundle,
                    const WeightRegion& extra) {
  const int p = bundle.num_kernels();
  if (mu.size() != p) throw InputError("weight vector length does not match the number of kernels");
  if (!mu.allFinite()) throw InputError("weight vector has non-finite entries");
  params.validate(p);
  if (params.r > bundle.total_rank())
    throw ConfigError("rank r exceeds the total effective rank of the bundle");

  const bool has_extra = extra.A.rows() > 0;
  if (check_M(mu, params, bundle, 0.0).feasible() &&
      (!has_extra || (extra.A * mu - extra.b).maxCoeff() <= 0.0))
    return mu;

  const Vector uniform = Vector::Constant(p, 1.0 / p);
  std::set<std::vector<int>> cuts;
  cuts.insert(selection_counts(bundle, top_r_index_set(bundle, mu.cwiseMax(0.0), params.r)));
  cuts.insert(selection_counts(bundle, top_r_index_set(bundle, uniform, params.r)));

  for (int round = 0; round < 1000; ++round) {
    WeightRegion region = base_region(params, p);
    for (const auto& c : cuts) region.add_row(kyfan_cut(bundle, c), params.lambda_r);
    for (Eigen::Index i = 0; i < extra.A.rows(); ++i)
      region.add_row(extra.A.row(i).transpose(), extra.b(i));

    const auto start = interior_point(region, uniform);
    if (!start) {
      // A set without interior can still be the single point 1/p (nu = p^2).
      if (!has_extra && check_M(uniform, params, bundle, 1e-12).feasible()) return uniform;
      throw InfeasibleError(has_extra ? "requested selection is not realizable inside the weight set"
                                      : "the weight set M is empty for these constraints");
    }
    const Vector out = barrier_minimize(region, *start, 1.0, mu, Vector::Zero(p));
    const double kf = kyfan_r(bundle, out, params.r);
    if (kf <= params.lambda_r) return out;
    auto worst = selection_counts(bundle, top_r_index_set(bundle, out, params.r));
    if (!cuts.insert(worst).second) {
      if (kf <= params.lambda_r * (1.0 + 1e-12)) return out;
      throw NumericError("projection onto M stalled on a repeated Ky-Fan cut");
    }
  }
  throw NumericError("projection onto M did not converge");
}

}  // namespace cndr
