#include "cndr/verify.hpp"

#include "cndr/complexity.hpp"
#include "cndr/errors.hpp"
#include "cndr/io.hpp"
#include "cndr/oracle.hpp"

#include <cmath>
#include <random>

namespace cndr {

namespace {

std::mt19937_64 rng_for(std::uint64_t seed, std::uint64_t tag) { return std::mt19937_64(draw_seed(seed, tag)); }

PointSet gaussian_points(std::mt19937_64& g, int m, int d) {
  std::normal_distribution<double> normal;
  PointSet x(m, d);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = normal(g);
  return x;
}

// p coordinate-linear kernels on consecutive blocks of `block` coordinates.
std::vector<KernelSpec> block_kernels(int p, int block) {
  std::vector<KernelSpec> ks;
  for (int k = 0; k < p; ++k) {
    std::vector<std::size_t> coords;
    for (int c = 0; c < block; ++c) coords.push_back(static_cast<std::size_t>(k * block + c));
    ks.push_back(KernelSpec::coordinate_linear(coords));
  }
  return ks;
}

std::vector<KernelSpec> normalized(const std::vector<KernelSpec>& ks, const PointSet& x) {
  std::vector<KernelSpec> out;
  for (const auto& k : ks) out.push_back(normalize_spec(k, x));
  return out;
}

// Feasible constraint parameters for a bundle: Lambda a fraction of the Ky-Fan
// norm at mu = 1, nu comfortably above p^2.
ConstraintParams feasible_params(const SpectralBundle& b, int r, double fraction) {
  ConstraintParams cp;
  cp.r = r;
  cp.nu = 2.0 * b.num_kernels() * b.num_kernels();
  cp.lambda_r = fraction * kyfan_r(b, Vector::Ones(b.num_kernels()), r);
  return cp;
}

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return j;
}

VerifyOptions verify_options(const RunConfig& cfg) {
  VerifyOptions o;
  o.seed = cfg.seed;
  o.draws = cfg.verify.draws;
  o.concentration_trials = cfg.verify.concentration_trials;
  o.concentration_sizes = cfg.verify.concentration_sizes;
  return o;
}

CheckResult check_eigengap_example() {
  // The difference of the two rank-one projections has eigenvalues +-1: its
  // trace norm reaches the right-hand side and its operator norm is half of it.
  CheckResult res{"eigengap_example", true, nlohmann::json::array()};
  for (double eps : {1e-6, 0.5, 1.0}) {
    const EigengapExample ex = eigengap_proposition(eps);
    const bool trace_ok = std::abs(ex.lhs_trace - ex.rhs) <= 1e-12;
    const bool op_ok = std::abs(ex.lhs_operator - 0.5 * ex.rhs) <= 1e-12;
    const bool rhs_ok = std::abs(ex.rhs - 2.0) <= 1e-9;
    res.passed = res.passed && trace_ok && op_ok && rhs_ok;
    res.detail.push_back({{"epsilon", eps},
                          {"lhs_trace_norm", ex.lhs_trace},
                          {"lhs_operator_norm", ex.lhs_operator},
                          {"rhs", ex.rhs},
                          {"trace_norm_equals_rhs", trace_ok},
                          {"operator_norm_equals_half_rhs", op_ok}});
  }
  return res;
}

CheckResult check_lower_bound_sandwich(const VerifyOptions& opt) {
  const int m = 32, r = 4;
  const double lambda = 0.4;
  const LowerBoundInstance inst = lower_bound_construct(m, r, lambda, 0.05);
  const RademacherEstimate est = estimate_rademacher(inst.bundle, inst.params, opt.draws, draw_seed(opt.seed, 101));
  const double lower = lower_bound_value(lambda, m);
  const BoundReport upper = complexity_bound(inst.params, 1, m, eigengap_plugin(inst.bundle, r));
  const bool lower_ok = est.estimate + 3.0 * est.std_error >= lower;
  const bool upper_ok = est.estimate - 3.0 * est.std_error <= upper.total;
  return {"lower_bound_sandwich",
          lower_ok && upper_ok,
          {{"m", m},
           {"r", r},
           {"lambda_r", lambda},
           {"estimate", est.estimate},
           {"std_error", est.std_error},
           {"draws", est.draws},
           {"lower_bound", lower},
           {"upper_bound", finite_or_string(upper.total)},
           {"lower_ok", lower_ok},
           {"upper_ok", upper_ok}}};
}

CheckResult check_khintchine(const VerifyOptions& opt) {
  CheckResult res{"khintchine", true, {}};
  auto g = rng_for(opt.seed, 201);
  std::normal_distribution<double> normal;
  double worst_margin = INFINITY;
  int count = 0;
  for (int i = 0; i < 50; ++i) {
    const int m = (i % 3 == 0) ? 4 : (i % 3 == 1 ? 16 : 64);
    Vector v(m);
    for (int n = 0; n < m; ++n) v(n) = normal(g);
    v.normalize();
    const McValue mc = khintchine_check(v, opt.draws, draw_seed(opt.seed, 1000 + i));
    const double margin = mc.estimate + 3.0 * mc.std_error - kKhintchineConstant;
    worst_margin = std::min(worst_margin, margin);
    res.passed = res.passed && margin >= 0.0;
    ++count;
  }
  // Hand values at m = 4: E|sum of k signs| / sqrt(k) for k = 1, 2, 3, 4.
  const double hand[4] = {1.0, 1.0 / std::sqrt(2.0), 1.5 / std::sqrt(3.0), 0.75};
  double exact_err = 0.0;
  for (int k = 1; k <= 4; ++k) {
    Vector v = Vector::Zero(4);
    v.head(k).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
    exact_err = std::max(exact_err, std::abs(khintchine_exact(v) - hand[k - 1]));
  }
  res.passed = res.passed && exact_err <= 1e-10;
  res.detail = {{"vectors", count}, {"worst_margin", worst_margin}, {"exact_m4_max_error", exact_err}};
  return res;
}

CheckResult check_massart(const VerifyOptions& opt) {
  CheckResult res{"massart", true, nlohmann::json::array()};
  auto g = rng_for(opt.seed, 301);
  for (int i = 0; i < 20; ++i) {
    const int p = 1 + i % 3;
    const int m = (i % 4 == 0) ? 6 : (i % 4 == 1 ? 8 : (i % 4 == 2 ? 16 : 32));
    const PointSet x = gaussian_points(g, m, 2 * p);
    const SpectralBundle b = build_bundle(block_kernels(p, 2), x);
    const McValue mc = massart_check(b, opt.draws, draw_seed(opt.seed, 3000 + i));
    const double bound = massart_bound(p, m);
    bool ok = mc.estimate <= bound + 3.0 * mc.std_error;
    nlohmann::json row{{"p", p}, {"m", m}, {"estimate", mc.estimate}, {"std_error", mc.std_error}, {"bound", bound}};
    if (m <= 8) {
      const double exact = massart_exact(b);
      ok = ok && exact <= bound;
      row["exact"] = exact;
    }
    row["passed"] = ok;
    res.passed = res.passed && ok;
    res.detail.push_back(row);
  }
  return res;
}

CheckResult check_spectral_identity(const VerifyOptions& opt) {
  CheckResult res{"spectral_identity", true, {}};
  auto g = rng_for(opt.seed, 401);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int m = 3 + i % 10;
    const int d = 1 + i % 5;
    const PointSet x = gaussian_points(g, m, d);
    const KernelSpec k = (i % 5 == 2) ? KernelSpec::polynomial(2) : KernelSpec::linear();
    const SpectralBundle b = build_bundle({k}, x);
    const oracle::ExplicitFeatureMap map(k, d);
    const Vector ref = oracle::jacobi_eigen(oracle::explicit_covariance(map, x)).values;
    const auto& vals = b.spectra[0].values;
    const double top = std::max(ref(0), 1e-300);
    for (Eigen::Index j = 0; j < std::max(vals.size(), ref.size()); ++j) {
      const double a = j < vals.size() && j < b.spectra[0].effective_rank ? vals(j) : 0.0;
      const double o = j < ref.size() ? ref(j) : 0.0;
      const double err = o > 1e-10 * top ? std::abs(a - o) / o : std::abs(a - o) / top;
      worst = std::max(worst, err);
    }
  }
  res.passed = worst <= 1e-8;
  res.detail = {{"instances", 50}, {"worst_relative_error", worst}};
  return res;
}

CheckResult check_projection_oracle(const VerifyOptions& opt) {
  CheckResult res{"projection_oracle", true, {}};
  auto g = rng_for(opt.seed, 501);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  double worst = 0.0;
  long long comparisons = 0;
  for (int i = 0; i < 100; ++i) {
    const int p = 1 + i % 3;
    const int m = 2 + i % 11;
    const int block = 1 + i % 3;
    const PointSet x = gaussian_points(g, m, p * block);
    const auto ks = block_kernels(p, block);
    const SpectralBundle b = build_bundle(ks, x);
    std::vector<oracle::ExplicitFeatureMap> maps;
    for (const auto& k : ks) maps.emplace_back(k, p * block);
    Vector mu(p);
    for (int k = 0; k < p; ++k) mu(k) = unif(g);
    const Vector sigma = rademacher_draw(draw_seed(opt.seed, 5000 + i), 0, m);
    for (int r = 1; r <= b.total_rank(); ++r) {
      const double fast = projected_sigma_norm(b, mu, r, sigma);
      const double slow = oracle::explicit_projection_norm(maps, mu, r, sigma, x);
      const double scale = std::max(std::abs(slow), 1e-12 * std::sqrt(static_cast<double>(m)));
      worst = std::max(worst, std::abs(fast - slow) / scale);
      ++comparisons;
    }
  }
  res.passed = worst <= 1e-8;
  res.detail = {{"instances", 100}, {"comparisons", comparisons}, {"worst_relative_error", worst}};
  return res;
}

CheckResult check_exhaustive_consistency(const VerifyOptions& opt) {
  CheckResult res{"exhaustive_consistency", true, nlohmann::json::array()};
  auto g = rng_for(opt.seed, 601);
  for (int m : {4, 8, 10}) {
    const PointSet x = gaussian_points(g, m, 3);
    const KernelSpec k = normalize_spec(KernelSpec::linear(), x);
    const SpectralBundle b = build_bundle({k}, x);
    ConstraintParams cp = feasible_params(b, 2, 0.6);
    cp.nu = 4.0;
    const double exact = oracle::exhaustive_rademacher({oracle::ExplicitFeatureMap(k, 3)}, cp, x);
    const RademacherEstimate fast = rademacher_exhaustive(b, cp);
    const RademacherEstimate mc = estimate_rademacher(b, cp, opt.draws, draw_seed(opt.seed, 6000 + m));
    const bool exact_ok = std::abs(fast.estimate - exact) <= 1e-10 * std::max(1.0, exact);
    const bool mc_ok = std::abs(mc.estimate - exact) <= 3.0 * mc.std_error;
    res.passed = res.passed && exact_ok && mc_ok;
    res.detail.push_back({{"p", 1},
                          {"m", m},
                          {"oracle", exact},
                          {"fast_exhaustive", fast.estimate},
                          {"mc", mc.estimate},
                          {"mc_std_error", mc.std_error},
                          {"passed", exact_ok && mc_ok}});
  }
  {
    // Two kernels: the oracle's grid supremum can only undershoot the
    // region-wise exact supremum.
    const int m = 6;
    const PointSet x = gaussian_points(g, m, 4);
    const auto ks = normalized(block_kernels(2, 2), x);
    const SpectralBundle b = build_bundle(ks, x);
    const ConstraintParams cp = feasible_params(b, 2, 0.5);
    const double grid =
        oracle::exhaustive_rademacher({oracle::ExplicitFeatureMap(ks[0], 4), oracle::ExplicitFeatureMap(ks[1], 4)}, cp, x, 800);
    const RademacherEstimate fast = rademacher_exhaustive(b, cp);
    const bool ok = grid <= fast.estimate + 1e-9 && fast.estimate <= 1.01 * grid;
    res.passed = res.passed && ok;
    res.detail.push_back({{"p", 2}, {"m", m}, {"oracle_grid", grid}, {"fast_exhaustive", fast.estimate}, {"passed", ok}});
  }
  return res;
}

CheckResult check_comparison_terms(const VerifyOptions& opt) {
  CheckResult res{"comparison_terms", true, {}};
  auto g = rng_for(opt.seed, 701);
  int cases = 0;
  for (int i = 0; i < 12; ++i) {
    const int p = 1 + i % 3;
    const int m = 2 + (i * 5) % 7;
    const PointSet x = gaussian_points(g, m, 2 * p);
    const SpectralBundle b = build_bundle(block_kernels(p, 2), x);
    const double standard = oracle::standard_term_bruteforce(b);
    for (int r = 1; r <= p * m; ++r) {
      const ComplexityTerms t = compare_complexity_terms(b, r);
      res.passed = res.passed && t.coupled == oracle::coupled_term_bruteforce(b, r) && t.standard == standard;
      ++cases;
    }
  }
  res.detail = {{"cases", cases}};
  return res;
}

CheckResult check_concentration(const VerifyOptions& opt) {
  BoxGenerator gen{{{0.95, 0.25}, {0.9, 0.3}}};
  ConcentrationConfig cc;
  cc.sizes = opt.concentration_sizes;
  cc.trials = opt.concentration_trials;
  cc.r = 2;
  cc.delta = 0.05;
  cc.seed = draw_seed(opt.seed, 801);
  const ConcentrationReport rep = concentration_experiment(gen, cc);
  bool ok = rep.slope >= -0.7 && rep.slope <= -0.3;
  for (const auto& row : rep.rows) ok = ok && row.rate >= 1.0 - cc.delta;
  return {"concentration", ok, to_json(rep)};
}

CheckResult check_configured_data(const RunConfig& cfg, const VerifyOptions& opt) {
  const LabeledData s = load_labeled(cfg.labeled_path, cfg.format, cfg.dim);
  const auto kernels = resolve_kernels(cfg, s.points);
  const SpectralBundle b = build_bundle(kernels, s.points);
  const int p = b.num_kernels();
  const int m = static_cast<int>(s.points.rows());
  const RademacherEstimate est = estimate_rademacher(b, cfg.constraints, cfg.rademacher_draws, draw_seed(opt.seed, 901));
  Eigengap gap = eigengap_plugin(b, cfg.constraints.r);
  if (cfg.exact_gap) gap = Eigengap{*cfg.exact_gap, *cfg.exact_gap <= 0.0, false};
  const BoundReport bound = complexity_bound(cfg.constraints, p, m, gap);
  const bool ok = est.estimate - 3.0 * est.std_error <= bound.total;
  return {"configured_data_upper_bound",
          ok,
          {{"p", p},
           {"m", m},
           {"estimate", est.estimate},
           {"std_error", est.std_error},
           {"lower_estimate", est.lower_estimate},
           {"bound", to_json(bound)}}};
}

VerifyReport run_verification(const RunConfig& cfg) {
  const VerifyOptions opt = verify_options(cfg);
  VerifyReport rep;
  rep.checks.push_back(check_eigengap_example());
  rep.checks.push_back(check_lower_bound_sandwich(opt));
  rep.checks.push_back(check_khintchine(opt));
  rep.checks.push_back(check_massart(opt));
  rep.checks.push_back(check_spectral_identity(opt));
  rep.checks.push_back(check_projection_oracle(opt));
  rep.checks.push_back(check_exhaustive_consistency(opt));
  rep.checks.push_back(check_comparison_terms(opt));
  rep.checks.push_back(check_concentration(opt));
  if (!cfg.labeled_path.empty() && !cfg.kernels.empty()) rep.checks.push_back(check_configured_data(cfg, opt));
  return rep;
}

}  // namespace cndr
