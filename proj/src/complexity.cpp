#include "cndr/complexity.hpp"

#include "cndr/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace cndr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct MeanStd {
  double mean = 0.0;
  double std_error = 0.0;
};

// Fixed-order aggregation so results do not depend on the thread count.
MeanStd summarize(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  }
  return out;
}

nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

void require_unit(const Vector& v) {
  if (v.size() == 0 || std::abs(v.norm() - 1.0) > 1e-10) throw InputError("vector must have unit norm");
}

// Runs f(i) for i in [0, n) and stores the result, optionally in parallel.
// Exceptions thrown inside the parallel region are rethrown afterwards.
template <class F>
std::vector<double> map_draws(long long n, bool parallel, F&& f) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (!parallel) {
    for (long long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = f(i);
    return out;
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

RademacherEstimate run_estimate(const SpectralBundle& bundle, const ConstraintParams& params,
                                long long n_draws, std::uint64_t seed, bool parallel) {
  if (n_draws < 1) throw InputError("number of Rademacher draws must be >= 1");
  const RademacherSup sup(bundle, params);
  const int m = bundle.sample_size;
  const auto values = map_draws(n_draws, parallel, [&](long long i) {
    return sup.value(rademacher_draw(seed, static_cast<std::uint64_t>(i), m));
  });
  RademacherEstimate est;
  const MeanStd s = summarize(values);
  est.estimate = s.mean;
  est.std_error = s.std_error;
  est.draws = n_draws;
  est.seed = seed;
  est.method = sup.analytic() ? "analytic" : "region-enumeration";
  est.lower_estimate = !sup.analytic();
  est.regions = sup.num_regions();
  if (sup.analytic()) {
    const auto duals = map_draws(n_draws, parallel, [&](long long i) {
      return sup.dual_norm_value(rademacher_draw(seed, static_cast<std::uint64_t>(i), m));
    });
    est.dual_norm_estimate = summarize(duals).mean;
    est.has_dual_norm = true;
  }
  return est;
}

// Orthonormal basis of the column space (singular values above a relative cutoff).
Matrix column_basis(const Matrix& a) {
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? 1e-10 * s(0) * static_cast<double>(std::max(a.rows(), a.cols())) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

std::uint64_t draw_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Vector rademacher_draw(std::uint64_t seed, std::uint64_t index, int m) {
  std::mt19937_64 gen(draw_seed(seed, index));
  Vector s(m);
  std::uint64_t bits = 0;
  for (int n = 0; n < m; ++n) {
    if (n % 64 == 0) bits = gen();
    s(n) = ((bits >> (n % 64)) & 1ULL) ? 1.0 : -1.0;
  }
  return s;
}

Vector sign_vector(std::uint64_t code, int m) {
  Vector s(m);
  for (int n = 0; n < m; ++n) s(n) = ((code >> n) & 1ULL) ? 1.0 : -1.0;
  return s;
}

// ---------------------------------------------------------------------------

RademacherSup::RademacherSup(const SpectralBundle& bundle, const ConstraintParams& params)
    : bundle_(bundle), params_(params) {
  const int p = bundle.num_kernels();
  if (p < 1) throw InputError("empty bundle");
  params.validate(p);
  if (params.r > bundle.total_rank()) throw ConfigError("constraints.r exceeds the total effective rank");
  max_count_ = params.r;

  if (p == 1) {
    analytic_ = true;
    const double prefix = prefix_sum(bundle, 0, params.r);
    mu_star_ = std::min(1.0, params.lambda_r / prefix);
    if (mu_star_ * params.nu < 1.0 - 1e-12)
      throw InfeasibleError("the weight set M is empty: Lambda_(r) forces mu below 1/nu");
    return;
  }

  const Vector uniform = Vector::Constant(p, 1.0 / p);
  for (const auto& counts : enumerate_count_vectors(bundle, params.r)) {
    Region reg;
    reg.counts = counts;
    reg.cut = kyfan_cut(bundle, counts);
    reg.region.A.resize(0, p);
    reg.region.nu = params.nu;
    reg.region.add_row(Vector::Ones(p), 1.0);
    reg.region.add_row(reg.cut, params.lambda_r);
    const WeightRegion cone = selection_cone(bundle, counts, 1e-9);
    for (Eigen::Index i = 0; i < cone.A.rows(); ++i) reg.region.add_row(cone.A.row(i).transpose(), cone.b(i));
    const auto start = interior_point(reg.region, uniform);
    if (!start) continue;
    reg.start = *start;
    regions_.push_back(std::move(reg));
  }
  if (regions_.empty()) throw InfeasibleError("the weight set M has no interior for these constraints");
}

double RademacherSup::value(const Vector& sigma) const {
  const int m = bundle_.sample_size;
  if (sigma.size() != m) throw InputError("sign vector length does not match the sample");
  const int p = bundle_.num_kernels();

  // a_{k,j} lambda_bar_{k,j} for the leading pairs of each kernel.
  std::vector<Vector> weighted(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) {
    const auto& sp = bundle_.spectra[static_cast<std::size_t>(k)];
    const int nk = std::min(max_count_, sp.effective_rank);
    const Vector proj = sp.vectors.leftCols(nk).transpose() * sigma;
    weighted[static_cast<std::size_t>(k)] = sp.values.head(nk).cwiseProduct(proj.cwiseAbs2());
  }

  if (analytic_) {
    const double s = mu_star_ * weighted[0].head(params_.r).sum();
    return std::sqrt(static_cast<double>(m) * std::max(s, 0.0)) / m;
  }

  struct Candidate {
    double bound;
    std::size_t idx;
    Vector c;
  };
  std::vector<Candidate> cands;
  cands.reserve(regions_.size());
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& reg = regions_[i];
    Vector c(p);
    for (int k = 0; k < p; ++k) c(k) = weighted[static_cast<std::size_t>(k)].head(reg.counts[static_cast<std::size_t>(k)]).sum();
    double bound = c.maxCoeff();
    double ratio = 0.0;
    for (int k = 0; k < p; ++k)
      if (reg.cut(k) > 0.0) ratio = std::max(ratio, c(k) / reg.cut(k));
    bound = std::min(bound, params_.lambda_r * ratio);
    cands.push_back({bound, i, std::move(c)});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.bound > b.bound; });

  BarrierOptions opts;
  opts.gap_tol = 1e-10;
  double best = 0.0;
  for (const auto& cand : cands) {
    if (cand.bound <= best) break;
    const double scale = cand.c.maxCoeff();
    if (!(scale > 0.0)) continue;
    const auto& reg = regions_[cand.idx];
    const Vector x = barrier_minimize(reg.region, reg.start, 0.0, Vector::Zero(p), -cand.c / scale, opts);
    best = std::max(best, cand.c.dot(x));
  }
  return std::sqrt(static_cast<double>(m) * best) / m;
}

double RademacherSup::dual_norm_value(const Vector& sigma) const {
  if (!analytic_) throw InputError("dual-norm value is defined for a single kernel only");
  const int m = bundle_.sample_size;
  if (sigma.size() != m) throw InputError("sign vector length does not match the sample");
  const auto& sp = bundle_.spectra[0];
  const Vector proj = sp.vectors.leftCols(params_.r).transpose() * sigma;
  return std::sqrt(params_.lambda_r / m) * proj.cwiseAbs().maxCoeff();
}

RademacherEstimate estimate_rademacher(const SpectralBundle& bundle, const ConstraintParams& params,
                                       long long n_draws, std::uint64_t seed) {
  return run_estimate(bundle, params, n_draws, seed, true);
}

RademacherEstimate estimate_rademacher_serial(const SpectralBundle& bundle,
                                              const ConstraintParams& params, long long n_draws,
                                              std::uint64_t seed) {
  return run_estimate(bundle, params, n_draws, seed, false);
}

RademacherEstimate rademacher_exhaustive(const SpectralBundle& bundle, const ConstraintParams& params) {
  const int m = bundle.sample_size;
  if (m > 24) throw InputError("exhaustive enumeration is limited to m <= 24");
  const RademacherSup sup(bundle, params);
  const long long n = 1LL << m;
  const auto values = map_draws(n, true, [&](long long code) {
    return sup.value(sign_vector(static_cast<std::uint64_t>(code), m));
  });
  RademacherEstimate est;
  est.estimate = summarize(values).mean;
  est.draws = n;
  est.exhaustive = true;
  est.method = sup.analytic() ? "analytic" : "region-enumeration";
  est.lower_estimate = !sup.analytic();
  est.regions = sup.num_regions();
  if (sup.analytic()) {
    const auto duals = map_draws(n, true, [&](long long code) {
      return sup.dual_norm_value(sign_vector(static_cast<std::uint64_t>(code), m));
    });
    est.dual_norm_estimate = summarize(duals).mean;
    est.has_dual_norm = true;
  }
  return est;
}

// ---------------------------------------------------------------------------

BoundReport complexity_bound(const ConstraintParams& params, int p, int m, const Eigengap& gap) {
  if (p < 1 || m < 1) throw InputError("bound requires p >= 1 and m >= 1");
  params.validate(p);
  BoundReport r;
  r.p = p;
  r.m = m;
  r.params = params;
  r.kappa = kappa(p, params.delta);
  r.gap = gap.value;
  r.gap_plugin = gap.plugin;
  r.gap_degenerate = gap.degenerate || !(gap.value > 0.0);
  r.log_p_ceil = p == 1 ? 0 : static_cast<int>(std::ceil(std::log(static_cast<double>(p))));
  const double sm = std::sqrt(static_cast<double>(m));
  r.term1 = std::sqrt(2.0 * (params.lambda_r + r.kappa) * std::log(2.0 * p * m) / m);
  if (r.gap_degenerate) {
    r.term2 = kInf;
    r.diagnostics.push_back("eigengap below 1e-12: learning-kernels term is unbounded");
  } else {
    r.term2 = 8.0 * r.kappa * params.nu * std::sqrt(kEta0 * std::exp(1.0) * r.log_p_ceil) / (r.gap * sm);
  }
  if (p == 1) {
    r.term2_vanishes = true;
    r.diagnostics.push_back("p = 1: ceil(log p) = 0 removes the learning-kernels term");
  }
  r.precondition_ok = !r.gap_degenerate && sm > 2.0 * r.kappa / r.gap;
  if (!r.precondition_ok) r.diagnostics.push_back("precondition sqrt(m) > 2 kappa / gap does not hold");
  if (r.gap_plugin) r.diagnostics.push_back("gap is the empirical plug-in value");
  r.total = r.term1 + r.term2;
  r.lower_bound = lower_bound_value(params.lambda_r, m);
  r.lower_bound_applies = p == 1;
  return r;
}

BoundReport margin_bound(const ConstraintParams& params, int p, int m, const Eigengap& gap,
                         double margin_loss_value, double rho) {
  if (!(rho > 0.0)) throw InputError("margin rho must be positive");
  if (!(margin_loss_value >= 0.0 && margin_loss_value <= 1.0)) throw InputError("margin loss must lie in [0, 1]");
  BoundReport r = complexity_bound(params, p, m, gap);
  r.has_margin_bound = true;
  r.rho = rho;
  r.margin_loss = margin_loss_value;
  r.confidence_term = 3.0 * std::sqrt(std::log(4.0 * p / params.delta) / (2.0 * m));
  r.margin_bound = margin_loss_value + (2.0 / rho) * r.total + r.confidence_term;
  return r;
}

BoundReport margin_bound(const Model& model, const PointSet& points, const Vector& labels, double rho) {
  const double loss = margin_loss(model, points, labels, rho);
  const Eigengap gap = eigengap_plugin(model.bundle, model.params.r);
  return margin_bound(model.params, model.num_kernels(), static_cast<int>(points.rows()), gap, loss, rho);
}

double lower_bound_value(double lambda_r, int m) {
  if (m < 1 || !(lambda_r > 0.0)) throw InputError("lower bound requires m >= 1 and Lambda > 0");
  return std::sqrt(lambda_r / (2.0 * m));
}

double projection_drift_bound(double kappa_value, double nu, double gap, int m) {
  if (!(gap > 0.0)) return kInf;
  return 8.0 * kappa_value * nu / (gap * std::sqrt(static_cast<double>(m)));
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["p"] = r.p;
  j["m"] = r.m;
  j["r"] = r.params.r;
  j["lambda_r"] = r.params.lambda_r;
  j["nu"] = r.params.nu;
  j["delta"] = r.params.delta;
  j["kappa"] = num(r.kappa);
  j["gap"] = num(r.gap);
  j["gap_plugin"] = r.gap_plugin;
  j["gap_degenerate"] = r.gap_degenerate;
  j["log_p_ceil"] = r.log_p_ceil;
  j["eta0"] = r.eta0;
  j["term1"] = num(r.term1);
  j["term2"] = num(r.term2);
  j["total"] = num(r.total);
  j["precondition_ok"] = r.precondition_ok;
  j["term2_vanishes"] = r.term2_vanishes;
  if (r.has_margin_bound) {
    j["rho"] = r.rho;
    j["margin_loss"] = r.margin_loss;
    j["confidence_term"] = num(r.confidence_term);
    j["margin_bound"] = num(r.margin_bound);
  }
  j["lower_bound"] = num(r.lower_bound);
  j["lower_bound_applies"] = r.lower_bound_applies;
  j["diagnostics"] = r.diagnostics;
  return j;
}

nlohmann::json to_json(const RademacherEstimate& r) {
  nlohmann::json j;
  j["estimate"] = num(r.estimate);
  j["std_error"] = num(r.std_error);
  j["draws"] = r.draws;
  j["seed"] = r.seed;
  j["method"] = r.method;
  j["exhaustive"] = r.exhaustive;
  j["lower_estimate"] = r.lower_estimate;
  j["regions"] = r.regions;
  if (r.has_dual_norm) j["dual_norm_estimate"] = num(r.dual_norm_estimate);
  return j;
}

std::string csv_header(const BoundReport&) {
  return "p,m,r,lambda_r,nu,delta,kappa,gap,gap_plugin,term1,term2,total,precondition_ok,rho,margin_loss,"
         "confidence_term,margin_bound,lower_bound";
}

std::string csv_row(const BoundReport& r) {
  auto f = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  std::ostringstream os;
  os << r.p << ',' << r.m << ',' << r.params.r << ',' << f(r.params.lambda_r) << ',' << f(r.params.nu) << ','
     << f(r.params.delta) << ',' << f(r.kappa) << ',' << f(r.gap) << ',' << (r.gap_plugin ? 1 : 0) << ','
     << f(r.term1) << ',' << f(r.term2) << ',' << f(r.total) << ',' << (r.precondition_ok ? 1 : 0) << ',';
  if (r.has_margin_bound) {
    os << f(r.rho) << ',' << f(r.margin_loss) << ',' << f(r.confidence_term) << ',' << f(r.margin_bound);
  } else {
    os << ",,,";
  }
  os << ',' << f(r.lower_bound);
  return os.str();
}

// ---------------------------------------------------------------------------

LowerBoundInstance lower_bound_construct(int m, int r, double lambda_r, double delta) {
  if (r < 1 || r >= m) throw InputError("lower-bound construction needs 1 <= r < m");
  if (2 * (r / 2) >= m) throw InputError("lower-bound construction needs more points for rank r");
  if (!(lambda_r > 0.0)) throw InputError("Lambda_(r) must be positive");
  const double two_pi = 2.0 * std::acos(-1.0);
  PointSet x(m, r);
  for (int n = 0; n < m; ++n) {
    for (int i = 0; i < r; ++i) {
      const double w = 1.0 / (1.0 + i);
      double f = 1.0;
      if (i > 0) {
        const int freq = (i + 1) / 2;
        const double angle = two_pi * freq * n / m;
        f = (i % 2 == 1) ? std::cos(angle) : std::sin(angle);
      }
      x(n, i) = w * f;
    }
  }
  LowerBoundInstance inst;
  inst.points = x;
  inst.labels.resize(m);
  for (int n = 0; n < m; ++n) inst.labels(n) = (n % 2 == 0) ? 1.0 : -1.0;
  inst.kernel = normalize_spec(KernelSpec::linear(), x);
  inst.bundle = build_bundle({inst.kernel}, x);
  const auto& sp = inst.bundle.spectra[0];
  if (sp.effective_rank != r) throw NumericError("lower-bound construction did not reach rank r");
  for (int j = 0; j + 1 < r; ++j)
    if (sp.values(j) - sp.values(j + 1) <= 1e-12 * sp.values(0))
      throw NumericError("lower-bound construction produced repeated eigenvalues");
  if (lambda_r > sp.values(0))
    throw InputError("Lambda_(r) exceeds the largest normalized eigenvalue of the construction");
  inst.params.r = r;
  inst.params.lambda_r = lambda_r;
  inst.params.delta = delta;
  inst.params.nu = 2.0 * prefix_sum(inst.bundle, 0, r) / lambda_r + 1.0;
  return inst;
}

// ---------------------------------------------------------------------------

McValue khintchine_check(const Vector& v, long long n_draws, std::uint64_t seed) {
  require_unit(v);
  if (n_draws < 1) throw InputError("number of draws must be >= 1");
  const int m = static_cast<int>(v.size());
  const auto vals = map_draws(n_draws, true, [&](long long i) {
    return std::abs(v.dot(rademacher_draw(seed, static_cast<std::uint64_t>(i), m)));
  });
  const MeanStd s = summarize(vals);
  return {s.mean, s.std_error, n_draws};
}

double khintchine_exact(const Vector& v) {
  require_unit(v);
  const int m = static_cast<int>(v.size());
  if (m > 24) throw InputError("exact enumeration is limited to m <= 24");
  const long long n = 1LL << m;
  const auto vals = map_draws(n, true, [&](long long c) {
    return std::abs(v.dot(sign_vector(static_cast<std::uint64_t>(c), m)));
  });
  return summarize(vals).mean;
}

namespace {

double massart_value(const SpectralBundle& bundle, const Vector& sigma) {
  double best = -kInf;
  for (const auto& sp : bundle.spectra) best = std::max(best, (sp.vectors.transpose() * sigma).cwiseAbs().maxCoeff());
  return best;
}

}  // namespace

McValue massart_check(const SpectralBundle& bundle, long long n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw InputError("number of draws must be >= 1");
  const int m = bundle.sample_size;
  const auto vals = map_draws(n_draws, true, [&](long long i) {
    return massart_value(bundle, rademacher_draw(seed, static_cast<std::uint64_t>(i), m));
  });
  const MeanStd s = summarize(vals);
  return {s.mean, s.std_error, n_draws};
}

double massart_exact(const SpectralBundle& bundle) {
  const int m = bundle.sample_size;
  if (m > 24) throw InputError("exact enumeration is limited to m <= 24");
  const long long n = 1LL << m;
  const auto vals = map_draws(n, true, [&](long long c) {
    return massart_value(bundle, sign_vector(static_cast<std::uint64_t>(c), m));
  });
  return summarize(vals).mean;
}

double massart_bound(int p, int m) {
  if (p < 1 || m < 1) throw InputError("massart bound requires p, m >= 1");
  return std::sqrt(2.0 * std::log(2.0 * p * m));
}

EigengapExample eigengap_proposition(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("epsilon must be positive");
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a(0, 0) = 1.0 + epsilon;
  a(1, 1) = 1.0;
  b(0, 0) = 1.0;
  b(1, 1) = 1.0 + epsilon;
  const Eigenpairs ea = eigendecompose(a);
  const Eigenpairs eb = eigendecompose(b);
  const Matrix pa = ea.vectors.col(0) * ea.vectors.col(0).transpose();
  const Matrix pb = eb.vectors.col(0) * eb.vectors.col(0).transpose();
  const Vector dp = eigendecompose(pa - pb).values;
  const Vector dab = eigendecompose(a - b).values;
  EigengapExample ex;
  ex.epsilon = epsilon;
  ex.lhs_operator = dp.cwiseAbs().maxCoeff();
  ex.lhs_trace = dp.cwiseAbs().sum();
  ex.diff_norm = dab.cwiseAbs().maxCoeff();
  ex.gap = ea.values(0) - ea.values(1);
  ex.rhs = 2.0 * ex.diff_norm / ex.gap;
  return ex;
}

// ---------------------------------------------------------------------------

int BoxGenerator::dim() const {
  int d = 0;
  for (const auto& b : blocks) d += static_cast<int>(b.size());
  return d;
}

void BoxGenerator::validate() const {
  if (blocks.empty()) throw InputError("generator needs at least one block");
  for (const auto& b : blocks) {
    if (b.empty()) throw InputError("generator blocks must be non-empty");
    double s = 0.0;
    for (double a : b) {
      if (!(a > 0.0) || !std::isfinite(a)) throw InputError("generator scales must be positive");
      s += a * a;
    }
    if (s > 1.0 + 1e-12) throw InputError("generator block violates K(x, x) <= 1 on its support");
  }
}

PointSet BoxGenerator::sample(int n, std::uint64_t seed) const {
  validate();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  PointSet x(n, dim());
  for (int i = 0; i < n; ++i) {
    int c = 0;
    for (const auto& b : blocks)
      for (double a : b) x(i, c++) = a * unit(gen);
  }
  return x;
}

std::vector<KernelSpec> BoxGenerator::kernels() const {
  std::vector<KernelSpec> out;
  std::size_t c = 0;
  for (const auto& b : blocks) {
    std::vector<std::size_t> coords;
    for (std::size_t i = 0; i < b.size(); ++i) coords.push_back(c++);
    out.push_back(KernelSpec::coordinate_linear(coords));
  }
  return out;
}

double BoxGenerator::exact_gap(int r) const {
  if (r < 1) throw InputError("rank must be >= 1");
  double gap = kInf;
  for (const auto& b : blocks) {
    std::vector<double> ev;
    for (double a : b) ev.push_back(a * a / 3.0);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    auto at = [&](int j) { return j < static_cast<int>(ev.size()) ? ev[static_cast<std::size_t>(j)] : 0.0; };
    gap = std::min(gap, at(r - 1) - at(r));
  }
  return gap;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs at least two points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("log-log fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConcentrationReport concentration_experiment(const BoxGenerator& gen, const ConcentrationConfig& cfg) {
  gen.validate();
  const int p = gen.num_kernels();
  const int d = gen.dim();
  if (cfg.r < 1 || cfg.r >= d) throw InputError("concentration rank must satisfy 1 <= r < dimension");
  if (cfg.trials < 1 || cfg.test_functions < 1) throw InputError("concentration needs trials and test functions");
  ConcentrationReport rep;
  rep.nu = cfg.nu > 0.0 ? cfg.nu : static_cast<double>(p) * p;
  rep.kappa = kappa(p, cfg.delta);
  rep.gap = gen.exact_gap(cfg.r);
  if (!(rep.gap > 1e-12)) throw InputError("generator has a degenerate eigengap at this rank");

  // Feature map of the uniform mixture: sqrt(mu_k) times the block coordinates.
  Vector feature_scale(d);
  {
    int c = 0;
    for (const auto& b : gen.blocks)
      for (std::size_t i = 0; i < b.size(); ++i) feature_scale(c++) = std::sqrt(1.0 / p);
  }

  std::vector<double> sizes, means;
  for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
    const int m = cfg.sizes[si];
    if (m < 2) throw InputError("sample sizes must be >= 2");
    const double bound = projection_drift_bound(rep.kappa, rep.nu, rep.gap, m);
    struct TrialOut {
      bool ok = true;
      double sum = 0.0;
      double max = 0.0;
      double drift = 0.0;
    };
    std::vector<TrialOut> outs(static_cast<std::size_t>(cfg.trials));
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 4)
    for (int t = 0; t < cfg.trials; ++t) {
      try {
        const std::uint64_t base = draw_seed(cfg.seed, (static_cast<std::uint64_t>(si) << 32) | static_cast<std::uint64_t>(t));
        const PointSet s = gen.sample(m, draw_seed(base, 0)) * feature_scale.asDiagonal();
        const PointSet u = gen.sample(m, draw_seed(base, 1)) * feature_scale.asDiagonal();
        const Matrix cs = s.transpose() * s / static_cast<double>(m);
        const Matrix cu = u.transpose() * u / static_cast<double>(m);
        const Eigenpairs es = eigendecompose(cs);
        const Eigenpairs eu = eigendecompose(cu);
        const Matrix ps = es.vectors.leftCols(cfg.r) * es.vectors.leftCols(cfg.r).transpose();
        const Matrix pu = eu.vectors.leftCols(cfg.r) * eu.vectors.leftCols(cfg.r).transpose();
        TrialOut o;
        o.drift = std::abs(eu.values.head(cfg.r).sum() - es.values.head(cfg.r).sum());
        std::mt19937_64 g(draw_seed(base, 2));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int f = 0; f < cfg.test_functions; ++f) {
          Vector v(d);
          for (int c = 0; c < d; ++c) v(c) = normal(g);
          v.normalize();
          const double diff = ((pu - ps) * v).norm();
          o.sum += diff;
          o.max = std::max(o.max, diff);
          if (diff > bound) o.ok = false;
        }
        outs[static_cast<std::size_t>(t)] = o;
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);

    ConcentrationRow row;
    row.m = m;
    row.trials = cfg.trials;
    row.bound = bound;
    double total = 0.0, drift = 0.0;
    for (const auto& o : outs) {
      row.satisfied += o.ok ? 1 : 0;
      total += o.sum;
      row.max_difference = std::max(row.max_difference, o.max);
      drift += o.drift;
      row.max_kyfan_drift = std::max(row.max_kyfan_drift, o.drift);
    }
    row.rate = static_cast<double>(row.satisfied) / cfg.trials;
    row.mean_difference = total / (static_cast<double>(cfg.trials) * cfg.test_functions);
    row.mean_kyfan_drift = drift / cfg.trials;
    rep.rows.push_back(row);
    sizes.push_back(m);
    means.push_back(row.mean_difference);
  }
  rep.slope = sizes.size() >= 2 ? loglog_slope(sizes, means) : 0.0;
  return rep;
}

nlohmann::json to_json(const ConcentrationReport& r) {
  nlohmann::json j;
  j["kappa"] = r.kappa;
  j["gap"] = r.gap;
  j["gap_plugin"] = false;
  j["nu"] = r.nu;
  j["slope"] = num(r.slope);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"m", row.m},
                         {"trials", row.trials},
                         {"satisfied", row.satisfied},
                         {"rate", row.rate},
                         {"mean_difference", row.mean_difference},
                         {"max_difference", row.max_difference},
                         {"bound", num(row.bound)},
                         {"mean_kyfan_drift", row.mean_kyfan_drift},
                         {"max_kyfan_drift", row.max_kyfan_drift}});
  }
  return j;
}

// ---------------------------------------------------------------------------

ComplexityTerms compare_complexity_terms(const SpectralBundle& bundle, int r) {
  if (r < 1) throw InputError("rank must be >= 1");
  const double m = static_cast<double>(bundle.sample_size);
  const auto uni = union_spectrum(bundle, Vector::Ones(bundle.num_kernels()));
  ComplexityTerms t;
  for (std::size_t i = 0; i < uni.size() && static_cast<int>(i) < r; ++i) t.coupled += m * uni[i].value;
  for (const auto& sp : bundle.spectra) {
    double trace = 0.0;
    for (Eigen::Index j = 0; j < sp.values.size(); ++j) trace += m * sp.values(j);
    t.standard = std::max(t.standard, trace);
  }
  return t;
}

std::vector<double> independence_diagnostic(const std::vector<KernelSpec>& kernels,
                                            const PointSet& sample, const PointSet& grid) {
  const std::size_t p = kernels.size();
  if (p == 0) throw InputError("no kernels given");
  std::vector<Matrix> bases;
  for (const auto& k : kernels) bases.push_back(column_basis(cross_gram(k, grid, sample)));
  std::vector<double> out(p, 1.0);
  if (p == 1) return out;
  for (std::size_t k = 0; k < p; ++k) {
    Eigen::Index cols = 0;
    for (std::size_t l = 0; l < p; ++l)
      if (l != k) cols += bases[l].cols();
    Matrix others(grid.rows(), cols);
    Eigen::Index c = 0;
    for (std::size_t l = 0; l < p; ++l) {
      if (l == k) continue;
      others.middleCols(c, bases[l].cols()) = bases[l];
      c += bases[l].cols();
    }
    const Matrix qo = column_basis(others);
    const Matrix& qk = bases[k];
    if (qk.cols() == 0 || qo.cols() == 0) continue;
    Eigen::JacobiSVD<Matrix> svd(qk.transpose() * qo, Eigen::ComputeThinU);
    const Vector dir = qk * svd.matrixU().col(0);
    out[k] = (dir - qo * (qo.transpose() * dir)).norm();
  }
  return out;
}

}  // namespace cndr
