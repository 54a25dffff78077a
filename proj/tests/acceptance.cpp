// Acceptance runner. `acceptance` runs every criterion, `acceptance N` only
// criterion N. One line per criterion; exit status 1 if any fails.

#include "cndr/complexity.hpp"
#include "cndr/config.hpp"
#include "cndr/demo.hpp"
#include "cndr/io.hpp"
#include "cndr/oracle.hpp"
#include "cndr/trainer.hpp"
#include "cndr/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace cndr;

namespace {

constexpr std::uint64_t kSeed = 20240611;

// Tolerances.
constexpr double kEigengapTol = 1e-12;
constexpr double kOracleRelTol = 1e-8;
constexpr double kKhintchineExactTol = 1e-10;
constexpr double kSpectralRelTol = 1e-8;
constexpr double kTrainEnergyTol = 1e-8;
constexpr double kTrainObjectiveTol = 1e-9;
constexpr double kSigmas = 3.0;
constexpr double kConcentrationRate = 0.95;
constexpr double kSlopeCenter = -0.5;
constexpr double kSlopeHalfWidth = 0.2;
constexpr long long kDraws = 100000;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VerifyOptions options(long long draws) {
  VerifyOptions o;
  o.seed = kSeed;
  o.draws = draws;
  return o;
}

PointSet gaussian(std::mt19937_64& g, int m, int d) {
  std::normal_distribution<double> n;
  PointSet x(m, d);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = n(g);
  return x;
}

std::vector<KernelSpec> block_kernels(int p, int width, const PointSet& anchor) {
  std::vector<KernelSpec> ks;
  for (int k = 0; k < p; ++k) {
    std::vector<std::size_t> c;
    for (int i = 0; i < width; ++i) c.push_back(static_cast<std::size_t>(k * width + i));
    ks.push_back(normalize_spec(KernelSpec::coordinate_linear(c), anchor));
  }
  return ks;
}

Outcome eigengap_example() {
  double worst = 0.0;
  for (double eps : {1e-6, 0.5, 1.0}) {
    const EigengapExample ex = eigengap_proposition(eps);
    worst = std::max({worst, std::abs(ex.lhs_operator - 2.0), std::abs(ex.rhs - 2.0)});
  }
  const EigengapExample ex = eigengap_proposition(0.5);
  return {worst <= kEigengapTol,
          fmt("operator-norm lhs %.15g, rhs %.15g, trace-norm lhs %.15g", ex.lhs_operator, ex.rhs, ex.lhs_trace)};
}

Outcome lower_bound_sandwich() {
  const LowerBoundInstance inst = lower_bound_construct(32, 4, 0.4);
  const RademacherEstimate est = estimate_rademacher(inst.bundle, inst.params, kDraws, kSeed);
  const double lower = lower_bound_value(0.4, 32);
  return {est.estimate + kSigmas * est.std_error >= lower,
          fmt("estimate %.6g, stderr %.3g, lower bound %.7g", est.estimate, est.std_error, lower)};
}

Outcome upper_bound_dominance() {
  std::mt19937_64 g(kSeed + 3);
  int ok = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int p = 1 + i % 3;
    const int m = (i / 3) % 2 == 0 ? 16 : 32;
    const PointSet x = gaussian(g, m, 2 * p);
    const SpectralBundle b = build_bundle(block_kernels(p, 2, x), x);
    ConstraintParams cp;
    cp.r = 2;
    cp.nu = 2.0 * p * p;
    cp.delta = 0.05;
    cp.lambda_r = 0.5 * kyfan_r(b, Vector::Ones(p), cp.r);
    const RademacherEstimate est = estimate_rademacher(b, cp, 5000, draw_seed(kSeed, 300 + i));
    const BoundReport bound = complexity_bound(cp, p, m, eigengap_plugin(b, cp.r));
    if (est.estimate - kSigmas * est.std_error <= bound.total) ++ok;
    if (std::isfinite(bound.total)) worst_ratio = std::max(worst_ratio, est.estimate / bound.total);
  }
  return {ok == 20, fmt("%.0f/20 instances dominated, largest estimate/bound %.4g", ok, worst_ratio)};
}

Outcome oracle_equivalence() {
  const CheckResult c = check_projection_oracle(options(0));
  const double worst = c.detail["worst_relative_error"].get<double>();
  return {worst <= kOracleRelTol, fmt("%.0f comparisons, worst relative error %.3g",
                                      c.detail["comparisons"].get<double>(), worst)};
}

Outcome exhaustive_consistency() {
  std::mt19937_64 g(kSeed + 5);
  bool ok = true;
  double worst = 0.0;
  for (int m : {2, 4, 6, 8, 10}) {
    const PointSet x = gaussian(g, m, 3);
    const KernelSpec k = normalize_spec(KernelSpec::linear(), x);
    const SpectralBundle b = build_bundle({k}, x);
    ConstraintParams cp;
    cp.r = std::min(2, b.total_rank());
    cp.nu = 4.0;
    cp.lambda_r = 0.6 * kyfan_r(b, Vector::Ones(1), cp.r);
    const double exact = oracle::exhaustive_rademacher({oracle::ExplicitFeatureMap(k, 3)}, cp, x);
    const RademacherEstimate mc = estimate_rademacher(b, cp, kDraws, draw_seed(kSeed, 500 + m));
    const double z = std::abs(mc.estimate - exact) / mc.std_error;
    worst = std::max(worst, z);
    ok = ok && std::abs(mc.estimate - exact) <= kSigmas * mc.std_error;
  }
  return {ok, fmt("m in {2,4,6,8,10}, largest |MC - exhaustive| / stderr %.3g", worst)};
}

Outcome khintchine() {
  const CheckResult c = check_khintchine(options(kDraws));
  const double margin = c.detail["worst_margin"].get<double>();
  const double exact = c.detail["exact_m4_max_error"].get<double>();
  return {margin >= 0.0 && exact <= kKhintchineExactTol,
          fmt("worst (estimate + 3 stderr - 2^-1/2) %.4g, exact m=4 error %.3g", margin, exact)};
}

Outcome massart() {
  const CheckResult c = check_massart(options(kDraws));
  double worst = -INFINITY;
  for (const auto& row : c.detail)
    worst = std::max(worst, row["estimate"].get<double>() - row["bound"].get<double>());
  return {c.passed, fmt("20 instances, largest estimate - bound %.4g", worst)};
}

Outcome spectral_identity() {
  const CheckResult c = check_spectral_identity(options(0));
  const double worst = c.detail["worst_relative_error"].get<double>();
  return {worst <= kSpectralRelTol, fmt("50 instances, worst relative error %.3g", worst)};
}

Outcome concentration() {
  BoxGenerator gen{{{0.95, 0.25}, {0.9, 0.3}}};
  ConcentrationConfig cc;
  cc.sizes = {50, 100, 200, 400};
  cc.trials = 200;
  cc.r = 2;
  cc.delta = 0.05;
  cc.seed = draw_seed(kSeed, 900);
  const ConcentrationReport rep = concentration_experiment(gen, cc);
  double min_rate = 1.0;
  for (const auto& row : rep.rows) min_rate = std::min(min_rate, row.rate);
  const bool ok = min_rate >= kConcentrationRate && std::abs(rep.slope - kSlopeCenter) <= kSlopeHalfWidth;
  return {ok, fmt("exact gap %.4g, lowest satisfaction rate %.3f, slope %.4f", rep.gap, min_rate, rep.slope)};
}

bool sound(const TrainResult& a, const TrainResult& b, const ConstraintParams& cp, std::string& why) {
  if (!check_M(a.model.mu, cp, a.model.bundle).feasible()) why = "mu outside M";
  else if (a.model.weight_energy() > 1.0 + kTrainEnergyTol) why = "weight energy above 1";
  else if (a.trace.to_csv() != b.trace.to_csv() || model_to_json(a.model).dump() != model_to_json(b.model).dump())
    why = "rerun differs";
  for (std::size_t i = 1; why.empty() && i < a.trace.rows.size(); ++i)
    if (!a.trace.rows[i].flip && a.trace.rows[i].objective > a.trace.rows[i - 1].objective + kTrainObjectiveTol)
      why = "objective increased without a flip";
  return why.empty();
}

Outcome trainer_soundness() {
  int runs = 0;
  std::string why;
  std::mt19937_64 g(kSeed + 10);
  for (int inst = 0; inst < 3 && why.empty(); ++inst) {
    const int p = 1 + inst;
    const PointSet x = gaussian(g, 24, 2 * p);
    const PointSet u = gaussian(g, 30, 2 * p);
    Vector y(24);
    for (int i = 0; i < 24; ++i) y(i) = x(i, 0) - 0.7 * x(i, 2 * p - 1) > 0 ? 1.0 : -1.0;
    const auto ks = block_kernels(p, 2, u);
    ConstraintParams cp;
    cp.r = 2;
    cp.nu = 2.0 * p * p;
    cp.lambda_r = 0.6 * kyfan_r(build_bundle(ks, u), Vector::Ones(p), cp.r);
    for (TrainMode mode : {TrainMode::coupled, TrainMode::discrete, TrainMode::continuous}) {
      for (Loss loss : {Loss::hinge, Loss::logistic}) {
        TrainConfig cfg;
        cfg.mode = mode;
        cfg.loss = loss;
        cfg.max_rounds = 20;
        const TrainResult a = train(x, y, u, ks, cp, cfg);
        const TrainResult b = train(x, y, u, ks, cp, cfg);
        ++runs;
        if (!sound(a, b, cp, why)) break;
      }
      if (!why.empty()) break;
    }
  }
  if (why.empty()) {
    const RunConfig cfg = load_config(std::string(CNDR_SOURCE_DIR) + "/configs/default.cfg");
    const LabeledData s = load_labeled(cfg.labeled_path, cfg.format, cfg.dim);
    const PointSet u = load_unlabeled(cfg.unlabeled_path, cfg.format, static_cast<int>(s.points.cols()));
    const auto ks = resolve_kernels(cfg, u);
    const TrainResult a = train(s.points, s.labels, u, ks, cfg.constraints, cfg.train);
    const TrainResult b = train(s.points, s.labels, u, ks, cfg.constraints, cfg.train);
    ++runs;
    sound(a, b, cfg.constraints, why);
  }
  if (why.empty()) {
    const DemoResult a = run_demo();
    const DemoResult b = run_demo();
    ConstraintParams plain;
    plain.r = 1;
    plain.lambda_r = 1.0;
    plain.nu = 1.0;
    ConstraintParams coupled = plain;
    coupled.nu = 8.0;
    runs += 2;
    if (sound(a.plain, b.plain, plain, why)) sound(a.coupled, b.coupled, coupled, why);
  }
  return {why.empty(), why.empty() ? fmt("%.0f runs sound and reproducible", runs) : why};
}

Outcome demo() {
  const auto t0 = std::chrono::steady_clock::now();
  const DemoResult r = run_demo();
  const double secs = seconds_since(t0);
  return {r.plain_error >= 0.5 && r.coupled_error == 0.0 && secs < 5.0,
          fmt("plain error %.3g, coupled error %.3g, %.3g s", r.plain_error, r.coupled_error, secs)};
}

Outcome comparison_terms() {
  const CheckResult c = check_comparison_terms(options(0));
  return {c.passed, fmt("%.0f (instance, r) cases, exact match required", c.detail["cases"].get<double>())};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"eigengap example", eigengap_example},
      {"lower-bound sandwich", lower_bound_sandwich},
      {"upper-bound dominance", upper_bound_dominance},
      {"projection oracle equivalence", oracle_equivalence},
      {"exhaustive vs Monte Carlo", exhaustive_consistency},
      {"Khintchine", khintchine},
      {"Massart", massart},
      {"spectral identity", spectral_identity},
      {"projection concentration", concentration},
      {"trainer soundness", trainer_soundness},
      {"four-point demo", demo},
      {"comparison terms", comparison_terms},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [1-%zu]\n", criteria.size());
      return 2;
    }
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.passed;
    std::printf("criterion %2zu %-30s %s  (%s; %.2f s)\n", i + 1, criteria[i].name, o.passed ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
