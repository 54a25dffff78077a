#include "cndr/trainer.hpp"

#include "cndr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace cndr {

namespace {

constexpr double kMuFloor = 1e-12;

std::string format_set(const IndexSet& set) {
  std::string s;
  for (const auto& pr : set) {
    if (!s.empty()) s += ';';
    s += std::to_string(pr.kernel) + ":" + std::to_string(pr.index);
  }
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_loss(Loss loss, const Vector& h, const Vector& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) s += loss_value(loss, y(i) * h(i));
  return s / static_cast<double>(h.size());
}

// Everything the alternating scheme mutates.
struct State {
  Vector mu;
  Matrix weights;  // p x u
  IndexSet selection;
  Matrix xi;  // continuous mode only
};

class Problem {
 public:
  Problem(const FeatureTable& features, const Vector& labels, const SpectralBundle& bundle,
          const ConstraintParams& params, const TrainConfig& cfg, bool continuous)
      : f_(features), y_(labels), params_(params), cfg_(cfg), continuous_(continuous) {
    for (int k = 0; k < bundle.num_kernels(); ++k)
      for (int j = 0; j < bundle.spectra[static_cast<std::size_t>(k)].effective_rank; ++j)
        all_pairs_.push_back({k, j});
  }

  const std::vector<PairIndex>& all_pairs() const { return all_pairs_; }

  Matrix mask(const State& st) const {
    if (continuous_) return st.xi;
    Matrix m = Matrix::Zero(st.weights.rows(), st.weights.cols());
    for (const auto& pr : st.selection) m(pr.kernel, pr.index) = 1.0;
    return m;
  }

  Vector scores(const State& st) const {
    const Matrix m = mask(st);
    const Eigen::Index n = y_.size();
    Vector h = Vector::Zero(n);
    for (std::size_t k = 0; k < f_.size(); ++k) {
      for (Eigen::Index j = 0; j < f_[k].cols(); ++j) {
        const double coef = m(static_cast<Eigen::Index>(k), j) * st.weights(static_cast<Eigen::Index>(k), j);
        if (coef == 0.0) continue;
        h += coef * f_[k].col(j);
      }
    }
    return h;
  }

  double objective(const State& st) const { return mean_loss(cfg_.loss, scores(st), y_); }

  ActiveDesign design(const State& st) const {
    ActiveDesign d;
    const Matrix m = mask(st);
    if (continuous_) {
      d.pairs = all_pairs_;
    } else {
      d.pairs = st.selection;
    }
    d.columns.resize(y_.size(), static_cast<Eigen::Index>(d.pairs.size()));
    for (std::size_t q = 0; q < d.pairs.size(); ++q) {
      const auto& pr = d.pairs[q];
      d.columns.col(static_cast<Eigen::Index>(q)) =
          m(pr.kernel, pr.index) * f_[static_cast<std::size_t>(pr.kernel)].col(pr.index);
    }
    return d;
  }

  // Re-optimizes the coefficients of the active pairs at the current mu.
  void optimize_w(State& st) const {
    const ActiveDesign d = design(st);
    if (d.pairs.empty()) return;
    Vector w0(static_cast<Eigen::Index>(d.pairs.size()));
    Vector mu_q(w0.size());
    for (std::size_t q = 0; q < d.pairs.size(); ++q) {
      w0(static_cast<Eigen::Index>(q)) = st.weights(d.pairs[q].kernel, d.pairs[q].index);
      mu_q(static_cast<Eigen::Index>(q)) = st.mu(d.pairs[q].kernel);
    }
    const Vector w = w_step(d, w0, mu_q, y_, cfg_.loss, cfg_.inner_iters, cfg_.step);
    for (std::size_t q = 0; q < d.pairs.size(); ++q)
      st.weights(d.pairs[q].kernel, d.pairs[q].index) = w(static_cast<Eigen::Index>(q));
  }

  // Drops coefficients of pairs that are no longer selected.
  void restrict_to_selection(State& st) const {
    if (continuous_) return;
    Matrix kept = Matrix::Zero(st.weights.rows(), st.weights.cols());
    for (const auto& pr : st.selection) kept(pr.kernel, pr.index) = st.weights(pr.kernel, pr.index);
    st.weights = kept;
  }

  // Per-pair usefulness: loss decrease from re-fitting that pair alone over
  // its full coefficient range with all other pairs fixed.
  IndexSet greedy_selection(const State& st) const {
    const Vector h = scores(st);
    const Matrix m = mask(st);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(all_pairs_.size());
    for (std::size_t q = 0; q < all_pairs_.size(); ++q) {
      const auto& pr = all_pairs_[q];
      const Vector col = f_[static_cast<std::size_t>(pr.kernel)].col(pr.index);
      const Vector base = h - (m(pr.kernel, pr.index) * st.weights(pr.kernel, pr.index)) * col;
      const double radius = std::sqrt(st.mu(pr.kernel));
      auto fn = [&](double t) { return mean_loss(cfg_.loss, base + (t * radius) * col, y_); };
      const double before = mean_loss(cfg_.loss, base, y_);
      double lo = -1.0, hi = 1.0;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      double fa = fn(a), fb = fn(b);
      for (int it = 0; it < 80; ++it) {
        if (fa <= fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - g * (hi - lo);
          fa = fn(a);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + g * (hi - lo);
          fb = fn(b);
        }
      }
      const double best = std::min({fa, fb, fn(-1.0), fn(1.0)});
      scored.emplace_back(before - best, q);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& x, const auto& z) { return x.first > z.first; });
    IndexSet out;
    for (int i = 0; i < params_.r; ++i) out.push_back(all_pairs_[scored[static_cast<std::size_t>(i)].second]);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Projected-gradient pass on xi over the capped simplex.
  bool xi_descent(State& st) const {
    const Eigen::Index P = static_cast<Eigen::Index>(all_pairs_.size());
    auto pack = [&](const Matrix& xi) {
      Vector v(P);
      for (Eigen::Index q = 0; q < P; ++q) v(q) = xi(all_pairs_[q].kernel, all_pairs_[q].index);
      return v;
    };
    auto unpack = [&](const Vector& v, Matrix& xi) {
      for (Eigen::Index q = 0; q < P; ++q) xi(all_pairs_[q].kernel, all_pairs_[q].index) = v(q);
    };
    Vector x = pack(st.xi);
    double fcur = objective(st);
    double t = cfg_.step;
    bool moved = false;
    State trial = st;
    for (int it = 0; it < cfg_.inner_iters; ++it) {
      unpack(x, trial.xi);
      const Vector h = scores(trial);
      Vector g(P);
      for (Eigen::Index q = 0; q < P; ++q) {
        const auto& pr = all_pairs_[q];
        const double w = st.weights(pr.kernel, pr.index);
        double s = 0.0;
        if (w != 0.0) {
          const auto& col = f_[static_cast<std::size_t>(pr.kernel)];
          for (Eigen::Index i = 0; i < y_.size(); ++i)
            s += loss_derivative(cfg_.loss, y_(i) * h(i)) * y_(i) * w * col(i, pr.index);
        }
        g(q) = s / static_cast<double>(y_.size());
      }
      if (g.norm() == 0.0) break;
      bool accepted = false;
      while (t > 1e-14) {
        const Vector xn = project_capped_simplex(x - t * g, params_.r);
        unpack(xn, trial.xi);
        const double fn = objective(trial);
        if (fn < fcur) {
          x = xn;
          fcur = fn;
          accepted = true;
          t = std::min(2.0 * t, 1e6);
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      moved = true;
    }
    if (moved) unpack(x, st.xi);
    return moved;
  }

 private:
  const FeatureTable& f_;
  const Vector& y_;
  const ConstraintParams& params_;
  const TrainConfig& cfg_;
  bool continuous_;
  std::vector<PairIndex> all_pairs_;
};

IndexSet top_pairs_by_xi(const Matrix& xi, const std::vector<PairIndex>& pairs, int r) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xi(pairs[a].kernel, pairs[a].index) > xi(pairs[b].kernel, pairs[b].index);
  });
  IndexSet out;
  for (int i = 0; i < r && i < static_cast<int>(order.size()); ++i) out.push_back(pairs[order[static_cast<std::size_t>(i)]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view to_string(Loss loss) { return loss == Loss::hinge ? "hinge" : "logistic"; }

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::coupled: return "coupled";
    case TrainMode::discrete: return "discrete";
    case TrainMode::continuous: return "continuous";
  }
  return "unknown";
}

Loss loss_from_string(std::string_view name) {
  if (name == "hinge") return Loss::hinge;
  if (name == "logistic") return Loss::logistic;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "coupled") return TrainMode::coupled;
  if (name == "discrete" || name == "discrete-relaxed") return TrainMode::discrete;
  if (name == "continuous" || name == "continuous-relaxed") return TrainMode::continuous;
  throw ConfigError("unknown training mode '" + std::string(name) + "'");
}

double loss_value(Loss loss, double margin) {
  if (loss == Loss::hinge) return std::max(0.0, 1.0 - margin);
  if (margin > 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

double loss_derivative(Loss loss, double margin) {
  if (loss == Loss::hinge) return margin < 1.0 ? -1.0 : 0.0;
  if (margin > 0.0) {
    const double e = std::exp(-margin);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(margin));
}

void TrainConfig::validate() const {
  if (max_rounds < 1) throw ConfigError("train.max_rounds must be >= 1");
  if (inner_iters < 1) throw ConfigError("train.inner_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("train.tol must be positive");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("train.step must be positive");
  if (!(flip_margin >= 0.0) || flip_margin >= 1.0) throw ConfigError("train.flip_margin must lie in [0, 1)");
}

std::string TrainTrace::to_csv() const {
  std::ostringstream os;
  os << "round,objective,kyfan,l1,inv_sum,index_set,flip,mu_accepted,xi_accepted\n";
  for (const auto& r : rows) {
    os << r.round << ',' << format_double(r.objective) << ',' << format_double(r.kyfan) << ','
       << format_double(r.l1) << ',' << format_double(r.inv_sum) << ',' << r.index_set << ','
       << (r.flip ? 1 : 0) << ',' << (r.mu_accepted ? 1 : 0) << ',' << (r.xi_accepted ? 1 : 0) << '\n';
  }
  return os.str();
}

Vector w_step(const ActiveDesign& design, const Vector& w0, const Vector& mu, const Vector& labels,
              Loss loss, int iters, double step0) {
  const Eigen::Index q = design.columns.cols();
  const Eigen::Index n = labels.size();
  if (w0.size() != q || mu.size() != q || design.columns.rows() != n)
    throw InputError("w_step: dimension mismatch");
  if (q == 0) return w0;
  if (!(mu.minCoeff() > 0.0)) throw InputError("w_step: weights must be positive");
  const Vector root = mu.cwiseSqrt();
  const Matrix g_design = design.columns * root.asDiagonal();

  auto project = [](Vector z) {
    const double nz = z.norm();
    if (nz > 1.0) z /= nz;
    return z;
  };
  auto value = [&](const Vector& z) { return mean_loss(loss, g_design * z, labels); };

  Vector z = project(w0.cwiseQuotient(root));
  double f = value(z);
  double t = step0;
  for (int it = 0; it < iters; ++it) {
    const Vector h = g_design * z;
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = loss_derivative(loss, labels(i) * h(i)) * labels(i);
    const Vector grad = g_design.transpose() * d / static_cast<double>(n);
    if (grad.norm() == 0.0) break;
    bool accepted = false;
    while (t > 1e-14) {
      const Vector zn = project(z - t * grad);
      const double fn = value(zn);
      if (fn < f) {
        z = zn;
        f = fn;
        accepted = true;
        t = std::min(2.0 * t, 1e6);
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  return z.cwiseProduct(root);
}

Vector mu_direction(const Vector& energy) {
  if (energy.size() == 0 || (energy.array() <= 0.0).all()) return Vector();
  const Vector root = energy.cwiseMax(0.0).cwiseSqrt();
  const Vector dir = root / root.sum();
  return dir.cwiseMax(kMuFloor);
}

Vector project_capped_simplex(const Vector& v, double r) {
  const Eigen::Index n = v.size();
  if (r < 0.0 || r > static_cast<double>(n)) throw InputError("capped simplex: r out of range");
  auto mass = [&](double tau) { return (v.array() - tau).max(0.0).min(1.0).sum(); };
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).min(1.0).matrix();
}

void rescale_to_ball(Matrix& weights, const Vector& mu) {
  double e = 0.0;
  for (Eigen::Index k = 0; k < weights.rows(); ++k) e += weights.row(k).squaredNorm() / mu(k);
  const double s = std::max(1.0, std::sqrt(e));
  if (s > 1.0) weights /= s;
}

TrainResult train(const PointSet& s_points, const Vector& labels, const PointSet& u_points,
                  const std::vector<KernelSpec>& kernels, const ConstraintParams& params,
                  const TrainConfig& cfg) {
  if (kernels.empty()) throw ConfigError("at least one kernel is required");
  const SpectralBundle bundle = build_bundle(kernels, u_points);
  return train(s_points, labels, u_points, kernels, bundle, params, cfg);
}

TrainResult train(const PointSet& s_points, const Vector& labels, const PointSet& u_points,
                  const std::vector<KernelSpec>& kernels, const SpectralBundle& bundle,
                  const ConstraintParams& params, const TrainConfig& cfg) {
  cfg.validate();
  const int p = static_cast<int>(kernels.size());
  if (p == 0) throw ConfigError("at least one kernel is required");
  if (bundle.num_kernels() != p || bundle.sample_size != u_points.rows())
    throw InputError("bundle does not match the kernels and unlabeled sample");
  if (s_points.rows() == 0) throw InputError("empty labeled sample");
  if (labels.size() != s_points.rows()) throw InputError("label count does not match the labeled sample");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 1.0 && labels(i) != -1.0) throw InputError("labels must be -1 or +1");
  if (u_points.rows() < s_points.rows()) throw InputError("unlabeled sample must be at least as large as the labeled one");
  params.validate(p);
  if (params.r > bundle.total_rank()) throw ConfigError("constraints.r exceeds the total effective rank");
  bool some_rank = false;
  for (const auto& sp : bundle.spectra) some_rank = some_rank || sp.effective_rank >= params.r;
  if (!some_rank) throw ConfigError("no base kernel has effective rank >= constraints.r");

  const bool continuous = cfg.mode == TrainMode::continuous;
  const FeatureTable features = feature_table(bundle, kernels, u_points, s_points);
  Problem prob(features, labels, bundle, params, cfg, continuous);

  State st;
  st.mu = project_to_M(Vector::Constant(p, 1.0 / p), params, bundle);
  st.weights = Matrix::Zero(p, u_points.rows());
  st.selection = top_r_index_set(bundle, st.mu, params.r);
  if (continuous) {
    st.xi = Matrix::Zero(p, u_points.rows());
    const double share = static_cast<double>(params.r) / static_cast<double>(prob.all_pairs().size());
    for (const auto& pr : prob.all_pairs()) st.xi(pr.kernel, pr.index) = share;
  }

  TrainTrace trace;
  auto record = [&](int round, double obj, bool flip, bool mu_ok, bool xi_ok) {
    TraceRow row;
    row.round = round;
    row.objective = obj;
    row.kyfan = kyfan_r(bundle, st.mu, params.r);
    row.l1 = st.mu.sum();
    row.inv_sum = st.mu.cwiseInverse().sum();
    row.index_set = format_set(continuous ? top_pairs_by_xi(st.xi, prob.all_pairs(), params.r) : st.selection);
    row.flip = flip;
    row.mu_accepted = mu_ok;
    row.xi_accepted = xi_ok;
    trace.rows.push_back(row);
  };

  double obj = prob.objective(st);
  record(0, obj, false, false, false);

  std::map<IndexSet, double> seen;
  seen[st.selection] = obj;
  int stalls = 0;
  trace.stop_reason = "max_rounds";

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    const double start_obj = obj;
    bool flip = false;
    bool xi_ok = false;

    // Selection update.
    if (cfg.mode == TrainMode::continuous) {
      xi_ok = prob.xi_descent(st);
      obj = prob.objective(st);
    } else {
      const IndexSet cand = prob.greedy_selection(st);
      if (cand != st.selection) {
        State trial = st;
        trial.selection = cand;
        bool realizable = true;
        if (cfg.mode == TrainMode::coupled) {
          try {
            const WeightRegion cone = selection_cone(bundle, selection_counts(bundle, cand), cfg.flip_margin);
            trial.mu = project_to_M(st.mu, params, bundle, cone);
            realizable = top_r_index_set(bundle, trial.mu, params.r) == cand;
          } catch (const InfeasibleError&) {
            realizable = false;
          }
        }
        if (realizable) {
          prob.restrict_to_selection(trial);
          rescale_to_ball(trial.weights, trial.mu);
          prob.optimize_w(trial);
          const double trial_obj = prob.objective(trial);
          if (trial_obj < obj - cfg.tol) {
            st = std::move(trial);
            obj = trial_obj;
            flip = true;
            xi_ok = true;
          }
        }
      }
    }

    // Coefficients at fixed (mu, selection).
    {
      State trial = st;
      prob.optimize_w(trial);
      const double trial_obj = prob.objective(trial);
      if (trial_obj <= obj) {
        st = std::move(trial);
        obj = trial_obj;
      }
    }

    // Mixture weights, followed by a coefficient refit.
    bool mu_ok = false;
    {
      Vector energy(p);
      for (int k = 0; k < p; ++k) energy(k) = st.weights.row(k).squaredNorm();
      const Vector dir = mu_direction(energy);
      if (dir.size() == p) {
        try {
          State trial = st;
          if (cfg.mode == TrainMode::coupled) {
            const WeightRegion cone =
                selection_cone(bundle, selection_counts(bundle, st.selection), cfg.flip_margin);
            trial.mu = project_to_M(dir, params, bundle, cone);
          } else {
            trial.mu = project_to_M(dir, params, bundle);
          }
          const bool keeps_selection =
              cfg.mode != TrainMode::coupled || top_r_index_set(bundle, trial.mu, params.r) == st.selection;
          if (keeps_selection) {
            rescale_to_ball(trial.weights, trial.mu);
            prob.optimize_w(trial);
            const double trial_obj = prob.objective(trial);
            if (trial_obj <= obj) {
              st = std::move(trial);
              obj = trial_obj;
              mu_ok = true;
            }
          }
        } catch (const InfeasibleError&) {
          mu_ok = false;
        }
      }
    }

    record(round, obj, flip, mu_ok, xi_ok);

    if (flip) {
      auto it = seen.find(st.selection);
      if (it != seen.end() && it->second - obj <= cfg.tol) {
        trace.stop_reason = "cycle";
        break;
      }
      seen[st.selection] = obj;
    }
    if (start_obj - obj < cfg.tol) {
      if (++stalls >= 3) {
        trace.stop_reason = "converged";
        break;
      }
    } else {
      stalls = 0;
    }
  }

  TrainResult res;
  res.model.kernels = kernels;
  res.model.mu = st.mu;
  res.model.mode = continuous ? SelectionMode::continuous : SelectionMode::discrete;
  res.model.selection = continuous ? top_pairs_by_xi(st.xi, prob.all_pairs(), params.r) : st.selection;
  res.model.xi = st.xi;
  res.model.weights = st.weights;
  res.model.anchor = u_points;
  res.model.bundle = bundle;
  res.model.params = params;
  res.train_scores = scores_from_features(res.model, features);
  res.objective = mean_loss(cfg.loss, res.train_scores, labels);
  res.trace = std::move(trace);
  return res;
}

}  // namespace cndr
