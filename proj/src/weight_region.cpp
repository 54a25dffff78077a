#include "cndr/weight_region.hpp"

#include "cndr/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace cndr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rows scaled to unit norm so slacks are Euclidean distances. Zero rows are
// dropped when trivially satisfied and rejected otherwise.
struct NormalizedRows {
  Matrix A;
  Vector b;
  bool contradictory = false;
};

NormalizedRows normalize_rows(const WeightRegion& region) {
  NormalizedRows out;
  const Eigen::Index p = region.A.cols();
  std::vector<Eigen::Index> keep;
  std::vector<double> norms;
  for (Eigen::Index i = 0; i < region.A.rows(); ++i) {
    const double n = region.A.row(i).norm();
    if (n == 0.0) {
      if (region.b(i) < 0.0) out.contradictory = true;
      continue;
    }
    keep.push_back(i);
    norms.push_back(n);
  }
  out.A.resize(static_cast<Eigen::Index>(keep.size()), p);
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.A.row(static_cast<Eigen::Index>(r)) = region.A.row(keep[r]) / norms[r];
    out.b(static_cast<Eigen::Index>(r)) = region.b(keep[r]) / norms[r];
  }
  return out;
}

// Damped Newton on a self-concordant-style barrier. `fn` evaluates value,
// gradient and Hessian and returns false outside the domain.
template <class Fn>
Vector newton_minimize(Fn&& fn, Vector z, int max_iter) {
  const Eigen::Index n = z.size();
  double f = 0.0;
  Vector g(n);
  Matrix h(n, n);
  if (!fn(z, f, g, h)) throw NumericError("barrier: start point outside the domain");
  for (int it = 0; it < max_iter; ++it) {
    Eigen::LDLT<Matrix> ldlt(h);
    Vector step = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      const double ridge = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      Matrix hr = h;
      hr.diagonal().array() += ridge;
      step = hr.ldlt().solve(-g);
      if (!step.allFinite()) break;
    }
    const double decrement = -g.dot(step);
    if (!(decrement > 1e-11)) break;
    double alpha = 1.0;
    bool moved = false;
    Vector zt(n);
    double ft = 0.0;
    Vector gt(n);
    Matrix ht(n, n);
    for (int ls = 0; ls < 80; ++ls) {
      zt = z + alpha * step;
      if (fn(zt, ft, gt, ht) && ft <= f - 0.01 * alpha * decrement) {
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
    z = zt;
    f = ft;
    g = gt;
    h = ht;
  }
  return z;
}

}  // namespace

void WeightRegion::add_row(const Vector& a, double rhs) {
  if (A.cols() == 0 && A.rows() == 0) A.resize(0, a.size());
  if (a.size() != A.cols()) throw InputError("weight region row has wrong length");
  A.conservativeResize(A.rows() + 1, Eigen::NoChange);
  A.row(A.rows() - 1) = a.transpose();
  b.conservativeResize(b.size() + 1);
  b(b.size() - 1) = rhs;
}

double WeightRegion::max_violation(const Vector& mu) const {
  if (mu.size() != dim()) throw InputError("weight vector has wrong length");
  double worst = -kInf;
  double inv = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if (!(mu(k) > 0.0)) return kInf;
    inv += 1.0 / mu(k);
  }
  worst = std::max(worst, inv - nu);
  if (A.rows() > 0) worst = std::max(worst, (A * mu - b).maxCoeff());
  return worst;
}

std::optional<Vector> interior_point(const WeightRegion& region, const Vector& hint) {
  const int p = region.dim();
  if (p < 1) throw InputError("weight region has no coordinates");
  if (!(region.nu > 0.0)) return std::nullopt;
  const NormalizedRows rows = normalize_rows(region);
  if (rows.contradictory) return std::nullopt;
  const Eigen::Index nr = rows.A.rows();
  const double nu = region.nu;

  Vector mu0 = hint;
  if (mu0.size() != p || !(mu0.minCoeff() > 0.0) || !mu0.allFinite()) mu0 = Vector::Constant(p, 1.0 / p);

  auto constraint_values = [&](const Vector& mu, Vector& gl, double& ginv) {
    gl = rows.A * mu - rows.b;
    ginv = mu.cwiseInverse().sum() / nu - 1.0;
  };

  Vector gl;
  double ginv = 0.0;
  constraint_values(mu0, gl, ginv);
  double s0 = ginv;
  if (nr > 0) s0 = std::max(s0, gl.maxCoeff());
  s0 = std::max(s0 + 1.0, -0.5);

  // z = (mu, s); minimize s subject to g_i(mu) < s, s > -1, mu > 0.
  Vector z(p + 1);
  z.head(p) = mu0;
  z(p) = s0;
  const double terms = static_cast<double>(nr + 2 + p);

  double t = 1.0;
  for (int outer = 0; outer < 60; ++outer) {
    auto fn = [&](const Vector& zz, double& f, Vector& g, Matrix& h) {
      const Vector mu = zz.head(p);
      const double s = zz(p);
      if (!(mu.minCoeff() > 0.0) || !(s > -1.0)) return false;
      Vector glv;
      double gi = 0.0;
      constraint_values(mu, glv, gi);
      const Vector slack = (s - glv.array()).matrix();
      const double islack = s - gi;
      if (nr > 0 && !(slack.minCoeff() > 0.0)) return false;
      if (!(islack > 0.0)) return false;
      f = t * s - std::log(s + 1.0) - std::log(islack) - mu.array().log().sum();
      if (nr > 0) f -= slack.array().log().sum();
      g.setZero(p + 1);
      h.setZero(p + 1, p + 1);
      g(p) = t - 1.0 / (s + 1.0);
      h(p, p) = 1.0 / ((s + 1.0) * (s + 1.0));
      for (Eigen::Index i = 0; i < nr; ++i) {
        Vector dh(p + 1);
        dh.head(p) = -rows.A.row(i).transpose();
        dh(p) = 1.0;
        g -= dh / slack(i);
        h += dh * dh.transpose() / (slack(i) * slack(i));
      }
      {
        // h_inv = s - (sum 1/mu)/nu + 1; grad of sum 1/mu is -1/mu^2.
        Vector dh(p + 1);
        dh.head(p) = (mu.array().square().inverse() / nu).matrix();
        dh(p) = 1.0;
        g -= dh / islack;
        h += dh * dh.transpose() / (islack * islack);
        const Vector curv = (2.0 * mu.array().cube().inverse() / nu).matrix();
        h.topLeftCorner(p, p).diagonal() += curv / islack;
      }
      g.head(p) -= mu.cwiseInverse();
      h.topLeftCorner(p, p).diagonal() += mu.array().square().inverse().matrix();
      f = std::isfinite(f) ? f : kInf;
      return std::isfinite(f);
    };
    z = newton_minimize(fn, z, 200);
    const double s = z(p);
    if (s - terms / t > 0.0) return std::nullopt;  // lower bound on the optimum is positive
    if (terms / t < 1e-10) break;
    t *= 10.0;
  }
  const Vector mu = z.head(p);
  if (!(z(p) < -1e-13)) return std::nullopt;
  if (region.max_violation(mu) >= 0.0) return std::nullopt;
  return mu;
}

Vector barrier_minimize(const WeightRegion& region, const Vector& start, double quad,
                        const Vector& anchor, const Vector& linear, const BarrierOptions& opts) {
  const int p = region.dim();
  if (start.size() != p || anchor.size() != p || linear.size() != p)
    throw InputError("barrier_minimize: dimension mismatch");
  if (!(region.max_violation(start) < 0.0))
    throw InputError("barrier_minimize: start point is not strictly feasible");
  const NormalizedRows rows = normalize_rows(region);
  const Eigen::Index nr = rows.A.rows();
  const double nu = region.nu;
  const double terms = static_cast<double>(nr + 1 + p);

  Vector mu = start;
  double t = 1.0;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    auto fn = [&](const Vector& x, double& f, Vector& g, Matrix& h) {
      if (!(x.minCoeff() > 0.0)) return false;
      const Vector slack = rows.b - rows.A * x;
      if (nr > 0 && !(slack.minCoeff() > 0.0)) return false;
      const double psi = nu - x.cwiseInverse().sum();
      if (!(psi > 0.0)) return false;
      const Vector d = x - anchor;
      f = t * (0.5 * quad * d.squaredNorm() + linear.dot(x)) - std::log(psi) - x.array().log().sum();
      if (nr > 0) f -= slack.array().log().sum();
      if (!std::isfinite(f)) return false;
      g = t * (quad * d + linear);
      h = Matrix::Identity(p, p) * (t * quad);
      for (Eigen::Index i = 0; i < nr; ++i) {
        const Vector a = rows.A.row(i).transpose();
        g += a / slack(i);
        h += a * a.transpose() / (slack(i) * slack(i));
      }
      const Vector dpsi = x.array().square().inverse().matrix();
      g -= dpsi / psi;
      h += dpsi * dpsi.transpose() / (psi * psi);
      h.diagonal() += (2.0 * x.array().cube().inverse()).matrix() / psi;
      g -= x.cwiseInverse();
      h.diagonal() += x.array().square().inverse().matrix();
      return true;
    };
    mu = newton_minimize(fn, mu, opts.max_newton);
    if (terms / t <= opts.gap_tol) break;
    t *= 10.0;
  }
  return mu;
}

}  // namespace cndr
