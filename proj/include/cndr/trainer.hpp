#pragma once

#include "cndr/constraints.hpp"
#include "cndr/hypothesis.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cndr {

enum class Loss { hinge, logistic };
enum class TrainMode { coupled, discrete, continuous };

std::string_view to_string(Loss loss);
std::string_view to_string(TrainMode mode);
Loss loss_from_string(std::string_view name);
TrainMode train_mode_from_string(std::string_view name);

double loss_value(Loss loss, double margin);
// Derivative with respect to the margin y*h (hinge: -1 below 1, else 0).
double loss_derivative(Loss loss, double margin);

struct TrainConfig {
  Loss loss = Loss::hinge;
  TrainMode mode = TrainMode::coupled;
  int max_rounds = 50;
  int inner_iters = 200;
  double step = 1.0;        // initial step of the projected-gradient line searches
  double tol = 1e-9;
  std::uint64_t seed = 0;
  double flip_margin = 1e-6;  // relative separation required when forcing a new index set

  void validate() const;
};

struct TraceRow {
  int round = 0;
  double objective = 0.0;
  double kyfan = 0.0;
  double l1 = 0.0;
  double inv_sum = 0.0;
  std::string index_set;
  bool flip = false;
  bool mu_accepted = false;
  bool xi_accepted = false;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::string stop_reason;

  std::string to_csv() const;
};

struct TrainResult {
  Model model;
  TrainTrace trace;
  double objective = 0.0;
  Vector train_scores;
};

// Labeled sample S (points, labels in {-1,+1}) and unlabeled anchor U. The
// kernels must already carry their final scale. Constraints on mu are taken
// against the U bundle.
TrainResult train(const PointSet& s_points, const Vector& labels, const PointSet& u_points,
                  const std::vector<KernelSpec>& kernels, const ConstraintParams& params,
                  const TrainConfig& cfg);

// Same with a prebuilt U bundle.
TrainResult train(const PointSet& s_points, const Vector& labels, const PointSet& u_points,
                  const std::vector<KernelSpec>& kernels, const SpectralBundle& u_bundle,
                  const ConstraintParams& params, const TrainConfig& cfg);

// Pieces of the alternating scheme, exposed for testing.

// Design for the w-subproblem: column q holds mask_q * c_q(x_i) for the active pairs.
struct ActiveDesign {
  std::vector<PairIndex> pairs;
  Matrix columns;  // m_s x q
};

// Projected gradient on the convex problem min (1/m) sum loss(y_i h_i) over
// {sum_q w_q^2 / mu_{k(q)} <= 1}, run in z = w / sqrt(mu) where the feasible
// set is the unit ball. Returns the new coefficients (one per design column).
Vector w_step(const ActiveDesign& design, const Vector& w0, const Vector& mu, const Vector& labels,
              Loss loss, int iters, double step0);

// Unconstrained minimizer direction of sum_k a_k / mu_k on the simplex:
// mu_k proportional to sqrt(a_k), floored at 1e-12. Returns nullopt-like empty
// vector when every a_k is zero.
Vector mu_direction(const Vector& energy);

// Euclidean projection onto {0 <= xi <= 1, sum xi = r}.
Vector project_capped_simplex(const Vector& v, double r);

// Rescales w so that sum_q w_q^2 / mu_{k(q)} <= 1.
void rescale_to_ball(Matrix& weights, const Vector& mu);

}  // namespace cndr
