#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "percoldp/pair_measure.hpp"

namespace percoldp {

struct RateValue {
  double value = 0.0;  // meaningful when finite
  bool infinite = false;
  std::optional<PairMeasure> witness;
};

/// Relative entropy of mu against the reference kernel:
/// sum mu(x,e) log[mu(x,e) / ((mu)_1(x) pi(x,e))] when mu is balanced, +inf
/// otherwise. Zero-mass terms contribute 0.
RateValue entropy_I(const PairMeasure& mu, const TransitionKernel& reference, double balance_tol = 1e-9);

struct HBarOptions {
  int max_iter = 200;
  /// Stop when the soft Bellman residual
  /// max_x |log sum_e pi e^{f + h(x+e)} - h(x) - value| drops below tol and
  /// the last improvement step moved the kernel by at most sqrt(tol).
  double tol = 1e-12;
  /// Starting kernel; the reference kernel when absent.
  const TransitionKernel* warm_start = nullptr;
};

struct HBarResult {
  double value = 0.0;  // <f, mu*> - I(mu*)
  PairMeasure witness;
  TransitionKernel kernel;       // optimal tilted kernel
  std::vector<double> potential;  // relative value h, zero at the anchor
  double residual = 0.0;
  int iterations = 0;
};

/// sup over balanced mu of <f, mu> - I(mu), maximized over kernel/density
/// pairs by entropy-regularized policy iteration: evaluate the current kernel
/// (invariant density, Poisson equation for the relative value h), then
/// replace it by the optimal tilt pi e^{f + h(x+e)} normalized per site.
/// Throws ConvergenceError when the residual stays above tol.
HBarResult h_bar(const TransitionKernel& reference, std::span<const double> f_table, const HBarOptions& opts = {});
HBarResult h_bar(const TransitionKernel& reference, const TestFunction& f, const HBarOptions& opts = {});

/// sum mu(x, e) * e, a d-vector.
std::vector<double> xi_contraction(const PairMeasure& mu);

/// Tensor grid of `count` points per axis spanning [-half_width, half_width]^d.
std::vector<std::vector<double>> box_grid(int dim, double half_width, std::size_t count);

struct LevelOneCurve {
  std::vector<std::vector<double>> theta;  // tilt grid
  std::vector<double> hbar;                // h_bar(f_theta) on the tilt grid
  std::vector<std::vector<double>> x;      // velocity grid
  std::vector<double> J;
  std::vector<std::size_t> argmax;  // index into theta of the maximizer for each x
  std::vector<bool> saturated;      // maximizer on the boundary of the tilt grid
};

/// J(x) = max over the tilt grid of <theta, x> - h_bar(f_theta). Tilts are
/// evaluated in parallel and assembled in grid order.
LevelOneCurve level1_rate(const TransitionKernel& reference, const std::vector<std::vector<double>>& theta_grid,
                          const std::vector<std::vector<double>>& x_grid);

struct ConstrainedRate {
  double value = 0.0;          // I(mu*) at the witness
  std::vector<double> theta;   // dual multiplier
  std::vector<double> xi;      // xi(mu*), equal to the target within tol
  PairMeasure witness;
  int iterations = 0;
};

/// inf { I(mu) : xi(mu) = x } over balanced measures. The dual multiplier
/// theta is found by Newton's method on theta -> h_bar(f_theta) - <theta, x>,
/// whose gradient is xi of the h_bar witness minus x; the returned value is the
/// entropy of that witness, which satisfies the constraint to tol.
ConstrainedRate constrained_rate(const TransitionKernel& reference, std::span<const double> x, double tol = 1e-9,
                                 int max_iter = 50);

struct ConvexityReport {
  std::size_t trials = 0;
  std::size_t violations = 0;  // above the 1e-12 slack
  double max_violation = 0.0;  // max of I(mix) - (x I(mu) + (1-x) I(nu))
};

/// Midpoint-style probes I(x mu + (1-x) nu) <= x I(mu) + (1-x) I(nu) on
/// random balanced measures with x uniform in (0, 1).
ConvexityReport convexity_probe(const TransitionKernel& reference, std::size_t trials, CounterRng& rng);

/// CSV "x1,...,xd,J".
void write_level1_csv(const LevelOneCurve& curve, std::ostream& out);
/// CSV "theta1,...,thetad,hbar".
void write_hbar_csv(const LevelOneCurve& curve, std::ostream& out);

}  // namespace percoldp
