#pragma once

#include <utility>
#include <vector>

#include "lsym/expansion.hpp"
#include "lsym/objective.hpp"

namespace lsym::verification {

using expansion::Point;
using expansion::Vec;
using Data = Dataset<double>;

struct GradientCheck {
  double grad_norm = 0;  ///< ||grad||_inf
  bool pass = false;
};

GradientCheck check_zero_gradient(const Point& theta, const Data& data, double tol);
GradientCheck check_zero_gradient(const Objective<double>& obj, const Vec& theta, double tol);

inline constexpr double kNullTol = 1e-4;

struct SpectrumReport {
  std::vector<double> eigenvalues;  ///< ascending
  double tol = kNullTol;
  int null_count = 0;               ///< #{|lambda| <= tol}
  double min_eig = 0;
  double trace = 0;                 ///< trace of the Hessian matrix itself
  double loss_at_point = 0;
  double grad_norm = 0;

  /// Reported with its threshold: min_eig < -threshold.
  bool strict_saddle(double threshold) const { return min_eig < -threshold; }
};

SpectrumReport hessian_report(const Objective<double>& obj, const Vec& theta, double tol = kNullTol);
SpectrumReport hessian_report(const Point& theta, const Data& data, double tol = kNullTol);

struct ProfileRow {
  std::size_t segment = 0;
  double t = 0;
  double loss = 0;
};

struct PathProfile {
  double max_abs_deviation = 0;
  std::vector<ProfileRow> rows;
};

PathProfile path_loss_profile(const expansion::PiecewisePath& path, const Data& data,
                              int samples_per_segment = 11);

/// Loss profile of the straight segment between two arbitrary points.
PathProfile segment_loss_profile(const Point& from, const Point& to, const Data& data,
                                 int samples = 11);

enum class Integrator { rk4, euler };

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  double step = 0;
  Integrator integrator = Integrator::rk4;
  int unit_dim = 1;  ///< states decode as consecutive units of this size
};

/// Default step 1e-2 / (1 + ||grad(theta0)||).
double default_flow_step(const Objective<double>& obj, const Vec& theta0);

/// Fixed-step integration of d theta/dt = -grad L. Throws std::runtime_error
/// on a non-finite state.
FlowTrajectory gradient_flow(const Objective<double>& obj, const Vec& theta0, double step,
                             double horizon, Integrator integrator = Integrator::rk4,
                             int unit_dim = 1);

/// max over t and pairs of ||unit_i(t) - unit_j(t)||_inf
double subspace_invariance_check(const FlowTrajectory& traj, const std::vector<std::pair<int, int>>& pairs);

/// min over t and pairs of ||unit_i(t) - unit_j(t)||_inf
double min_pairwise_distance(const FlowTrajectory& traj, const std::vector<std::pair<int, int>>& pairs);

/// Replicant region constant along the trajectory. Only valid for unit_dim == 1.
bool replicant_invariance_check(const FlowTrajectory& traj);

}  // namespace lsym::verification
