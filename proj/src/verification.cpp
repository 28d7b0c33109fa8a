#include "lsym/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace lsym::verification {

namespace {

Vec unit_of(const Vec& state, int unit_dim, int i) {
  return state.segment(Eigen::Index(i) * unit_dim, unit_dim);
}

void check_pairs(const FlowTrajectory& traj, const std::vector<std::pair<int, int>>& pairs) {
  if (traj.states.empty()) return;
  const auto units = traj.states.front().size() / traj.unit_dim;
  for (auto [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= units || j >= units) {
      throw std::invalid_argument("unit pair out of range");
    }
  }
}

}  // namespace

GradientCheck check_zero_gradient(const Objective<double>& obj, const Vec& theta, double tol) {
  const Vec g = obj.gradient(theta);
  const double norm = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
  return {norm, norm <= tol};
}

GradientCheck check_zero_gradient(const Point& theta, const Data& data, double tol) {
  return check_zero_gradient(make_objective(theta, data), theta.flat(), tol);
}

SpectrumReport hessian_report(const Objective<double>& obj, const Vec& theta, double tol) {
  const Matrix<double> H = hessian(obj, theta);
  Eigen::SelfAdjointEigenSolver<Matrix<double>> solver(H, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hessian_report: eigensolver failed");
  SpectrumReport report;
  report.tol = tol;
  const Vec& eig = solver.eigenvalues();
  report.eigenvalues.assign(eig.data(), eig.data() + eig.size());
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end());
  report.null_count = static_cast<int>(std::count_if(
      report.eigenvalues.begin(), report.eigenvalues.end(), [&](double l) { return std::abs(l) <= tol; }));
  report.min_eig = report.eigenvalues.empty() ? 0.0 : report.eigenvalues.front();
  report.trace = H.trace();
  Vec g;
  report.loss_at_point = obj.value_and_gradient(theta, g);
  report.grad_norm = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
  return report;
}

SpectrumReport hessian_report(const Point& theta, const Data& data, double tol) {
  return hessian_report(make_objective(theta, data), theta.flat(), tol);
}

PathProfile path_loss_profile(const expansion::PiecewisePath& path, const Data& data,
                              int samples_per_segment) {
  if (samples_per_segment < 2) throw std::invalid_argument("path_loss_profile needs >= 2 samples per segment");
  if (path.segments.empty()) throw std::invalid_argument("path_loss_profile: empty path");
  PathProfile profile;
  const double reference = loss(path.prototype.with_flat(path.segments.front().start), data);
  for (std::size_t s = 0; s < path.segments.size(); ++s) {
    for (int i = 0; i < samples_per_segment; ++i) {
      const double t = double(i) / (samples_per_segment - 1);
      const double value = loss(path.prototype.with_flat(path.at(s, t)), data);
      profile.rows.push_back({s, t, value});
      profile.max_abs_deviation = std::max(profile.max_abs_deviation, std::abs(value - reference));
    }
  }
  return profile;
}

PathProfile segment_loss_profile(const Point& from, const Point& to, const Data& data, int samples) {
  expansion::PiecewisePath path{from, {{from.flat(), to.flat()}}};
  return path_loss_profile(path, data, samples);
}

double default_flow_step(const Objective<double>& obj, const Vec& theta0) {
  return 1e-2 / (1 + obj.gradient(theta0).norm());
}

FlowTrajectory gradient_flow(const Objective<double>& obj, const Vec& theta0, double step,
                             double horizon, Integrator integrator, int unit_dim) {
  if (!(step > 0)) throw std::invalid_argument("gradient_flow: step must be positive");
  if (!(horizon >= step)) throw std::invalid_argument("gradient_flow: horizon must be >= step");
  if (unit_dim < 1 || theta0.size() % unit_dim != 0) {
    throw std::invalid_argument("gradient_flow: state is not a whole number of units");
  }
  FlowTrajectory traj;
  traj.step = step;
  traj.integrator = integrator;
  traj.unit_dim = unit_dim;
  const long steps = std::lround(horizon / step);
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(theta0);

  auto velocity = [&](const Vec& theta) -> Vec { return -obj.gradient(theta); };
  Vec theta = theta0;
  for (long n = 1; n <= steps; ++n) {
    if (integrator == Integrator::euler) {
      theta = theta + step * velocity(theta);
    } else {
      const Vec k1 = velocity(theta);
      const Vec k2 = velocity(theta + 0.5 * step * k1);
      const Vec k3 = velocity(theta + 0.5 * step * k2);
      const Vec k4 = velocity(theta + step * k3);
      theta = theta + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!theta.allFinite()) {
      throw std::runtime_error("gradient_flow: non-finite state at t = " + std::to_string(n * step));
    }
    traj.times.push_back(n * step);
    traj.states.push_back(theta);
  }
  return traj;
}

double subspace_invariance_check(const FlowTrajectory& traj,
                                 const std::vector<std::pair<int, int>>& pairs) {
  check_pairs(traj, pairs);
  double worst = 0;
  for (const Vec& state : traj.states) {
    for (auto [i, j] : pairs) {
      worst = std::max(worst, (unit_of(state, traj.unit_dim, i) - unit_of(state, traj.unit_dim, j))
                                  .lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

double min_pairwise_distance(const FlowTrajectory& traj,
                             const std::vector<std::pair<int, int>>& pairs) {
  check_pairs(traj, pairs);
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& state : traj.states) {
    for (auto [i, j] : pairs) {
      best = std::min(best, (unit_of(state, traj.unit_dim, i) - unit_of(state, traj.unit_dim, j))
                                .lpNorm<Eigen::Infinity>());
    }
  }
  return best;
}

bool replicant_invariance_check(const FlowTrajectory& traj) {
  if (traj.unit_dim != 1) {
    throw std::invalid_argument("replicant_invariance_check only holds for one-dimensional units");
  }
  if (traj.states.empty()) return true;
  const Permutation first = expansion::replicant_region(traj.states.front(), 1);
  for (const Vec& state : traj.states) {
    if (expansion::replicant_region(state, 1) != first) return false;
  }
  return true;
}

}  // namespace lsym::verification
