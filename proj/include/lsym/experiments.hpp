#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lsym/expansion.hpp"
#include "lsym/objective.hpp"

namespace lsym::experiments {

using expansion::Mat;
using expansion::MultiPoint;
using expansion::Point;
using expansion::Rng;
using expansion::Vec;
using Data = Dataset<double>;
using Act = Activation<double>;

enum class Optimizer { adam, gd };

/// Full-batch first-order training. Adam hyperparameters are not given by
/// the reference protocol; the defaults below are the usual ones.
struct TrainingConfig {
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long max_iters = 200000;
  double target_loss = 1e-7;
  std::uint64_t seed = 0;
  long checkpoint_every = 1000;

  void validate() const;
};

struct Checkpoint {
  long iter = 0;
  double loss = 0;
  double grad_norm = 0;  ///< Euclidean norm of the full gradient
};

struct TrainingTrace {
  std::vector<Checkpoint> checkpoints;
  Vec final_theta;
  double final_loss = 0;
  long iters = 0;
  bool converged = false;
};

/// Stops at loss <= target_loss or after max_iters updates. Throws
/// std::runtime_error on a non-finite loss.
TrainingTrace train(const Objective<double>& obj, const Vec& theta0, const TrainingConfig& cfg);
TrainingTrace train(const Point& student, const Data& data, const TrainingConfig& cfg);
TrainingTrace train(const MultiPoint& student, const Data& data, const TrainingConfig& cfg);

/// Regular 2-D grid {-e, -e + step, ..., e}^2 (x1 outer, x2 inner) with teacher targets.
Data teacher_dataset(const Point& teacher, double half_extent = 5.0, double grid_step = 0.25);
Data grid_dataset(double half_extent, double grid_step, const std::function<Vec(const Vec&)>& target,
                  int d_out);

/// Width-4, 2-in 1-out teacher with unit output weights.
Point paper_teacher(const Act& activation);

/// Glorot uniform: each layer uniform on +-sqrt(6 / (fan_in + fan_out)).
MultiPoint init_glorot(Rng& rng, int d_in, const std::vector<int>& widths, int d_out, const Act& activation);
Point init_glorot_two_layer(Rng& rng, int d_in, int width, int d_out, const Act& activation);

struct SeedResult {
  int width = 0;
  std::vector<int> hidden;  ///< all hidden widths (multi-layer runs)
  std::uint64_t seed = 0;
  bool converged = false;
  double final_loss = 0;
  long iters = 0;
};

struct WidthSummary {
  int width = 0;
  int n_seeds = 0;
  int converged = 0;
  double success_fraction = 0;
};

struct HistogramRow {
  int run = 0;
  int copies = 0;
  std::map<int, int> zero_type_by_size;  ///< group size -> number of neurons
  bool consistent = false;
};

struct ExperimentReport {
  std::vector<SeedResult> runs;
  std::vector<WidthSummary> widths;
  std::vector<HistogramRow> classification;
  std::vector<expansion::NeuronClassification> classifications;

  double fraction(int width) const;
};

/// Builds a student from its seeded rng and hidden widths; Glorot when empty.
using StudentInit = std::function<MultiPoint(Rng&, const std::vector<int>&)>;

/// Two-layer students of each width, seeds cfg.seed + index.
ExperimentReport success_rate(const std::vector<int>& widths, int n_seeds, const TrainingConfig& cfg,
                              const Data& data, const Act& activation, int threads = 1,
                              const StudentInit& init = {});

/// Multi-layer students; entry h of `hidden` lists the hidden widths of
/// configuration h, summarized under its first width.
ExperimentReport success_rate_multilayer(const std::vector<std::vector<int>>& hidden, int n_seeds,
                                         const TrainingConfig& cfg, const Data& data,
                                         const Act& activation, int threads = 1,
                                         const StudentInit& init = {});

struct RefineResult {
  Vec theta;
  double loss = 0;
  double grad_norm = 0;  ///< ||grad||_inf
  long iters = 0;
};

/// Gradient descent with a backtracking (shrinking) step until
/// ||grad||_inf <= tol or the budget is spent.
RefineResult refine_gradient_descent(const Objective<double>& obj, const Vec& theta, double tol,
                                     long budget = 20000);

/// Newton iterations on the gradient with the finite-difference Hessian,
/// pseudo-inverted on its non-negligible eigenvalues. Converges to the
/// nearby critical point whatever its index.
RefineResult refine_newton(const Objective<double>& obj, const Vec& theta, double tol,
                           long budget = 100);

/// Levenberg-Marquardt on the least-squares residuals of a two-layer network.
RefineResult refine_least_squares(const Point& theta, const Data& data, double target_loss = 1e-28,
                                  long budget = 2000);

struct NarrowCritical {
  Point point;
  double grad_norm = 0;
  double loss = 0;
  bool irreducible = false;
  bool reached_tol = false;  ///< false: refinement budget exhausted above tol
};

/// Trains a width-r student, then refines (shrinking-step gradient descent,
/// Newton polish) towards ||grad||_inf <= refine_tol.
NarrowCritical find_critical_narrow(int r, const Data& data, const Act& activation,
                                    const TrainingConfig& cfg, double refine_tol);

struct SaddleMetrics {
  std::vector<std::pair<long, double>> grad_norm_dips;  ///< (iter, prominence ratio)
  std::vector<std::pair<long, long>> plateau_spans;     ///< (first iter, last iter)
};

/// Dips: checkpoints whose grad norm is the minimum of a valley bounded on
/// both sides by checkpoints at least 10x larger. Plateaus: maximal runs with
/// relative loss change < 1e-3 covering >= 5% of the iterations.
SaddleMetrics saddle_trace_metrics(const TrainingTrace& trace);

struct ClassifiedRun {
  expansion::NeuronClassification classification;
  HistogramRow histogram;
};

ClassifiedRun classify_run(const Point& trained, const Point& teacher, double tol, int run = 0);

struct ClassificationConfig {
  int width = 10;
  int n_seeds = 20;
  double tol = 1e-3;
  double converged_below = 1e-7;
  TrainingConfig training;
};

/// Trains students against the teacher's data, refines each by
/// Levenberg-Marquardt, and classifies every run that ends below
/// `converged_below`.
ExperimentReport classification_experiment(const Point& teacher, const Data& data,
                                           const ClassificationConfig& cfg, int threads = 1);

/// Width-(4,4,4) network fitted to sin(2 x1) + x1 + cos(3 x2) - 0.4 (x2 - 1)^2
/// on the grid; its own outputs then serve as zero-loss-attainable targets.
MultiPoint fit_multilayer_teacher(const Act& activation, double half_extent, double grid_step,
                                  std::uint64_t seed, long iters = 20000);

}  // namespace lsym::experiments
