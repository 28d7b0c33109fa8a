#include "lsym/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace lsym::experiments {

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Runs job(i) for i in [0, n) on up to `threads` workers; results are written
// by index so the outcome does not depend on scheduling.
template <typename Job>
void parallel_for(int n, int threads, Job job) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<WidthSummary> summarize(const std::vector<SeedResult>& runs) {
  std::vector<WidthSummary> out;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const WidthSummary& s) { return s.width == r.width; });
    if (it == out.end()) {
      out.push_back({r.width, 0, 0, 0.0});
      it = out.end() - 1;
    }
    ++it->n_seeds;
    if (r.converged) ++it->converged;
  }
  for (auto& s : out) s.success_fraction = double(s.converged) / s.n_seeds;
  return out;
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(target_loss > 0)) throw std::invalid_argument("target_loss must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (optimizer == Optimizer::adam) {
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
      throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0)) throw std::invalid_argument("Adam epsilon must be positive");
  }
  if (checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
}

double ExperimentReport::fraction(int width) const {
  for (const auto& s : widths) {
    if (s.width == width) return s.success_fraction;
  }
  throw std::out_of_range("no runs for width " + std::to_string(width));
}

TrainingTrace train(const Objective<double>& obj, const Vec& theta0, const TrainingConfig& cfg) {
  cfg.validate();
  if (theta0.size() != obj.dimension) throw std::invalid_argument("train: initial point has wrong dimension");
  TrainingTrace trace;
  Vec theta = theta0;
  Vec g;
  Vec m1 = Vec::Zero(theta.size());
  Vec m2 = Vec::Zero(theta.size());
  double b1t = 1, b2t = 1;
  long iter = 0;
  double value = 0;
  for (;; ++iter) {
    value = obj.value_and_gradient(theta, g);
    if (!std::isfinite(value) || !g.allFinite()) {
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(iter));
    }
    const bool done = value <= cfg.target_loss || iter >= cfg.max_iters;
    if (iter % cfg.checkpoint_every == 0 || done) trace.checkpoints.push_back({iter, value, g.norm()});
    if (done) break;
    if (cfg.optimizer == Optimizer::gd) {
      theta -= cfg.learning_rate * g;
    } else {
      b1t *= cfg.beta1;
      b2t *= cfg.beta2;
      m1 = cfg.beta1 * m1 + (1 - cfg.beta1) * g;
      m2 = cfg.beta2 * m2 + (1 - cfg.beta2) * g.cwiseAbs2();
      const Vec mhat = m1 / (1 - b1t);
      const Vec vhat = m2 / (1 - b2t);
      theta.array() -= cfg.learning_rate * mhat.array() / (vhat.array().sqrt() + cfg.epsilon);
    }
  }
  trace.final_theta = theta;
  trace.final_loss = value;
  trace.iters = iter;
  trace.converged = value <= cfg.target_loss;
  return trace;
}

TrainingTrace train(const Point& student, const Data& data, const TrainingConfig& cfg) {
  return train(make_objective(student, data), student.flat(), cfg);
}

TrainingTrace train(const MultiPoint& student, const Data& data, const TrainingConfig& cfg) {
  return train(make_objective(student, data), student.flat(), cfg);
}

Data grid_dataset(double half_extent, double grid_step, const std::function<Vec(const Vec&)>& target,
                  int d_out) {
  if (!(half_extent > 0) || !(grid_step > 0)) throw std::invalid_argument("grid extent and step must be positive");
  const double cells = 2 * half_extent / grid_step;
  const long n = std::lround(cells);
  if (std::abs(cells - n) > 1e-9 * std::max(1.0, cells)) {
    throw std::invalid_argument("grid step does not divide the grid range");
  }
  const long side = n + 1;
  Mat X(side * side, 2), Y(side * side, d_out);
  for (long i = 0; i < side; ++i) {
    for (long j = 0; j < side; ++j) {
      const long row = i * side + j;
      X(row, 0) = -half_extent + i * grid_step;
      X(row, 1) = -half_extent + j * grid_step;
      const Vec y = target(X.row(row).transpose());
      if (y.size() != d_out) throw std::invalid_argument("grid target has wrong output dimension");
      Y.row(row) = y.transpose();
    }
  }
  return Data(std::move(X), std::move(Y));
}

Data teacher_dataset(const Point& teacher, double half_extent, double grid_step) {
  if (teacher.d_in() != 2) throw std::invalid_argument("teacher_dataset: the grid generator is 2-D only");
  Data grid = grid_dataset(half_extent, grid_step, [](const Vec&) { return Vec::Zero(1); }, 1);
  Mat Y = forward2_batch(teacher, grid.inputs);
  return Data(std::move(grid.inputs), std::move(Y));
}

Point paper_teacher(const Act& activation) {
  Mat w(4, 2);
  w << 0.6, 0.5, -0.5, 0.5, -0.2, -0.6, 0.1, -0.6;
  return Point(activation, w, Mat::Ones(4, 1));
}

MultiPoint init_glorot(Rng& rng, int d_in, const std::vector<int>& widths, int d_out, const Act& activation) {
  if (d_in < 1 || d_out < 1) throw std::invalid_argument("init_glorot: dimensions must be >= 1");
  std::vector<int> r{d_in};
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("init_glorot: widths must be >= 1");
    r.push_back(w);
  }
  r.push_back(d_out);
  std::vector<Mat> layers;
  for (std::size_t l = 0; l + 1 < r.size(); ++l) {
    const double bound = std::sqrt(6.0 / (r[l] + r[l + 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat W(r[l + 1], r[l]);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = u(rng);
    }
    layers.push_back(std::move(W));
  }
  return MultiPoint(activation, std::move(layers));
}

Point init_glorot_two_layer(Rng& rng, int d_in, int width, int d_out, const Act& activation) {
  const MultiPoint p = init_glorot(rng, d_in, {width}, d_out, activation);
  return Point(activation, p.layers[0], p.layers[1].transpose());
}

ExperimentReport success_rate(const std::vector<int>& widths, int n_seeds, const TrainingConfig& cfg,
                              const Data& data, const Act& activation, int threads,
                              const StudentInit& init) {
  std::vector<std::vector<int>> hidden;
  for (int w : widths) hidden.push_back({w});
  return success_rate_multilayer(hidden, n_seeds, cfg, data, activation, threads, init);
}

ExperimentReport success_rate_multilayer(const std::vector<std::vector<int>>& hidden, int n_seeds,
                                         const TrainingConfig& cfg, const Data& data,
                                         const Act& activation, int threads,
                                         const StudentInit& init) {
  if (n_seeds < 1) throw std::invalid_argument("success_rate: n_seeds must be >= 1");
  if (hidden.empty()) throw std::invalid_argument("success_rate: no widths given");
  cfg.validate();
  const int jobs = static_cast<int>(hidden.size()) * n_seeds;
  ExperimentReport report;
  report.runs.resize(jobs);
  parallel_for(jobs, threads, [&](int job) {
    const auto& h = hidden[job / n_seeds];
    if (h.empty()) throw std::invalid_argument("success_rate: empty hidden-width list");
    TrainingConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(job % n_seeds);
    Rng rng(run_cfg.seed);
    const MultiPoint student =
        init ? init(rng, h) : init_glorot(rng, data.d_in(), h, data.d_out(), activation);
    if (student.hidden_widths() != h) throw std::invalid_argument("success_rate: student widths differ");
    TrainingTrace trace;
    if (h.size() == 1) {
      trace = train(Point(student.activation, student.layers[0], student.layers[1].transpose()), data,
                    run_cfg);
    } else {
      trace = train(student, data, run_cfg);
    }
    report.runs[job] = {h.front(), h, run_cfg.seed, trace.converged, trace.final_loss, trace.iters};
  });
  report.widths = summarize(report.runs);
  return report;
}

RefineResult refine_gradient_descent(const Objective<double>& obj, const Vec& theta, double tol,
                                     long budget) {
  RefineResult out{theta, 0, 0, 0};
  Vec g;
  out.loss = obj.value_and_gradient(out.theta, g);
  out.grad_norm = inf_norm(g);
  double step = 1.0;
  while (out.iters < budget && out.grad_norm > tol) {
    ++out.iters;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Vec trial = out.theta - step * g;
      const double value = obj.value(trial);
      if (std::isfinite(value) && value <= out.loss - 1e-4 * step * g.squaredNorm()) {
        out.theta = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    out.loss = obj.value_and_gradient(out.theta, g);
    out.grad_norm = inf_norm(g);
    step *= 2;
  }
  return out;
}

RefineResult refine_newton(const Objective<double>& obj, const Vec& theta, double tol, long budget) {
  RefineResult out{theta, 0, 0, 0};
  Vec g;
  out.loss = obj.value_and_gradient(out.theta, g);
  out.grad_norm = inf_norm(g);
  while (out.iters < budget && out.grad_norm > tol) {
    ++out.iters;
    const Mat H = hessian(obj, out.theta);
    Eigen::SelfAdjointEigenSolver<Mat> solver(H);
    if (solver.info() != Eigen::Success) break;
    const Vec& lambda = solver.eigenvalues();
    const Mat& V = solver.eigenvectors();
    const double scale = lambda.cwiseAbs().maxCoeff();
    const Vec coeff = V.transpose() * g;
    Vec step = Vec::Zero(g.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (std::abs(lambda[i]) > 1e-9 * scale) step -= (coeff[i] / lambda[i]) * V.col(i);
    }
    // Newton steps that fail to shrink the gradient are halved.
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      const Vec trial = out.theta + step;
      Vec gt;
      const double value = obj.value_and_gradient(trial, gt);
      if (std::isfinite(value) && inf_norm(gt) < out.grad_norm) {
        out.theta = trial;
        out.loss = value;
        g = gt;
        out.grad_norm = inf_norm(gt);
        accepted = true;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return out;
}

RefineResult refine_least_squares(const Point& start, const Data& data, double target_loss, long budget) {
  if (data.d_in() != start.d_in() || data.d_out() != start.d_out()) {
    throw std::invalid_argument("refine_least_squares: dataset/network dimension mismatch");
  }
  const Eigen::Index N = data.size();
  const int m = start.width(), din = start.d_in(), dout = start.d_out(), D = start.unit_dim();
  const Eigen::Index P = start.parameter_count();
  const double n = double(N);

  auto residual = [&](const Point& p) -> Vec {
    const Mat R = forward2_batch(p, data.inputs) - data.targets;
    return Eigen::Map<const Vec>(R.data(), R.size());  // column-major: output o block of N rows
  };
  auto jacobian = [&](const Point& p) {
    Mat J = Mat::Zero(N * dout, P);
    for (int i = 0; i < m; ++i) {
      const Vec z = data.inputs * p.w.row(i).transpose();
      const Vec s = p.activation.value(z.array()).matrix();
      const Vec ds = p.activation.derivative(z.array()).matrix();
      for (int o = 0; o < dout; ++o) {
        auto block = J.block(o * N, Eigen::Index(i) * D, N, D);
        for (int c = 0; c < din; ++c) block.col(c) = p.a(i, o) * ds.cwiseProduct(data.inputs.col(c));
        block.col(din + o) = s;
      }
    }
    return J;
  };

  Point p = start;
  Vec r = residual(p);
  double value = 0.5 * r.squaredNorm() / n;
  double mu = 1e-3;
  RefineResult out{p.flat(), value, 0, 0};
  while (out.iters < budget && value > target_loss) {
    ++out.iters;
    const Mat J = jacobian(p);
    const Mat JtJ = J.transpose() * J;
    const Vec Jtr = J.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Mat A = JtJ;
      A.diagonal().array() += mu * (1.0 + JtJ.diagonal().array());
      const Vec delta = A.ldlt().solve(-Jtr);
      if (!delta.allFinite()) {
        mu *= 10;
        continue;
      }
      const Point trial = p.with_flat(p.flat() + delta);
      const Vec rt = residual(trial);
      const double vt = 0.5 * rt.squaredNorm() / n;
      if (std::isfinite(vt) && vt < value) {
        p = trial;
        r = rt;
        value = vt;
        mu = std::max(mu / 3, 1e-15);
        accepted = true;
      } else {
        mu *= 4;
      }
    }
    if (!accepted) break;
  }
  out.theta = p.flat();
  out.loss = value;
  Vec g;
  make_objective(p, data).value_and_gradient(out.theta, g);
  out.grad_norm = inf_norm(g);
  return out;
}

NarrowCritical find_critical_narrow(int r, const Data& data, const Act& activation,
                                    const TrainingConfig& cfg, double refine_tol) {
  if (r < 1) throw std::invalid_argument("find_critical_narrow: r must be >= 1");
  if (!(refine_tol > 0)) throw std::invalid_argument("find_critical_narrow: refine_tol must be positive");
  Rng rng(cfg.seed);
  const Point init = init_glorot_two_layer(rng, data.d_in(), r, data.d_out(), activation);
  const auto obj = make_objective(init, data);
  const TrainingTrace trace = train(obj, init.flat(), cfg);
  RefineResult refined = refine_gradient_descent(obj, trace.final_theta, refine_tol);
  if (refined.grad_norm > refine_tol) {
    const RefineResult polished = refine_newton(obj, refined.theta, refine_tol);
    if (polished.grad_norm < refined.grad_norm) refined = polished;
  }
  NarrowCritical out;
  out.point = init.with_flat(refined.theta);
  out.grad_norm = refined.grad_norm;
  out.loss = refined.loss;
  out.irreducible = is_irreducible(out.point, 1e-6);
  out.reached_tol = refined.grad_norm <= refine_tol;
  return out;
}

SaddleMetrics saddle_trace_metrics(const TrainingTrace& trace) {
  const auto& cp = trace.checkpoints;
  if (cp.size() < 3) throw std::invalid_argument("saddle_trace_metrics needs >= 3 checkpoints");
  SaddleMetrics out;
  const std::size_t n = cp.size();

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double gi = cp[i].grad_norm;
    if (!(gi < cp[i - 1].grad_norm && gi <= cp[i + 1].grad_norm)) continue;
    const double wall = 10 * gi;
    // Walk outwards until the sequence climbs 10x above the candidate; the
    // candidate must be the strict first minimum of that valley.
    bool is_min = true;
    std::ptrdiff_t left = std::ptrdiff_t(i) - 1;
    double left_peak = 0;
    for (; left >= 0; --left) {
      if (cp[left].grad_norm < gi || (cp[left].grad_norm == gi)) {
        is_min = false;
        break;
      }
      if (cp[left].grad_norm >= wall) {
        left_peak = cp[left].grad_norm;
        break;
      }
    }
    if (!is_min || left < 0) continue;
    std::size_t right = i + 1;
    double right_peak = 0;
    for (; right < n; ++right) {
      if (cp[right].grad_norm < gi) {
        is_min = false;
        break;
      }
      if (cp[right].grad_norm >= wall) {
        right_peak = cp[right].grad_norm;
        break;
      }
    }
    if (!is_min || right >= n) continue;
    out.grad_norm_dips.emplace_back(cp[i].iter, std::min(left_peak, right_peak) / gi);
  }

  const long total = cp.back().iter - cp.front().iter;
  if (total > 0) {
    const double min_span = 0.05 * total;
    std::size_t i = 0;
    while (i + 1 < n) {
      const double base = cp[i].loss;
      std::size_t j = i;
      while (j + 1 < n && std::abs(cp[j + 1].loss - base) < 1e-3 * std::abs(base)) ++j;
      if (j > i && cp[j].iter - cp[i].iter >= min_span) {
        out.plateau_spans.emplace_back(cp[i].iter, cp[j].iter);
        i = j;
      } else {
        ++i;
      }
    }
  }
  return out;
}

ClassifiedRun classify_run(const Point& trained, const Point& teacher, double tol, int run) {
  ClassifiedRun out;
  out.classification = expansion::classify_neurons(trained, teacher, tol);
  out.histogram.run = run;
  out.histogram.copies = out.classification.copy_count();
  out.histogram.zero_type_by_size = out.classification.zero_type_histogram();
  out.histogram.consistent = out.classification.consistent;
  return out;
}

ExperimentReport classification_experiment(const Point& teacher, const Data& data,
                                           const ClassificationConfig& cfg, int threads) {
  if (cfg.n_seeds < 1) throw std::invalid_argument("classification_experiment: n_seeds must be >= 1");
  if (cfg.width < 1) throw std::invalid_argument("classification_experiment: width must be >= 1");
  cfg.training.validate();
  ExperimentReport report;
  report.runs.resize(cfg.n_seeds);
  std::vector<std::optional<ClassifiedRun>> classified(cfg.n_seeds);
  parallel_for(cfg.n_seeds, threads, [&](int i) {
    TrainingConfig run_cfg = cfg.training;
    run_cfg.seed = cfg.training.seed + static_cast<std::uint64_t>(i);
    Rng rng(run_cfg.seed);
    const Point init = init_glorot_two_layer(rng, data.d_in(), cfg.width, data.d_out(), teacher.activation);
    const TrainingTrace trace = train(init, data, run_cfg);
    const RefineResult refined = refine_least_squares(init.with_flat(trace.final_theta), data);
    const bool converged = refined.loss < cfg.converged_below;
    report.runs[i] = {cfg.width, {cfg.width}, run_cfg.seed, converged, refined.loss, trace.iters + refined.iters};
    if (converged) classified[i] = classify_run(init.with_flat(refined.theta), teacher, cfg.tol, i);
  });
  for (auto& c : classified) {
    if (!c) continue;
    report.classification.push_back(c->histogram);
    report.classifications.push_back(std::move(c->classification));
  }
  report.widths = summarize(report.runs);
  return report;
}

MultiPoint fit_multilayer_teacher(const Act& activation, double half_extent, double grid_step,
                                  std::uint64_t seed, long iters) {
  const Data target = grid_dataset(
      half_extent, grid_step,
      [](const Vec& x) {
        Vec y(1);
        y[0] = std::sin(2 * x[0]) + x[0] + std::cos(3 * x[1]) - 0.4 * (x[1] - 1) * (x[1] - 1);
        return y;
      },
      1);
  Rng rng(seed);
  const MultiPoint init = init_glorot(rng, 2, {4, 4, 4}, 1, activation);
  TrainingConfig cfg;
  cfg.max_iters = iters;
  cfg.target_loss = std::numeric_limits<double>::min();
  cfg.seed = seed;
  cfg.checkpoint_every = std::max(1L, iters);
  const TrainingTrace trace = train(init, target, cfg);
  return init.with_flat(trace.final_theta);
}

}  // namespace lsym::experiments
