#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsym/activation.hpp"

namespace lsym {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A permutation of [0, m): slot i of the permuted point holds old unit perm[i].
using Permutation = std::vector<int>;

inline bool is_permutation_of(const Permutation& perm, std::size_t m) {
  if (perm.size() != m) return false;
  std::vector<char> seen(m, 0);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= m || seen[p]) return false;
    seen[p] = 1;
  }
  return true;
}

inline Permutation identity_permutation(int m) {
  Permutation perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  return perm;
}

/// Incoming and outgoing weights of one hidden unit.
template <typename Scalar>
struct Neuron {
  Vector<Scalar> w;
  Vector<Scalar> a;
};

/// Bias-free two-layer network f(x) = sum_i a_i sigma(w_i . x).
///
/// Row i of `w` (m x d_in) and row i of `a` (m x d_out) form unit i. The flat
/// parameter vector is unit-major: [w_0, a_0, w_1, a_1, ...], each unit of
/// dimension D = d_in + d_out. A width-0 point is only produced by `reduce`
/// on a fully reducible input.
template <typename Scalar>
struct TwoLayerPoint {
  Activation<Scalar> activation;
  Matrix<Scalar> w;
  Matrix<Scalar> a;

  TwoLayerPoint() = default;
  TwoLayerPoint(Activation<Scalar> act, Matrix<Scalar> w_, Matrix<Scalar> a_)
      : activation(act), w(std::move(w_)), a(std::move(a_)) {
    if (w.rows() != a.rows()) throw std::invalid_argument("w and a disagree on the width");
    if (w.cols() < 1 || a.cols() < 1) throw std::invalid_argument("d_in and d_out must be >= 1");
  }

  int width() const { return static_cast<int>(w.rows()); }
  int d_in() const { return static_cast<int>(w.cols()); }
  int d_out() const { return static_cast<int>(a.cols()); }
  int unit_dim() const { return d_in() + d_out(); }
  Eigen::Index parameter_count() const { return Eigen::Index(width()) * unit_dim(); }

  Neuron<Scalar> neuron(int i) const { return {w.row(i).transpose(), a.row(i).transpose()}; }

  Vector<Scalar> unit(int i) const {
    Vector<Scalar> u(unit_dim());
    u << w.row(i).transpose(), a.row(i).transpose();
    return u;
  }

  Vector<Scalar> flat() const {
    Vector<Scalar> theta(parameter_count());
    for (int i = 0; i < width(); ++i) theta.segment(Eigen::Index(i) * unit_dim(), unit_dim()) = unit(i);
    return theta;
  }

  /// Same shape and activation, parameters taken from a unit-major vector.
  TwoLayerPoint with_flat(const Vector<Scalar>& theta) const {
    return from_flat(activation, width(), d_in(), d_out(), theta);
  }

  static TwoLayerPoint from_flat(Activation<Scalar> act, int m, int d_in, int d_out,
                                 const Vector<Scalar>& theta) {
    const int D = d_in + d_out;
    if (theta.size() != Eigen::Index(m) * D) throw std::invalid_argument("flat vector size mismatch");
    Matrix<Scalar> w(m, d_in), a(m, d_out);
    for (int i = 0; i < m; ++i) {
      w.row(i) = theta.segment(Eigen::Index(i) * D, d_in).transpose();
      a.row(i) = theta.segment(Eigen::Index(i) * D + d_in, d_out).transpose();
    }
    return TwoLayerPoint(act, std::move(w), std::move(a));
  }

  static TwoLayerPoint from_neurons(Activation<Scalar> act, const std::vector<Neuron<Scalar>>& units) {
    if (units.empty()) throw std::invalid_argument("from_neurons needs at least one unit");
    const auto d_in = units.front().w.size();
    const auto d_out = units.front().a.size();
    Matrix<Scalar> w(units.size(), d_in), a(units.size(), d_out);
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (units[i].w.size() != d_in || units[i].a.size() != d_out) {
        throw std::invalid_argument("neurons have inconsistent dimensions");
      }
      w.row(i) = units[i].w.transpose();
      a.row(i) = units[i].a.transpose();
    }
    return TwoLayerPoint(act, std::move(w), std::move(a));
  }
};

/// L-layer bias-free network W^(L) sigma(... sigma(W^(1) x)).
/// layers[l] has shape r_{l+1} x r_l; flat vector is layer-major, row-major.
template <typename Scalar>
struct MultiLayerPoint {
  Activation<Scalar> activation;
  std::vector<Matrix<Scalar>> layers;

  MultiLayerPoint() = default;
  MultiLayerPoint(Activation<Scalar> act, std::vector<Matrix<Scalar>> mats)
      : activation(act), layers(std::move(mats)) {
    if (layers.size() < 2) throw std::invalid_argument("multi-layer point needs L >= 2");
    for (std::size_t l = 1; l < layers.size(); ++l) {
      if (layers[l].cols() != layers[l - 1].rows()) {
        throw std::invalid_argument("adjacent layer shapes are incompatible");
      }
    }
  }

  int depth() const { return static_cast<int>(layers.size()); }
  int d_in() const { return static_cast<int>(layers.front().cols()); }
  int d_out() const { return static_cast<int>(layers.back().rows()); }

  /// (r_0 = d_in, r_1, ..., r_L = d_out)
  std::vector<int> widths() const {
    std::vector<int> r{d_in()};
    for (const auto& W : layers) r.push_back(static_cast<int>(W.rows()));
    return r;
  }
  std::vector<int> hidden_widths() const {
    auto r = widths();
    return {r.begin() + 1, r.end() - 1};
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& W : layers) n += W.size();
    return n;
  }

  Vector<Scalar> flat() const {
    Vector<Scalar> theta(parameter_count());
    Eigen::Index offset = 0;
    for (const auto& W : layers) {
      for (Eigen::Index i = 0; i < W.rows(); ++i) {
        theta.segment(offset, W.cols()) = W.row(i).transpose();
        offset += W.cols();
      }
    }
    return theta;
  }

  MultiLayerPoint with_flat(const Vector<Scalar>& theta) const {
    if (theta.size() != parameter_count()) throw std::invalid_argument("flat vector size mismatch");
    MultiLayerPoint out = *this;
    Eigen::Index offset = 0;
    for (auto& W : out.layers) {
      for (Eigen::Index i = 0; i < W.rows(); ++i) {
        W.row(i) = theta.segment(offset, W.cols()).transpose();
        offset += W.cols();
      }
    }
    return out;
  }

  static MultiLayerPoint from_two_layer(const TwoLayerPoint<Scalar>& p) {
    return MultiLayerPoint(p.activation, {p.w, p.a.transpose()});
  }
};

/// Training data: row n of `inputs` maps to row n of `targets`.
template <typename Scalar>
struct Dataset {
  Matrix<Scalar> inputs;
  Matrix<Scalar> targets;

  Dataset() = default;
  Dataset(Matrix<Scalar> x, Matrix<Scalar> y) : inputs(std::move(x)), targets(std::move(y)) {
    if (inputs.rows() < 1) throw std::invalid_argument("dataset is empty");
    if (inputs.rows() != targets.rows()) throw std::invalid_argument("inputs/targets row mismatch");
    if (!inputs.allFinite() || !targets.allFinite()) {
      throw std::invalid_argument("dataset has non-finite entries");
    }
  }

  Eigen::Index size() const { return inputs.rows(); }
  int d_in() const { return static_cast<int>(inputs.cols()); }
  int d_out() const { return static_cast<int>(targets.cols()); }
};

// ---------------------------------------------------------------------------
// Evaluation

template <typename Scalar>
Vector<Scalar> forward2(const TwoLayerPoint<Scalar>& theta, const Vector<Scalar>& x) {
  if (x.size() != theta.d_in()) throw std::invalid_argument("forward2: input dimension mismatch");
  Vector<Scalar> y = Vector<Scalar>::Zero(theta.d_out());
  for (int i = 0; i < theta.width(); ++i) {
    const Scalar z = theta.w.row(i).dot(x.transpose());
    y += theta.activation.value(z) * theta.a.row(i).transpose();
  }
  return y;
}

/// Predictions for every row of X (N x d_in), accumulated in neuron order.
template <typename Scalar>
Matrix<Scalar> forward2_batch(const TwoLayerPoint<Scalar>& theta, const Matrix<Scalar>& X) {
  if (X.cols() != theta.d_in()) throw std::invalid_argument("forward2: input dimension mismatch");
  Matrix<Scalar> Y = Matrix<Scalar>::Zero(X.rows(), theta.d_out());
  for (int i = 0; i < theta.width(); ++i) {
    const Vector<Scalar> z = X * theta.w.row(i).transpose();
    const Vector<Scalar> s = theta.activation.value(z.array()).matrix();
    Y.noalias() += s * theta.a.row(i);
  }
  return Y;
}

template <typename Scalar>
Vector<Scalar> forwardL(const MultiLayerPoint<Scalar>& theta, const Vector<Scalar>& x) {
  if (x.size() != theta.d_in()) throw std::invalid_argument("forwardL: input dimension mismatch");
  Vector<Scalar> h = x;
  for (int l = 0; l + 1 < theta.depth(); ++l) {
    const Vector<Scalar> z = theta.layers[l] * h;
    h = theta.activation.value(z.array()).matrix();
  }
  return theta.layers.back() * h;
}

template <typename Scalar>
Matrix<Scalar> forwardL_batch(const MultiLayerPoint<Scalar>& theta, const Matrix<Scalar>& X) {
  if (X.cols() != theta.d_in()) throw std::invalid_argument("forwardL: input dimension mismatch");
  Matrix<Scalar> h = X;
  for (int l = 0; l + 1 < theta.depth(); ++l) {
    const Matrix<Scalar> z = h * theta.layers[l].transpose();
    h = z.unaryExpr([&](Scalar v) { return theta.activation.value(v); });
  }
  return h * theta.layers.back().transpose();
}

namespace detail {
template <typename Scalar>
Scalar half_mse(const Matrix<Scalar>& residual) {
  return Scalar(0.5) * residual.squaredNorm() / Scalar(residual.rows());
}
}  // namespace detail

/// Mean over samples of 1/2 ||f(x) - y||^2.
template <typename Scalar>
Scalar loss(const TwoLayerPoint<Scalar>& theta, const Dataset<Scalar>& data) {
  return detail::half_mse<Scalar>(forward2_batch(theta, data.inputs) - data.targets);
}

template <typename Scalar>
Scalar loss(const MultiLayerPoint<Scalar>& theta, const Dataset<Scalar>& data) {
  return detail::half_mse<Scalar>(forwardL_batch(theta, data.inputs) - data.targets);
}

/// Loss and analytic gradient (same shape as theta). Every unit's gradient is
/// computed by the same sequence of operations, so units that are bitwise
/// equal receive bitwise equal gradients.
template <typename Scalar>
Scalar loss_and_grad(const TwoLayerPoint<Scalar>& theta, const Dataset<Scalar>& data,
                     TwoLayerPoint<Scalar>& gradient) {
  const auto& X = data.inputs;
  if (X.cols() != theta.d_in() || data.d_out() != theta.d_out()) {
    throw std::invalid_argument("grad: dataset/network dimension mismatch");
  }
  const int m = theta.width();
  const Scalar n = Scalar(X.rows());
  Matrix<Scalar> Z(X.rows(), m), S(X.rows(), m);
  Matrix<Scalar> Y = Matrix<Scalar>::Zero(X.rows(), theta.d_out());
  for (int i = 0; i < m; ++i) {
    Z.col(i).noalias() = X * theta.w.row(i).transpose();
    S.col(i) = theta.activation.value(Z.col(i).array()).matrix();
    Y.noalias() += S.col(i) * theta.a.row(i);
  }
  const Matrix<Scalar> E = (Y - data.targets) / n;
  gradient.activation = theta.activation;
  gradient.w.resize(m, theta.d_in());
  gradient.a.resize(m, theta.d_out());
  for (int i = 0; i < m; ++i) {
    gradient.a.row(i).noalias() = S.col(i).transpose() * E;
    const Vector<Scalar> back =
        ((E * theta.a.row(i).transpose()).array() * theta.activation.derivative(Z.col(i).array()))
            .matrix();
    gradient.w.row(i).noalias() = back.transpose() * X;
  }
  return Scalar(0.5) * (Y - data.targets).squaredNorm() / n;
}

template <typename Scalar>
TwoLayerPoint<Scalar> grad(const TwoLayerPoint<Scalar>& theta, const Dataset<Scalar>& data) {
  TwoLayerPoint<Scalar> g;
  loss_and_grad(theta, data, g);
  return g;
}

template <typename Scalar>
Scalar loss_and_grad(const MultiLayerPoint<Scalar>& theta, const Dataset<Scalar>& data,
                     MultiLayerPoint<Scalar>& gradient) {
  if (data.d_in() != theta.d_in() || data.d_out() != theta.d_out()) {
    throw std::invalid_argument("grad: dataset/network dimension mismatch");
  }
  const int L = theta.depth();
  const Scalar n = Scalar(data.size());
  std::vector<Matrix<Scalar>> pre(L - 1), post(L);
  post[0] = data.inputs;
  for (int l = 0; l + 1 < L; ++l) {
    pre[l] = post[l] * theta.layers[l].transpose();
    post[l + 1] = pre[l].unaryExpr([&](Scalar v) { return theta.activation.value(v); });
  }
  const Matrix<Scalar> residual = post[L - 1] * theta.layers.back().transpose() - data.targets;
  gradient = theta;
  Matrix<Scalar> delta = residual / n;
  for (int l = L - 1; l >= 0; --l) {
    gradient.layers[l].noalias() = delta.transpose() * post[l];
    if (l > 0) {
      const Matrix<Scalar> back = delta * theta.layers[l];
      delta = back.cwiseProduct(
          pre[l - 1].unaryExpr([&](Scalar v) { return theta.activation.derivative(v); }));
    }
  }
  return detail::half_mse<Scalar>(residual);
}

template <typename Scalar>
MultiLayerPoint<Scalar> grad(const MultiLayerPoint<Scalar>& theta, const Dataset<Scalar>& data) {
  MultiLayerPoint<Scalar> g;
  loss_and_grad(theta, data, g);
  return g;
}

// ---------------------------------------------------------------------------
// Symmetry operations

template <typename Scalar>
TwoLayerPoint<Scalar> permute(const TwoLayerPoint<Scalar>& theta, const Permutation& pi) {
  if (!is_permutation_of(pi, theta.width())) throw std::invalid_argument("invalid permutation");
  TwoLayerPoint<Scalar> out = theta;
  for (int i = 0; i < theta.width(); ++i) {
    out.w.row(i) = theta.w.row(pi[i]);
    out.a.row(i) = theta.a.row(pi[i]);
  }
  return out;
}

template <typename Scalar>
Scalar inf_distance(const Eigen::Ref<const Vector<Scalar>>& u,
                    const Eigen::Ref<const Vector<Scalar>>& v) {
  return (u - v).template lpNorm<Eigen::Infinity>();
}

/// Distinct incoming vectors and no vanishing outgoing vector, both at tol.
template <typename Scalar>
bool is_irreducible(const TwoLayerPoint<Scalar>& theta, Scalar tol) {
  if (!(tol > 0)) throw std::invalid_argument("is_irreducible needs tol > 0");
  const int m = theta.width();
  for (int i = 0; i < m; ++i) {
    if (theta.a.row(i).template lpNorm<Eigen::Infinity>() <= tol) return false;
    for (int j = i + 1; j < m; ++j) {
      if ((theta.w.row(i) - theta.w.row(j)).template lpNorm<Eigen::Infinity>() <= tol) return false;
    }
  }
  return m > 0;
}

/// Single-linkage clusters of incoming vectors (transitive closure of
/// ||w_i - w_j||_inf <= tol). Clusters are ordered by their lowest member and
/// list members in increasing index order.
template <typename Scalar>
std::vector<std::vector<int>> cluster_incoming(const Matrix<Scalar>& w, Scalar tol,
                                               const std::vector<int>& members) {
  const int n = static_cast<int>(members.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((w.row(members[i]) - w.row(members[j])).template lpNorm<Eigen::Infinity>() <= tol) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[slot[root]].push_back(members[i]);
  }
  return clusters;
}

/// Merges units with tol-equal incoming vectors (summing outgoing vectors) and
/// drops units whose outgoing vector vanishes, until irreducible. Returns a
/// width-0 point when nothing survives.
template <typename Scalar>
TwoLayerPoint<Scalar> reduce(const TwoLayerPoint<Scalar>& theta, Scalar tol) {
  if (!(tol > 0)) throw std::invalid_argument("reduce needs tol > 0");
  TwoLayerPoint<Scalar> current = theta;
  while (current.width() > 0 && !is_irreducible(current, tol)) {
    const auto clusters =
        cluster_incoming<Scalar>(current.w, tol, identity_permutation(current.width()));
    std::vector<Neuron<Scalar>> kept;
    for (const auto& cluster : clusters) {
      Neuron<Scalar> merged{current.w.row(cluster.front()).transpose(),
                            Vector<Scalar>::Zero(current.d_out())};
      for (int idx : cluster) merged.a += current.a.row(idx).transpose();
      if (merged.a.template lpNorm<Eigen::Infinity>() > tol) kept.push_back(std::move(merged));
    }
    if (kept.empty()) {
      return TwoLayerPoint<Scalar>{current.activation, Matrix<Scalar>(0, current.d_in()),
                                   Matrix<Scalar>(0, current.d_out())};
    }
    current = TwoLayerPoint<Scalar>::from_neurons(current.activation, kept);
  }
  return current;
}

/// Finds pi with permute(reference, pi) == candidate up to tol in every
/// coordinate; empty optional-like result (empty vector) when none exists.
template <typename Scalar>
Permutation match_up_to_permutation(const TwoLayerPoint<Scalar>& candidate,
                                    const TwoLayerPoint<Scalar>& reference, Scalar tol) {
  if (candidate.width() != reference.width() || candidate.d_in() != reference.d_in() ||
      candidate.d_out() != reference.d_out()) {
    return {};
  }
  const int m = candidate.width();
  Permutation pi(m, -1);
  std::vector<char> used(m, 0);
  for (int i = 0; i < m; ++i) {
    const Vector<Scalar> u = candidate.unit(i);
    for (int j = 0; j < m; ++j) {
      if (!used[j] && (u - reference.unit(j)).template lpNorm<Eigen::Infinity>() <= tol) {
        pi[i] = j;
        used[j] = 1;
        break;
      }
    }
    if (pi[i] < 0) return {};
  }
  return pi;
}

// ---------------------------------------------------------------------------
// Toy symmetric loss log(1/2((w1 + w2 - a)^2 + (w1 w2 - b)^2) + 1)

template <typename Scalar>
struct ToyValue {
  Scalar value;
  Vector<Scalar> gradient;
};

template <typename Scalar>
ToyValue<Scalar> toy_sym_loss(Scalar w1, Scalar w2, Scalar a, Scalar b) {
  const Scalar u = w1 + w2 - a;
  const Scalar v = w1 * w2 - b;
  const Scalar inner = Scalar(0.5) * (u * u + v * v) + 1;
  Vector<Scalar> g(2);
  g << (u + v * w2) / inner, (u + v * w1) / inner;
  return {std::log(inner), g};
}

}  // namespace lsym
