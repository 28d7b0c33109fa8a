#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>

#include "lsym/network.hpp"

namespace lsym {

/// A differentiable scalar function of a flat parameter vector, the common
/// currency of finite differences, Hessians, training, and gradient flow.
template <typename Scalar>
struct Objective {
  Eigen::Index dimension = 0;
  std::function<Scalar(const Vector<Scalar>&)> value;
  std::function<Scalar(const Vector<Scalar>&, Vector<Scalar>&)> value_and_gradient;

  Vector<Scalar> gradient(const Vector<Scalar>& theta) const {
    Vector<Scalar> g;
    value_and_gradient(theta, g);
    return g;
  }
};

/// Least-squares loss of a two-layer network of the same shape as `shape`.
template <typename Scalar>
Objective<Scalar> make_objective(const TwoLayerPoint<Scalar>& shape, const Dataset<Scalar>& data) {
  auto owned = std::make_shared<const Dataset<Scalar>>(data);
  const TwoLayerPoint<Scalar> proto = shape;
  Objective<Scalar> obj;
  obj.dimension = shape.parameter_count();
  obj.value = [owned, proto](const Vector<Scalar>& theta) {
    return loss(proto.with_flat(theta), *owned);
  };
  obj.value_and_gradient = [owned, proto](const Vector<Scalar>& theta, Vector<Scalar>& g) {
    TwoLayerPoint<Scalar> gp;
    const Scalar value = loss_and_grad(proto.with_flat(theta), *owned, gp);
    g = gp.flat();
    return value;
  };
  return obj;
}

template <typename Scalar>
Objective<Scalar> make_objective(const MultiLayerPoint<Scalar>& shape, const Dataset<Scalar>& data) {
  auto owned = std::make_shared<const Dataset<Scalar>>(data);
  const MultiLayerPoint<Scalar> proto = shape;
  Objective<Scalar> obj;
  obj.dimension = shape.parameter_count();
  obj.value = [owned, proto](const Vector<Scalar>& theta) {
    return loss(proto.with_flat(theta), *owned);
  };
  obj.value_and_gradient = [owned, proto](const Vector<Scalar>& theta, Vector<Scalar>& g) {
    MultiLayerPoint<Scalar> gp;
    const Scalar value = loss_and_grad(proto.with_flat(theta), *owned, gp);
    g = gp.flat();
    return value;
  };
  return obj;
}

/// 1/2 ||theta||^2
template <typename Scalar>
Objective<Scalar> make_quadratic_objective(Eigen::Index dimension) {
  Objective<Scalar> obj;
  obj.dimension = dimension;
  obj.value = [](const Vector<Scalar>& theta) { return Scalar(0.5) * theta.squaredNorm(); };
  obj.value_and_gradient = [](const Vector<Scalar>& theta, Vector<Scalar>& g) {
    g = theta;
    return Scalar(0.5) * theta.squaredNorm();
  };
  return obj;
}

/// Toy symmetric loss on theta = (w1, w2); two units of dimension 1.
template <typename Scalar>
Objective<Scalar> make_toy_objective(Scalar a = 3, Scalar b = 2) {
  Objective<Scalar> obj;
  obj.dimension = 2;
  obj.value = [a, b](const Vector<Scalar>& theta) {
    return toy_sym_loss<Scalar>(theta(0), theta(1), a, b).value;
  };
  obj.value_and_gradient = [a, b](const Vector<Scalar>& theta, Vector<Scalar>& g) {
    auto r = toy_sym_loss<Scalar>(theta(0), theta(1), a, b);
    g = r.gradient;
    return r.value;
  };
  return obj;
}

/// Central differences of the objective value. A non-positive step selects
/// the default 1e-5 * (1 + |theta_i|).
template <typename Scalar>
Vector<Scalar> grad_fd(const Objective<Scalar>& obj, const Vector<Scalar>& theta, Scalar step = 0) {
  Vector<Scalar> g(theta.size());
  Vector<Scalar> probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const Scalar h = step > 0 ? step : Scalar(1e-5) * (1 + std::abs(theta(i)));
    probe(i) = theta(i) + h;
    const Scalar up = obj.value(probe);
    probe(i) = theta(i) - h;
    const Scalar down = obj.value(probe);
    probe(i) = theta(i);
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

template <typename Scalar>
Vector<Scalar> grad_fd(const TwoLayerPoint<Scalar>& theta, const Dataset<Scalar>& data, Scalar step = 0) {
  return grad_fd(make_objective(theta, data), theta.flat(), step);
}

inline constexpr Eigen::Index kHessianMaxParameters = 2000;

/// Central differences of the analytic gradient with step 1e-4 (1 + |theta_i|),
/// symmetrized as (H + H^T) / 2.
template <typename Scalar>
Matrix<Scalar> hessian(const Objective<Scalar>& obj, const Vector<Scalar>& theta) {
  const Eigen::Index n = theta.size();
  if (n > kHessianMaxParameters) {
    throw std::length_error("hessian: parameter count exceeds the dense guard (2000)");
  }
  Matrix<Scalar> H(n, n);
  Vector<Scalar> probe = theta, g_up, g_down;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar h = Scalar(1e-4) * (1 + std::abs(theta(i)));
    probe(i) = theta(i) + h;
    obj.value_and_gradient(probe, g_up);
    probe(i) = theta(i) - h;
    obj.value_and_gradient(probe, g_down);
    probe(i) = theta(i);
    H.col(i) = (g_up - g_down) / (2 * h);
  }
  return Scalar(0.5) * (H + H.transpose());
}

template <typename Scalar>
Matrix<Scalar> hessian(const TwoLayerPoint<Scalar>& theta, const Dataset<Scalar>& data) {
  return hessian(make_objective(theta, data), theta.flat());
}

}  // namespace lsym
