#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace lsym {

enum class ActivationKind { softplus, sigmoid, tanh, blended };

/// Smooth elementwise nonlinearity. Homogeneous activations (relu, linear)
/// are rejected: the symmetry analysis assumes none beyond unit permutation.
template <typename Scalar>
class Activation {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Activation() = default;

  static Activation softplus() { return Activation(ActivationKind::softplus); }
  static Activation sigmoid() { return Activation(ActivationKind::sigmoid); }
  static Activation tanh() { return Activation(ActivationKind::tanh); }

  /// softplus(x) + alpha * sigmoid(gamma * x)
  static Activation blended(Scalar alpha, Scalar gamma) {
    if (!(alpha > 0) || !(gamma > 0)) {
      throw std::invalid_argument("blended activation needs alpha > 0 and gamma > 0");
    }
    Activation act(ActivationKind::blended);
    act.alpha_ = alpha;
    act.gamma_ = gamma;
    return act;
  }

  static Activation from_name(std::string_view name, Scalar alpha = 1, Scalar gamma = 4) {
    if (name == "softplus") return softplus();
    if (name == "sigmoid") return sigmoid();
    if (name == "tanh") return tanh();
    if (name == "blended") return blended(alpha, gamma);
    if (name == "relu" || name == "linear" || name == "identity" || name == "leaky_relu") {
      throw std::invalid_argument("homogeneous activation '" + std::string(name) +
                                  "' is not supported");
    }
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
  }

  ActivationKind kind() const { return kind_; }
  Scalar alpha() const { return alpha_; }
  Scalar gamma() const { return gamma_; }

  std::string name() const {
    switch (kind_) {
      case ActivationKind::softplus: return "softplus";
      case ActivationKind::sigmoid: return "sigmoid";
      case ActivationKind::tanh: return "tanh";
      case ActivationKind::blended: return "blended";
    }
    return "unknown";
  }

  Scalar value(Scalar x) const {
    switch (kind_) {
      case ActivationKind::softplus: return softplus_scalar(x);
      case ActivationKind::sigmoid: return sigmoid_scalar(x);
      case ActivationKind::tanh: return std::tanh(x);
      case ActivationKind::blended: return softplus_scalar(x) + alpha_ * sigmoid_scalar(gamma_ * x);
    }
    return 0;
  }

  Scalar derivative(Scalar x) const {
    switch (kind_) {
      case ActivationKind::softplus: return sigmoid_scalar(x);
      case ActivationKind::sigmoid: {
        const Scalar s = sigmoid_scalar(x);
        return s * (1 - s);
      }
      case ActivationKind::tanh: {
        const Scalar t = std::tanh(x);
        return 1 - t * t;
      }
      case ActivationKind::blended: {
        const Scalar s = sigmoid_scalar(gamma_ * x);
        return sigmoid_scalar(x) + alpha_ * gamma_ * s * (1 - s);
      }
    }
    return 0;
  }

  Array value(const Array& x) const {
    switch (kind_) {
      case ActivationKind::softplus: return softplus_array(x);
      case ActivationKind::sigmoid: return sigmoid_array(x);
      case ActivationKind::tanh: return x.tanh();
      case ActivationKind::blended: return softplus_array(x) + alpha_ * sigmoid_array(gamma_ * x);
    }
    return Array::Zero(x.size());
  }

  Array derivative(const Array& x) const {
    switch (kind_) {
      case ActivationKind::softplus: return sigmoid_array(x);
      case ActivationKind::sigmoid: {
        const Array s = sigmoid_array(x);
        return s * (1 - s);
      }
      case ActivationKind::tanh: {
        const Array t = x.tanh();
        return 1 - t * t;
      }
      case ActivationKind::blended: {
        const Array s = sigmoid_array(gamma_ * x);
        return sigmoid_array(x) + alpha_ * gamma_ * s * (1 - s);
      }
    }
    return Array::Zero(x.size());
  }

  friend bool operator==(const Activation& lhs, const Activation& rhs) {
    return lhs.kind_ == rhs.kind_ && lhs.alpha_ == rhs.alpha_ && lhs.gamma_ == rhs.gamma_;
  }

 private:
  explicit Activation(ActivationKind kind) : kind_(kind) {}

  static Scalar sigmoid_scalar(Scalar x) {
    if (x >= 0) return 1 / (1 + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (1 + e);
  }
  static Scalar softplus_scalar(Scalar x) {
    return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
  }
  static Array sigmoid_array(const Array& x) {
    const Array e = (-x.abs()).exp();
    return (x >= 0).select(1 / (1 + e), e / (1 + e));
  }
  static Array softplus_array(const Array& x) {
    return x.max(Scalar(0)) + (-x.abs()).exp().log1p();
  }

  ActivationKind kind_ = ActivationKind::sigmoid;
  Scalar alpha_ = 0;
  Scalar gamma_ = 0;
};

}  // namespace lsym
