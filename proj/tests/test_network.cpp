#include <gtest/gtest.h>

#include <cmath>

#include "lsym/network.hpp"
#include "lsym/objective.hpp"
#include "test_util.hpp"

using namespace lsym;
using namespace lsym::testing;

namespace {

double rel_inf_error(const Vec& approx, const Vec& exact) {
  return (approx - exact).lpNorm<Eigen::Infinity>() / std::max(1e-8, exact.lpNorm<Eigen::Infinity>());
}

Vec permute_flat(const Vec& flat, const Permutation& pi, int unit_dim) {
  Vec out(flat.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    out.segment(Eigen::Index(i) * unit_dim, unit_dim) = flat.segment(Eigen::Index(pi[i]) * unit_dim, unit_dim);
  }
  return out;
}

}  // namespace

TEST(Activation, BlendedIsSoftplusPlusSigmoid) {
  const auto b = Activation<double>::blended(1, 4);
  for (double x : {-30.0, -2.0, 0.0, 0.5, 3.0, 40.0}) {
    const double sp = std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
    const double sg = 1 / (1 + std::exp(-4 * x));
    EXPECT_NEAR(b.value(x), sp + sg, 1e-14 * (1 + std::abs(x)));
  }
}

TEST(Activation, DerivativesMatchFiniteDifferences) {
  for (const auto& act : all_activations()) {
    for (double x : {-5.0, -0.3, 0.0, 0.7, 4.0}) {
      const double h = 1e-6;
      const double fd = (act.value(x + h) - act.value(x - h)) / (2 * h);
      EXPECT_NEAR(act.derivative(x), fd, 1e-8) << act.name() << " at " << x;
    }
  }
}

TEST(Activation, FiniteEverywhere) {
  for (const auto& act : all_activations()) {
    for (double x : {-1e6, -700.0, 700.0, 1e6}) {
      EXPECT_TRUE(std::isfinite(act.value(x)));
      EXPECT_TRUE(std::isfinite(act.derivative(x)));
    }
  }
}

TEST(Activation, RejectsHomogeneousAndBadParameters) {
  EXPECT_THROW(Activation<double>::from_name("relu"), std::invalid_argument);
  EXPECT_THROW(Activation<double>::from_name("linear"), std::invalid_argument);
  EXPECT_THROW(Activation<double>::from_name("swish"), std::invalid_argument);
  EXPECT_THROW(Activation<double>::blended(0, 4), std::invalid_argument);
  EXPECT_THROW(Activation<double>::blended(1, -1), std::invalid_argument);
}

TEST(Forward, ZeroOutputsAndTanhAtZero) {
  Rng rng(1);
  Point p = random_point(rng, 3, 2, 2);
  p.a.setZero();
  EXPECT_EQ(forward2(p, Vec(Vec::Ones(2))), Vec(Vec::Zero(2)));
  Point single(Activation<double>::tanh(), Mat::Zero(1, 1), Mat::Constant(1, 1, 2.5));
  EXPECT_EQ(forward2(single, Vec(Vec::Constant(1, 3.0)))(0), 0.0);
  EXPECT_THROW(forward2(single, Vec(Vec::Zero(2))), std::invalid_argument);
}

TEST(Forward, PermutationInvariance) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Point p = random_point(rng, 5, 3, 2);
    const Permutation pi = random_permutation(rng, 5);
    const Vec x = gaussian(rng, 3, 1);
    EXPECT_LE((forward2(permute(p, pi), x) - forward2(p, x)).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Forward, MultiLayerAgreesWithTwoLayer) {
  Rng rng(3);
  const Point p = random_point(rng, 4, 3, 2);
  const auto mp = MultiLayerPoint<double>::from_two_layer(p);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = gaussian(rng, 3, 1);
    EXPECT_LE((forwardL(mp, x) - forward2(p, x)).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Forward, ZeroMultiLayerChain) {
  const auto act = Activation<double>::sigmoid();
  std::vector<Mat> layers{Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Constant(1, 1, 3.0)};
  const MultiLayerPoint<double> p(act, layers);
  // hidden 1: sigma(0) = 0.5; hidden 2: sigma(0 * 0.5) = 0.5; output 3 * 0.5
  EXPECT_DOUBLE_EQ(forwardL(p, Vec(Vec::Constant(1, 7.0)))(0), 1.5);
  const MultiLayerPoint<double> t(Activation<double>::tanh(), {Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1)});
  EXPECT_EQ(forwardL(t, Vec(Vec::Zero(1)))(0), 0.0);
  EXPECT_THROW(MultiLayerPoint<double>(act, {Mat::Zero(2, 1), Mat::Zero(1, 3)}), std::invalid_argument);
}

TEST(Forward, WorksForOtherScalars) {
  using LD = long double;
  TwoLayerPoint<LD> p(Activation<LD>::tanh(), Matrix<LD>::Constant(2, 1, LD(0.5)), Matrix<LD>::Ones(2, 1));
  Vector<LD> x(1);
  x << LD(1);
  EXPECT_NEAR(double(forward2(p, x)(0)), 2 * std::tanh(0.5), 1e-15);
}

TEST(Loss, ExamplesAndInvariance) {
  const Point p(Activation<double>::tanh(), Mat::Zero(1, 1), Mat::Constant(1, 1, 1.0));
  const Dataset<double> one(Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, -2.0));
  EXPECT_DOUBLE_EQ(loss(p, one), 2.0);

  Rng rng(4);
  const Point q = random_point(rng, 4, 2, 1);
  const Mat X = gaussian(rng, 30, 2);
  const Dataset<double> exact(X, forward2_batch(q, X));
  EXPECT_EQ(loss(q, exact), 0.0);

  const auto data = noise_data(rng, 30, 2, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Permutation pi = random_permutation(rng, 4);
    EXPECT_LE(std::abs(loss(permute(q, pi), data) - loss(q, data)), 1e-13);
  }
}

TEST(Dataset, Validation) {
  EXPECT_THROW(Dataset<double>(Mat(0, 2), Mat(0, 1)), std::invalid_argument);
  EXPECT_THROW(Dataset<double>(Mat::Zero(3, 2), Mat::Zero(2, 1)), std::invalid_argument);
  Mat bad = Mat::Zero(2, 1);
  bad(1, 0) = std::nan("");
  EXPECT_THROW(Dataset<double>(Mat::Zero(2, 1), bad), std::invalid_argument);
}

TEST(Gradient, MatchesFiniteDifferencesForEveryActivation) {
  Rng rng(5);
  for (const auto& act : all_activations()) {
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 1 + trial % 4, d_in = 1 + trial % 3, d_out = 1 + trial % 2;
      const Point p = random_point(rng, m, d_in, d_out, act);
      const auto data = noise_data(rng, 12, d_in, d_out);
      const Vec analytic = grad(p, data).flat();
      EXPECT_LE(rel_inf_error(grad_fd(p, data), analytic), 1e-5) << act.name() << " trial " << trial;
    }
  }
}

TEST(Gradient, MultiLayerMatchesFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto act = all_activations()[trial % 4];
    std::vector<Mat> layers{gaussian(rng, 3, 2), gaussian(rng, 2, 3), gaussian(rng, 2, 2)};
    const MultiLayerPoint<double> p(act, layers);
    const auto data = noise_data(rng, 10, 2, 2);
    const auto obj = make_objective(p, data);
    EXPECT_LE(rel_inf_error(grad_fd(obj, p.flat()), obj.gradient(p.flat())), 1e-5);
  }
}

TEST(Gradient, VanishesAtInterpolation) {
  Rng rng(7);
  const Point p = random_point(rng, 3, 2, 1);
  const Mat X = gaussian(rng, 25, 2);
  const Dataset<double> data(X, forward2_batch(p, X));
  EXPECT_LE(grad(p, data).flat().lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Gradient, PermutationEquivariance) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Point p = random_point(rng, 5, 2, 2);
    const auto data = noise_data(rng, 20, 2, 2);
    const Permutation pi = random_permutation(rng, 5);
    const Vec lhs = grad(permute(p, pi), data).flat();
    const Vec rhs = permute_flat(grad(p, data).flat(), pi, p.unit_dim());
    EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-13);
  }
}

TEST(Gradient, IdenticalUnitsGetIdenticalGradients) {
  Rng rng(9);
  Point p = random_point(rng, 4, 2, 1);
  p.w.row(1) = p.w.row(0);
  p.a.row(1) = p.a.row(0);
  const auto data = noise_data(rng, 30, 2, 1);
  const Point g = grad(p, data);
  EXPECT_EQ(g.unit(0), g.unit(1));
}

TEST(Hessian, SymmetricAndIdentityOnQuadratic) {
  const auto quad = make_quadratic_objective<double>(6);
  Rng rng(10);
  const Mat H = hessian(quad, Vec(gaussian(rng, 6, 1)));
  EXPECT_LE((H - Mat::Identity(6, 6)).lpNorm<Eigen::Infinity>(), 1e-6);
  const Point p = random_point(rng, 3, 2, 1);
  const Mat Hp = hessian(p, noise_data(rng, 15, 2, 1));
  EXPECT_EQ((Hp - Hp.transpose()).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_THROW(hessian(make_quadratic_objective<double>(2001), Vec(Vec::Zero(2001))), std::length_error);
}

TEST(Permute, IdentityAndInvolution) {
  Rng rng(11);
  const Point p = random_point(rng, 4, 2, 1);
  EXPECT_EQ(permute(p, identity_permutation(4)).flat(), p.flat());
  const Permutation swap{1, 0, 2, 3};
  EXPECT_EQ(permute(permute(p, swap), swap).flat(), p.flat());
  EXPECT_THROW(permute(p, Permutation{0, 0, 1, 2}), std::invalid_argument);
  EXPECT_THROW(permute(p, Permutation{0, 1, 2}), std::invalid_argument);
}

TEST(Irreducible, Cases) {
  Rng rng(12);
  Point p = random_point(rng, 4, 2, 1);
  EXPECT_TRUE(is_irreducible(p, 1e-9));
  Point dup = p;
  dup.w.row(2) = dup.w.row(0);
  EXPECT_FALSE(is_irreducible(dup, 1e-9));
  Point silent = p;
  silent.a.row(3).setZero();
  EXPECT_FALSE(is_irreducible(silent, 1e-9));
  int irreducible = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng r(seed);
    irreducible += is_irreducible(random_point(r, 6, 2, 1), 1e-9);
  }
  EXPECT_EQ(irreducible, 100);
}

TEST(Reduce, MergesDropsAndIsIdempotent) {
  Rng rng(13);
  const Point base = random_point(rng, 3, 2, 1);
  EXPECT_EQ(reduce(base, 1e-9).flat(), base.flat());

  // Append a zero-type pair (alpha, -alpha) sharing one incoming vector.
  Mat w(5, 2), a(5, 1);
  w << base.w, gaussian(rng, 1, 2), Mat::Zero(1, 2);
  w.row(4) = w.row(3);
  a << base.a, Mat::Constant(1, 1, 0.7), Mat::Constant(1, 1, -0.7);
  const Point padded(base.activation, w, a);
  const Point reduced = reduce(padded, 1e-9);
  EXPECT_EQ(reduced.width(), 3);
  const Mat X = gaussian(rng, 50, 2);
  EXPECT_LE((forward2_batch(padded, X) - forward2_batch(base, X)).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE((forward2_batch(reduced, X) - forward2_batch(base, X)).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_FALSE(match_up_to_permutation(reduced, base, 1e-12).empty());
  EXPECT_EQ(reduce(reduced, 1e-9).flat(), reduced.flat());

  // Copies merge by summing their outgoing weights.
  Mat wc(2, 2), ac(2, 1);
  wc << 0.3, -0.2, 0.3, -0.2;
  ac << 0.25, 0.75;
  const Point merged = reduce(Point(base.activation, wc, ac), 1e-9);
  ASSERT_EQ(merged.width(), 1);
  EXPECT_DOUBLE_EQ(merged.a(0, 0), 1.0);

  Point zero = base;
  zero.a.setZero();
  EXPECT_EQ(reduce(zero, 1e-9).width(), 0);
}

TEST(ToyLoss, ExamplesAndSymmetry) {
  EXPECT_NEAR(toy_sym_loss(2.0, 1.0, 3.0, 2.0).value, 0.0, 1e-15);
  EXPECT_NEAR(toy_sym_loss(1.0, 2.0, 3.0, 2.0).value, 0.0, 1e-15);
  EXPECT_NEAR(toy_sym_loss(0.0, 0.0, 3.0, 2.0).value, std::log(7.5), 1e-14);
  const auto obj = make_toy_objective<double>();
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec t = gaussian(rng, 2, 1);
    Vec swapped(2);
    swapped << t(1), t(0);
    EXPECT_DOUBLE_EQ(obj.value(t), obj.value(swapped));
    EXPECT_LE(rel_inf_error(grad_fd(obj, t), obj.gradient(t)), 1e-6);
  }
}

TEST(Flat, RoundTripsAndLayout) {
  Rng rng(15);
  const Point p = random_point(rng, 3, 2, 2);
  const Vec f = p.flat();
  EXPECT_EQ(f.segment(4, 2), p.w.row(1).transpose());
  EXPECT_EQ(f.segment(6, 2), p.a.row(1).transpose());
  EXPECT_EQ(p.with_flat(f).flat(), f);
  EXPECT_THROW(p.with_flat(Vec::Zero(3)), std::invalid_argument);
  const auto mp = MultiLayerPoint<double>::from_two_layer(p);
  EXPECT_EQ(mp.with_flat(mp.flat()).flat(), mp.flat());
  EXPECT_EQ(mp.hidden_widths(), std::vector<int>{3});
}
