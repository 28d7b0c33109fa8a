#pragma once

#include <map>
#include <random>
#include <utility>
#include <vector>

#include "lsym/network.hpp"

namespace lsym::expansion {

using Vec = Vector<double>;
using Mat = Matrix<double>;
using Point = TwoLayerPoint<double>;
using MultiPoint = MultiLayerPoint<double>;
using Rng = std::mt19937_64;

/// Copy-group sizes k (one per source unit) and zero-type group sizes b.
struct CompositionSpec {
  std::vector<int> k;
  std::vector<int> b;

  int width() const;
  void validate(int r) const;
};

/// a_splits[t][i] sums to a_t over i; alpha_splits[t][i] sums to zero over i;
/// w_prime[t] is the shared incoming vector of zero-type group t.
struct SplitCoefficients {
  std::vector<std::vector<Vec>> a_splits;
  std::vector<Vec> w_prime;
  std::vector<std::vector<Vec>> alpha_splits;
};

/// Address of one point of the expansion manifold: the unpermuted layout
/// lists copy groups in source order followed by zero-type groups, then pi
/// is applied (slot s takes unpermuted unit pi[s]).
struct ExpansionSpec {
  CompositionSpec composition;
  SplitCoefficients splits;
  Permutation pi;

  /// (m - r - j) d_out + j d_in
  int free_parameter_count(int d_in, int d_out) const;
};

/// Replication of a critical point: beta[t] has k[t] entries summing to one.
struct CriticalSplit {
  std::vector<int> k;
  std::vector<std::vector<double>> beta;
  Permutation pi;

  int width() const;
  int free_parameter_count() const { return width() - static_cast<int>(k.size()); }
};

inline constexpr double kConstructedTol = 1e-12;

Point expand_point(const Point& theta_r, const ExpansionSpec& spec, double tol = kConstructedTol);

/// Random point of Theta_{r->m}: j uniform in [0, m-r], (k, b) uniform over
/// compositions, a-splits on the simplex, zero-sum Gaussian alpha-splits,
/// Gaussian w' rejection-sampled to stay tol-distinct, uniform pi.
std::pair<ExpansionSpec, Point> sample_expansion(const Point& theta_r, int m, Rng& rng,
                                                 double tol = 1e-6);

Point expand_critical(const Point& theta_r_star, const CriticalSplit& split);

/// Uniform composition of m into r positive parts with Dirichlet(1) betas
/// (so every beta lies in [0, 1]) and a uniform permutation.
CriticalSplit sample_critical_split(int r, int m, Rng& rng);

/// Transpositions (base, u) acting on unit labels: applying them in order,
/// each swapping the current slots of unit `base` and unit u, turns the
/// identity arrangement into pi (slot s holds unit pi[s]).
std::vector<std::pair<int, int>> transposition_decomposition(const Permutation& pi, int base = 0);

/// Applies a unit-label transposition sequence to an arrangement in place.
void apply_unit_transpositions(std::vector<int>& arrangement,
                               const std::vector<std::pair<int, int>>& transpositions);

struct Segment {
  Vec start;
  Vec end;
};

/// Line segments in the flat unit-major parameter space of `prototype`.
struct PiecewisePath {
  Point prototype;
  std::vector<Segment> segments;

  Vec at(std::size_t segment, double t) const {
    const Segment& s = segments[segment];
    if (t == 1) return s.end;
    return s.start + t * (s.end - s.start);
  }
};

/// Connects two points of Theta_{r->m}(theta_r), m > r, by line segments
/// inside the manifold. Both endpoints are validated by reduce-equivalence.
PiecewisePath build_path(const Point& A, const Point& B, const Point& theta_r, double tol = 1e-9);

/// Two-layer expansion of every hidden layer, last hidden layer first.
/// specs[l] addresses hidden layer l+1; its dimensions refer to the pair
/// (layers[l], layers[l+1]) after all later layers have been expanded.
MultiPoint multilayer_expand(const MultiPoint& theta, const std::vector<int>& m_vec,
                             const std::vector<ExpansionSpec>& specs, double tol = kConstructedTol);

std::pair<std::vector<ExpansionSpec>, MultiPoint> sample_multilayer_expansion(
    const MultiPoint& theta, const std::vector<int>& m_vec, Rng& rng, double tol = 1e-6);

/// Hidden layer l (1-based) of a multi-layer point as a two-layer block:
/// incoming vectors are rows of layers[l-1], outgoing vectors columns of layers[l].
Point layer_pair(const MultiPoint& theta, int hidden_layer);
MultiPoint with_layer_pair(const MultiPoint& theta, int hidden_layer, const Point& pair);

struct NeuronLabel {
  enum class Kind { copy, zero_type };
  Kind kind = Kind::copy;
  int group = 0;  ///< teacher index for copies, zero-type group index otherwise
};

struct CopyGroup {
  int teacher = 0;
  std::vector<int> members;
  double output_error = 0;  ///< ||sum a - a_teacher||_inf
};

struct ZeroTypeGroup {
  std::vector<int> members;
  double residual = 0;  ///< ||sum a||_inf
};

struct NeuronClassification {
  std::vector<NeuronLabel> labels;
  std::vector<CopyGroup> copies;
  std::vector<ZeroTypeGroup> zero_groups;
  bool consistent = false;

  int copy_count() const;
  /// Number of neurons per zero-type group size.
  std::map<int, int> zero_type_histogram() const;
};

NeuronClassification classify_neurons(const Point& student, const Point& teacher, double tol);

/// Permutation sorting units [w_i, a_i] in non-increasing lexicographic
/// order, ties kept in original order.
Permutation replicant_region(const Point& theta);
Permutation replicant_region(const Vec& flat_units, int unit_dim);

}  // namespace lsym::expansion
