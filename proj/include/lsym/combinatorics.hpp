#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace lsym::combinatorics {

/// Exact non-negative integer count.
using Count = boost::multiprecision::cpp_int;
/// Exact rational, always kept in lowest terms.
using Ratio = boost::multiprecision::cpp_rational;

/// Shape of an affine subspace: r copy-group sizes k and j zero-type group
/// sizes b, every entry >= 1, summing to the target width m.
struct Composition {
  std::vector<int> k;
  std::vector<int> b;
  int m = 0;

  Composition() = default;
  Composition(std::vector<int> k_, std::vector<int> b_, int m_);

  int r() const { return static_cast<int>(k.size()); }
  int j() const { return static_cast<int>(b.size()); }

  /// c[i] = number of zero-type groups of size i (index 0 unused).
  std::vector<int> multiplicities() const;
};

Count factorial(int n);
Count binomial(int n, int k);
Count multinomial(std::span<const int> parts);

/// Alternating-sum closed form; zero for r > m and m! for r == m.
Count count_G(int r, int m);

/// Brute-force sum of multinomials over compositions of m into r positive
/// parts. Rejects m > 9.
Count count_G_oracle(int r, int m);

/// g(u) = sum_j G(j,u)/j!, the u-th Bell number.
Count count_g(int u);

/// Number of affine subspaces of the r -> m expansion manifold (r <= m).
Count count_T(int r, int m);

/// Enumerates (k, b) with b non-increasing and the 1/c! normalization.
/// Rejects m > 7.
Count count_T_oracle(int r, int m);

/// G(r* - k, m) / T(r*, m).
Ratio ratio_Rk(int k, int r_star, int m);

/// (r*)^k / (2^k (h+1)...(h+k)).
double mild_regime_approx(int k, int h, int r_star);

/// log( m^k m! / (2^k k!) ).
double asymptotic_logGT(int k, int m);

struct VastIdentity {
  Count lhs;
  Count rhs;
  Ratio bound;  ///< lhs / T(r*, m)
};

VastIdentity vast_identity_check(int r_star, int m);

enum class CountKind { T, G };

Count multilayer_counts(std::span<const int> r_vec, std::span<const int> m_vec,
                        CountKind kind);

enum class SaddleWeights { ones, binomial_bound, custom };

struct RatioRow {
  int m = 0;
  int k = 0;
  Ratio value;
  Ratio aggregate;  ///< sum_{k=1}^{r*-1} a_k R_k at this m
};

/// Rows for m = r*+1..m_max and k = 0..min(k_max, r*-1).
///
/// The aggregate column always sums over every saddle level k = 1..r*-1,
/// independent of k_max. With `SaddleWeights::custom` the caller supplies
/// a_1..a_{r*-1} in `a_k`.
std::vector<RatioRow> ratio_table(int r_star, int m_max, int k_max,
                                  SaddleWeights weights = SaddleWeights::ones,
                                  const std::vector<Count>& a_k = {});

/// CSV with header m,k,R_num,R_den,R_decimal,aggregate_num,aggregate_den,aggregate_decimal.
std::string ratio_table_csv(const std::vector<RatioRow>& rows, int significant_digits = 12);

/// Decimal rendering with round-half-even at the given number of significant digits.
std::string to_decimal(const Ratio& value, int significant_digits = 12);

/// Natural log of a positive count, exact up to double rounding at any magnitude.
double log_count(const Count& value);

std::string to_string(const Count& value);

}  // namespace lsym::combinatorics
