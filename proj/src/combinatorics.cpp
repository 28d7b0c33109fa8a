#include "lsym/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lsym::combinatorics {

namespace {

constexpr int kGOracleMaxWidth = 9;
constexpr int kTOracleMaxWidth = 7;

void require_positive(int value, const char* name) {
  if (value < 1) {
    throw std::invalid_argument(std::string(name) + " must be >= 1");
  }
}

Count power(int base, int exponent) {
  Count result = 1;
  Count b = base;
  while (exponent > 0) {
    if (exponent & 1) result *= b;
    b *= b;
    exponent >>= 1;
  }
  return result;
}

// Calls visit(parts) for every ordered tuple of `count` positive ints summing to `total`.
void for_each_composition(int total, int count,
                          const std::function<void(const std::vector<int>&)>& visit) {
  if (count == 0) {
    if (total == 0) visit({});
    return;
  }
  if (total < count) return;
  std::vector<int> parts(count, 1);
  std::function<void(int, int)> rec = [&](int index, int remaining) {
    if (index == count - 1) {
      parts[index] = remaining;
      visit(parts);
      return;
    }
    int slots_after = count - index - 1;
    for (int v = 1; v <= remaining - slots_after; ++v) {
      parts[index] = v;
      rec(index + 1, remaining - v);
    }
  };
  rec(0, total);
}

// g(0..n) with g(0) unused.
std::vector<Count> bell_table(int n) {
  std::vector<Count> g(n + 1, 0);
  for (int u = 1; u <= n; ++u) g[u] = count_g(u);
  return g;
}

Count count_T_with(int r, int m, const std::vector<Count>& g) {
  Count total = count_G(r, m);
  for (int u = 1; u <= m - r; ++u) {
    total += binomial(m, u) * count_G(r, m - u) * g[u];
  }
  return total;
}

}  // namespace

Composition::Composition(std::vector<int> k_, std::vector<int> b_, int m_)
    : k(std::move(k_)), b(std::move(b_)), m(m_) {
  if (k.empty()) throw std::invalid_argument("composition needs at least one copy group");
  long sum = 0;
  for (int v : k) {
    if (v < 1) throw std::invalid_argument("copy group sizes must be >= 1");
    sum += v;
  }
  for (int v : b) {
    if (v < 1) throw std::invalid_argument("zero-type group sizes must be >= 1");
    sum += v;
  }
  if (sum != m) throw std::invalid_argument("composition does not sum to the target width");
}

std::vector<int> Composition::multiplicities() const {
  std::vector<int> c(m + 1, 0);
  for (int v : b) ++c[v];
  return c;
}

Count factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial of a negative number");
  Count result = 1;
  for (int i = 2; i <= n; ++i) result *= i;
  return result;
}

Count binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  Count result = 1;
  for (int i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

Count multinomial(std::span<const int> parts) {
  int total = 0;
  Count denominator = 1;
  for (int p : parts) {
    if (p < 0) throw std::invalid_argument("multinomial part must be non-negative");
    total += p;
    denominator *= factorial(p);
  }
  return factorial(total) / denominator;
}

Count count_G(int r, int m) {
  require_positive(r, "r");
  require_positive(m, "m");
  Count total = 0;
  for (int i = 1; i <= r; ++i) {
    Count term = binomial(r, i) * power(i, m);
    if ((r - i) % 2 == 0) {
      total += term;
    } else {
      total -= term;
    }
  }
  return total;
}

Count count_G_oracle(int r, int m) {
  require_positive(r, "r");
  require_positive(m, "m");
  if (m > kGOracleMaxWidth) {
    throw std::out_of_range("count_G_oracle: m exceeds the enumeration guard (9)");
  }
  Count total = 0;
  for_each_composition(m, r, [&](const std::vector<int>& k) { total += multinomial(k); });
  return total;
}

Count count_g(int u) {
  require_positive(u, "u");
  Count total = 0;
  for (int j = 1; j <= u; ++j) {
    Count g = count_G(j, u);
    Count f = factorial(j);
    // G(j,u) counts surjections, hence is a multiple of j!.
    total += g / f;
  }
  return total;
}

Count count_T(int r, int m) {
  require_positive(r, "r");
  require_positive(m, "m");
  if (r > m) throw std::invalid_argument("count_T requires r <= m");
  return count_T_with(r, m, bell_table(m - r));
}

Count count_T_oracle(int r, int m) {
  require_positive(r, "r");
  require_positive(m, "m");
  if (r > m) throw std::invalid_argument("count_T_oracle requires r <= m");
  if (m > kTOracleMaxWidth) {
    throw std::out_of_range("count_T_oracle: m exceeds the enumeration guard (7)");
  }
  Ratio total = 0;
  for (int j = 0; j <= m - r; ++j) {
    for_each_composition(m, r + j, [&](const std::vector<int>& s) {
      // Zero-type groups are unordered: each multiset of sizes is visited once,
      // as its non-increasing arrangement, and 1/prod c_i! removes the
      // relabelings among equal-size groups.
      if (!std::is_sorted(s.begin() + r, s.end(), std::greater<int>())) return;
      Composition comp({s.begin(), s.begin() + r}, {s.begin() + r, s.end()}, m);
      Count normalization = 1;
      for (int c : comp.multiplicities()) normalization *= factorial(c);
      total += Ratio(multinomial(s), normalization);
    });
  }
  if (boost::multiprecision::denominator(total) != 1) {
    throw std::logic_error("count_T_oracle produced a non-integer total");
  }
  return boost::multiprecision::numerator(total);
}

Ratio ratio_Rk(int k, int r_star, int m) {
  require_positive(r_star, "r_star");
  if (k < 0 || k >= r_star) throw std::invalid_argument("ratio_Rk requires 0 <= k < r_star");
  if (m <= r_star) throw std::invalid_argument("ratio_Rk requires m > r_star");
  return Ratio(count_G(r_star - k, m), count_T(r_star, m));
}

double mild_regime_approx(int k, int h, int r_star) {
  require_positive(k, "k");
  require_positive(h, "h");
  require_positive(r_star, "r_star");
  double log_value = k * std::log(static_cast<double>(r_star)) - k * std::log(2.0);
  for (int i = 1; i <= k; ++i) log_value -= std::log(static_cast<double>(h + i));
  return std::exp(log_value);
}

double asymptotic_logGT(int k, int m) {
  require_positive(m, "m");
  if (k < 0 || k > m) throw std::invalid_argument("asymptotic_logGT requires 0 <= k <= m");
  return k * std::log(static_cast<double>(m)) + std::lgamma(m + 1.0) - k * std::log(2.0) -
         std::lgamma(k + 1.0);
}

VastIdentity vast_identity_check(int r_star, int m) {
  if (r_star < 2) throw std::invalid_argument("vast_identity_check requires r_star >= 2");
  require_positive(m, "m");
  VastIdentity out;
  for (int k = 1; k <= r_star - 1; ++k) {
    out.lhs += binomial(r_star - 1, k - 1) * count_G(r_star - k, m);
  }
  out.rhs = power(r_star - 1, m);
  if (m >= r_star) {
    out.bound = Ratio(out.lhs, count_T(r_star, m));
  } else {
    // T(r*, m) is undefined below the minimal width; report lhs itself.
    out.bound = Ratio(out.lhs);
  }
  return out;
}

Count multilayer_counts(std::span<const int> r_vec, std::span<const int> m_vec, CountKind kind) {
  if (r_vec.size() != m_vec.size()) {
    throw std::invalid_argument("multilayer_counts: width lists differ in length");
  }
  Count product = 1;
  for (std::size_t l = 0; l < r_vec.size(); ++l) {
    if (kind == CountKind::T) {
      if (m_vec[l] < r_vec[l]) {
        throw std::invalid_argument("multilayer_counts: m_l < r_l for T");
      }
      product *= count_T(r_vec[l], m_vec[l]);
    } else {
      product *= count_G(r_vec[l], m_vec[l]);
    }
  }
  return product;
}

std::vector<RatioRow> ratio_table(int r_star, int m_max, int k_max, SaddleWeights weights,
                                  const std::vector<Count>& a_k) {
  require_positive(r_star, "r_star");
  require_positive(k_max, "k_max");
  if (r_star >= m_max) throw std::invalid_argument("ratio_table requires r_star < m_max");
  if (weights == SaddleWeights::custom && a_k.size() != static_cast<std::size_t>(r_star - 1)) {
    throw std::invalid_argument("ratio_table: custom a_k needs r_star - 1 entries");
  }
  std::vector<Count> a(r_star, 1);
  for (int k = 1; k < r_star; ++k) {
    if (weights == SaddleWeights::binomial_bound) a[k] = binomial(r_star - 1, k - 1);
    if (weights == SaddleWeights::custom) a[k] = a_k[k - 1];
  }

  const std::vector<Count> g = bell_table(m_max - r_star);
  const int k_top = std::min(k_max, r_star - 1);
  std::vector<RatioRow> rows;
  for (int m = r_star + 1; m <= m_max; ++m) {
    const Count t = count_T_with(r_star, m, g);
    std::vector<Count> G(r_star + 1);
    for (int r = 1; r <= r_star; ++r) G[r] = count_G(r, m);
    Count weighted = 0;
    for (int k = 1; k < r_star; ++k) weighted += a[k] * G[r_star - k];
    const Ratio aggregate(weighted, t);
    for (int k = 0; k <= k_top; ++k) {
      rows.push_back({m, k, Ratio(G[r_star - k], t), aggregate});
    }
  }
  return rows;
}

std::string ratio_table_csv(const std::vector<RatioRow>& rows, int significant_digits) {
  std::ostringstream out;
  out << "m,k,R_num,R_den,R_decimal,aggregate_num,aggregate_den,aggregate_decimal\n";
  for (const auto& row : rows) {
    out << row.m << ',' << row.k << ',' << to_string(numerator(row.value)) << ','
        << to_string(denominator(row.value)) << ',' << to_decimal(row.value, significant_digits)
        << ',' << to_string(numerator(row.aggregate)) << ','
        << to_string(denominator(row.aggregate)) << ','
        << to_decimal(row.aggregate, significant_digits) << '\n';
  }
  return out.str();
}

std::string to_decimal(const Ratio& value, int significant_digits) {
  if (significant_digits < 1) throw std::invalid_argument("significant_digits must be >= 1");
  if (value == 0) return "0";
  const bool negative = value < 0;
  Count num = abs(numerator(value));
  const Count den = denominator(value);

  // Decimal exponent e with 10^e <= value < 10^(e+1).
  int e = static_cast<int>(std::floor(log_count(num) / std::log(10.0) -
                                      log_count(den) / std::log(10.0)));
  auto pow10 = [](int n) {
    Count p = 1;
    for (int i = 0; i < n; ++i) p *= 10;
    return p;
  };
  auto fits = [&](int exponent) {
    // 10^exponent <= num/den
    return exponent >= 0 ? pow10(exponent) * den <= num : den <= num * pow10(-exponent);
  };
  while (!fits(e)) --e;
  while (fits(e + 1)) ++e;

  // scaled = value * 10^(digits-1-e), rounded half-even.
  const int shift = significant_digits - 1 - e;
  Count scaled_num = shift >= 0 ? num * pow10(shift) : num;
  Count scaled_den = shift >= 0 ? den : den * pow10(-shift);
  Count q = scaled_num / scaled_den;
  Count rem = scaled_num - q * scaled_den;
  if (2 * rem > scaled_den || (2 * rem == scaled_den && (q & 1) != 0)) ++q;
  if (q == pow10(significant_digits)) {
    q /= 10;
    ++e;
  }

  std::string digits = to_string(q);
  // Trim trailing zeros of the mantissa.
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();

  std::string out = negative ? "-" : "";
  if (e < -5 || e >= significant_digits) {
    out += digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    out += (e < 0 ? "e-" : "e+");
    std::string exp_digits = std::to_string(std::abs(e));
    if (exp_digits.size() < 2) exp_digits = "0" + exp_digits;
    out += exp_digits;
  } else if (e >= 0) {
    if (static_cast<int>(digits.size()) <= e + 1) {
      out += digits + std::string(e + 1 - digits.size(), '0');
    } else {
      out += digits.substr(0, e + 1) + "." + digits.substr(e + 1);
    }
  } else {
    out += "0." + std::string(-e - 1, '0') + digits;
  }
  return out;
}

double log_count(const Count& value) {
  if (value <= 0) throw std::domain_error("log_count of a non-positive value");
  const unsigned bits = msb(value);
  if (bits < 1000) return std::log(value.convert_to<double>());
  const unsigned shift = bits - 60;
  const Count top = value >> shift;
  return std::log(top.convert_to<double>()) + shift * std::log(2.0);
}

std::string to_string(const Count& value) { return value.str(); }

}  // namespace lsym::combinatorics
