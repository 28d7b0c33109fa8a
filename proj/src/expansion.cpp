#include "lsym/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lsym::expansion {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Vec gaussian_vector(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// Uniform random ordered composition of `total` into `parts` positive ints.
std::vector<int> random_composition(int total, int parts, Rng& rng) {
  std::vector<int> cuts(total - 1);
  std::iota(cuts.begin(), cuts.end(), 1);
  // Partial Fisher-Yates: the first parts-1 entries are a uniform subset.
  for (int i = 0; i < parts - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 2);
    std::swap(cuts[i], cuts[pick(rng)]);
  }
  std::vector<int> chosen(cuts.begin(), cuts.begin() + (parts - 1));
  std::sort(chosen.begin(), chosen.end());
  std::vector<int> out;
  int previous = 0;
  for (int c : chosen) {
    out.push_back(c - previous);
    previous = c;
  }
  out.push_back(total - previous);
  return out;
}

// Dirichlet(1) weights; the last entry is 1 - sum(others) so the sum is exact.
std::vector<double> simplex_weights(int n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> u(n);
  double total = 0;
  for (double& v : u) total += (v = expo(rng));
  double partial = 0;
  for (int i = 0; i + 1 < n; ++i) partial += (u[i] /= total);
  u[n - 1] = 1.0 - partial;
  return u;
}

Permutation random_permutation(int m, Rng& rng) {
  Permutation pi = identity_permutation(m);
  for (int i = m - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(pi[i], pi[pick(rng)]);
  }
  return pi;
}

bool is_member(const Point& candidate, const Point& theta_r, double tol) {
  const Point reduced = reduce(candidate, tol);
  return reduced.width() == theta_r.width() &&
         !match_up_to_permutation(reduced, theta_r, tol).empty();
}

// Index of the source unit whose incoming vector is within tol of w, or -1.
int copy_of(const Point& theta_r, const Eigen::Ref<const Vec>& w, double tol) {
  for (int t = 0; t < theta_r.width(); ++t) {
    if (inf_distance<double>(theta_r.w.row(t).transpose(), w) <= tol) return t;
  }
  return -1;
}

// Moves every copy group's output mass onto its lowest-index member and
// zeroes all other outputs. Returns the active slot of each source unit.
std::vector<int> concentrate(Point& p, const Point& theta_r, double tol) {
  const int r = theta_r.width();
  std::vector<int> active(r, -1);
  Mat sums = Mat::Zero(r, p.d_out());
  for (int i = 0; i < p.width(); ++i) {
    const int t = copy_of(theta_r, p.w.row(i).transpose(), tol);
    if (t < 0) continue;
    if (active[t] < 0) active[t] = i;
    sums.row(t) += p.a.row(i);
  }
  for (int t = 0; t < r; ++t) {
    if (active[t] < 0) throw std::logic_error("build_path: copy group missing");
  }
  p.a.setZero();
  for (int t = 0; t < r; ++t) p.a.row(active[t]) = sums.row(t);
  return active;
}

void push_waypoint(std::vector<Vec>& waypoints, const Vec& v) {
  if (waypoints.empty() || waypoints.back() != v) waypoints.push_back(v);
}

}  // namespace

int CompositionSpec::width() const {
  return std::accumulate(k.begin(), k.end(), 0) + std::accumulate(b.begin(), b.end(), 0);
}

void CompositionSpec::validate(int r) const {
  if (static_cast<int>(k.size()) != r) {
    throw std::invalid_argument("composition has " + std::to_string(k.size()) +
                                " copy groups, source width is " + std::to_string(r));
  }
  for (int v : k) {
    if (v < 1) throw std::invalid_argument("copy group sizes must be >= 1");
  }
  for (int v : b) {
    if (v < 1) throw std::invalid_argument("zero-type group sizes must be >= 1");
  }
}

int ExpansionSpec::free_parameter_count(int d_in, int d_out) const {
  const int r = static_cast<int>(composition.k.size());
  const int j = static_cast<int>(composition.b.size());
  return (composition.width() - r - j) * d_out + j * d_in;
}

int CriticalSplit::width() const { return std::accumulate(k.begin(), k.end(), 0); }

Point expand_point(const Point& theta_r, const ExpansionSpec& spec, double tol) {
  const int r = theta_r.width();
  if (!is_irreducible(theta_r, tol)) throw std::invalid_argument("expand_point: source is reducible");
  const auto& comp = spec.composition;
  comp.validate(r);
  const auto& s = spec.splits;
  const int j = static_cast<int>(comp.b.size());
  const int m = comp.width();
  if (static_cast<int>(s.a_splits.size()) != r || static_cast<int>(s.w_prime.size()) != j ||
      static_cast<int>(s.alpha_splits.size()) != j) {
    throw std::invalid_argument("expand_point: split coefficients do not match the composition");
  }
  const Permutation pi = spec.pi.empty() ? identity_permutation(m) : spec.pi;
  if (!is_permutation_of(pi, m)) throw std::invalid_argument("expand_point: invalid permutation");

  Mat w(m, theta_r.d_in()), a(m, theta_r.d_out());
  int row = 0;
  for (int t = 0; t < r; ++t) {
    if (static_cast<int>(s.a_splits[t].size()) != comp.k[t]) {
      throw std::invalid_argument("expand_point: a-split count differs from k_t");
    }
    Vec sum = Vec::Zero(theta_r.d_out());
    double scale = inf_norm(theta_r.a.row(t).transpose());
    for (const Vec& part : s.a_splits[t]) {
      if (part.size() != theta_r.d_out()) throw std::invalid_argument("expand_point: a-split dimension");
      w.row(row) = theta_r.w.row(t);
      a.row(row) = part.transpose();
      sum += part;
      scale = std::max(scale, inf_norm(part));
      ++row;
    }
    if (inf_norm(sum - theta_r.a.row(t).transpose()) > tol * (1 + scale)) {
      throw std::invalid_argument("expand_point: a-splits do not sum to a_t");
    }
  }
  for (int t = 0; t < j; ++t) {
    const Vec& wp = s.w_prime[t];
    if (wp.size() != theta_r.d_in()) throw std::invalid_argument("expand_point: w' dimension");
    if (copy_of(theta_r, wp, tol) >= 0) {
      throw std::invalid_argument("expand_point: zero-type w' collides with a source vector");
    }
    for (int u = 0; u < t; ++u) {
      if (inf_distance<double>(s.w_prime[u], wp) <= tol) {
        throw std::invalid_argument("expand_point: zero-type w' vectors collide");
      }
    }
    if (static_cast<int>(s.alpha_splits[t].size()) != comp.b[t]) {
      throw std::invalid_argument("expand_point: alpha-split count differs from b_t");
    }
    Vec sum = Vec::Zero(theta_r.d_out());
    double scale = 0;
    for (const Vec& part : s.alpha_splits[t]) {
      if (part.size() != theta_r.d_out()) throw std::invalid_argument("expand_point: alpha dimension");
      w.row(row) = wp.transpose();
      a.row(row) = part.transpose();
      sum += part;
      scale = std::max(scale, inf_norm(part));
      ++row;
    }
    if (inf_norm(sum) > tol * (1 + scale)) {
      throw std::invalid_argument("expand_point: alpha-splits do not sum to zero");
    }
  }
  return permute(Point(theta_r.activation, std::move(w), std::move(a)), pi);
}

std::pair<ExpansionSpec, Point> sample_expansion(const Point& theta_r, int m, Rng& rng,
                                                 double tol) {
  const int r = theta_r.width();
  if (m < r) throw std::invalid_argument("sample_expansion requires m >= r");
  std::uniform_int_distribution<int> pick_j(0, m - r);
  const int j = pick_j(rng);
  const std::vector<int> parts = random_composition(m, r + j, rng);

  ExpansionSpec spec;
  spec.composition.k.assign(parts.begin(), parts.begin() + r);
  spec.composition.b.assign(parts.begin() + r, parts.end());
  for (int t = 0; t < r; ++t) {
    const Vec a_t = theta_r.a.row(t).transpose();
    const auto u = simplex_weights(spec.composition.k[t], rng);
    std::vector<Vec> split;
    Vec partial = Vec::Zero(a_t.size());
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
      split.push_back(u[i] * a_t);
      partial += split.back();
    }
    split.push_back(a_t - partial);
    spec.splits.a_splits.push_back(std::move(split));
  }
  for (int t = 0; t < j; ++t) {
    Vec wp;
    bool ok = false;
    while (!ok) {
      wp = gaussian_vector(theta_r.d_in(), rng);
      ok = copy_of(theta_r, wp, tol) < 0;
      for (const Vec& other : spec.splits.w_prime) ok = ok && inf_distance<double>(other, wp) > tol;
    }
    spec.splits.w_prime.push_back(wp);
    std::vector<Vec> alphas;
    Vec partial = Vec::Zero(theta_r.d_out());
    for (int i = 0; i + 1 < spec.composition.b[t]; ++i) {
      alphas.push_back(gaussian_vector(theta_r.d_out(), rng));
      partial += alphas.back();
    }
    alphas.push_back(-partial);
    spec.splits.alpha_splits.push_back(std::move(alphas));
  }
  spec.pi = random_permutation(m, rng);
  Point point = expand_point(theta_r, spec, kConstructedTol);
  return {std::move(spec), std::move(point)};
}

Point expand_critical(const Point& theta_r_star, const CriticalSplit& split) {
  const int r = theta_r_star.width();
  if (static_cast<int>(split.k.size()) != r || static_cast<int>(split.beta.size()) != r) {
    throw std::invalid_argument("expand_critical: split does not match the source width");
  }
  const int m = split.width();
  const Permutation pi = split.pi.empty() ? identity_permutation(m) : split.pi;
  if (!is_permutation_of(pi, m)) throw std::invalid_argument("expand_critical: invalid permutation");
  Mat w(m, theta_r_star.d_in()), a(m, theta_r_star.d_out());
  int row = 0;
  for (int t = 0; t < r; ++t) {
    if (split.k[t] < 1 || static_cast<int>(split.beta[t].size()) != split.k[t]) {
      throw std::invalid_argument("expand_critical: beta count differs from k_t");
    }
    double total = 0;
    for (double beta : split.beta[t]) {
      w.row(row) = theta_r_star.w.row(t);
      a.row(row) = beta * theta_r_star.a.row(t);
      total += beta;
      ++row;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("expand_critical: betas must sum to 1");
  }
  return permute(Point(theta_r_star.activation, std::move(w), std::move(a)), pi);
}

CriticalSplit sample_critical_split(int r, int m, Rng& rng) {
  if (r < 1 || m < r) throw std::invalid_argument("sample_critical_split requires 1 <= r <= m");
  CriticalSplit split;
  split.k = random_composition(m, r, rng);
  for (int kt : split.k) split.beta.push_back(simplex_weights(kt, rng));
  split.pi = random_permutation(m, rng);
  return split;
}

std::vector<std::pair<int, int>> transposition_decomposition(const Permutation& pi, int base) {
  const int m = static_cast<int>(pi.size());
  if (!is_permutation_of(pi, m)) throw std::invalid_argument("transposition_decomposition: invalid permutation");
  if (base < 0 || base >= m) throw std::invalid_argument("transposition_decomposition: base out of range");
  std::vector<int> arrangement = identity_permutation(m);
  std::vector<int> slot_of = identity_permutation(m);
  std::vector<std::pair<int, int>> out;
  auto swap_units = [&](int u) {
    const int x = slot_of[base], y = slot_of[u];
    std::swap(arrangement[x], arrangement[y]);
    slot_of[base] = y;
    slot_of[u] = x;
    out.emplace_back(base, u);
  };
  while (true) {
    const int here = slot_of[base];
    if (pi[here] != base) {
      swap_units(pi[here]);
      continue;
    }
    int misplaced = -1;
    for (int s = 0; s < m; ++s) {
      if (arrangement[s] != pi[s]) {
        misplaced = arrangement[s];
        break;
      }
    }
    if (misplaced < 0) break;
    swap_units(misplaced);
  }
  return out;
}

void apply_unit_transpositions(std::vector<int>& arrangement,
                               const std::vector<std::pair<int, int>>& transpositions) {
  for (auto [u, v] : transpositions) {
    auto iu = std::find(arrangement.begin(), arrangement.end(), u);
    auto iv = std::find(arrangement.begin(), arrangement.end(), v);
    if (iu == arrangement.end() || iv == arrangement.end()) {
      throw std::invalid_argument("apply_unit_transpositions: unknown unit");
    }
    std::iter_swap(iu, iv);
  }
}

PiecewisePath build_path(const Point& A, const Point& B, const Point& theta_r, double tol) {
  if (A.width() != B.width() || A.d_in() != B.d_in() || A.d_out() != B.d_out() ||
      A.d_in() != theta_r.d_in() || A.d_out() != theta_r.d_out()) {
    throw std::invalid_argument("build_path: endpoint shapes differ");
  }
  const int m = A.width();
  const int r = theta_r.width();
  if (m <= r) {
    throw std::invalid_argument("build_path: the manifold is disconnected for m == r");
  }
  if (!is_member(A, theta_r, tol) || !is_member(B, theta_r, tol)) {
    throw std::invalid_argument("build_path: endpoint is not in the expansion manifold");
  }

  PiecewisePath path{A, {}};
  const Vec a_flat = A.flat(), b_flat = B.flat();
  if (a_flat == b_flat) {
    path.segments.push_back({a_flat, a_flat});
    return path;
  }
  if ((A.w - B.w).lpNorm<Eigen::Infinity>() <= tol) {
    path.segments.push_back({a_flat, b_flat});
    return path;
  }

  std::vector<Vec> waypoints{a_flat};
  Point current = A;
  const std::vector<int> active_a = concentrate(current, theta_r, tol);
  push_waypoint(waypoints, current.flat());

  std::vector<char> is_active_a(m, 0);
  for (int s : active_a) is_active_a[s] = 1;
  int base = 0;
  while (is_active_a[base]) ++base;
  const Vec dead_w = current.w.row(base).transpose();
  for (int s = 0; s < m; ++s) {
    if (!is_active_a[s]) current.w.row(s) = dead_w.transpose();
  }
  push_waypoint(waypoints, current.flat());

  // Same canonical form for B; its waypoints are appended in reverse.
  std::vector<Vec> tail{b_flat};
  Point target = B;
  const std::vector<int> active_b = concentrate(target, theta_r, tol);
  push_waypoint(tail, target.flat());
  std::vector<char> is_active_b(m, 0);
  for (int s : active_b) is_active_b[s] = 1;
  for (int s = 0; s < m; ++s) {
    if (!is_active_b[s]) target.w.row(s) = dead_w.transpose();
  }
  push_waypoint(tail, target.flat());

  // Relating permutation: slot s of the target holds unit pi[s] of `current`.
  Permutation pi(m, -1);
  for (int t = 0; t < r; ++t) pi[active_b[t]] = active_a[t];
  std::vector<int> spare_dead;
  for (int s = 0; s < m; ++s) {
    if (!is_active_a[s] && !is_active_b[s]) pi[s] = s;
  }
  for (int s = 0; s < m; ++s) {
    if (!is_active_a[s] && is_active_b[s]) spare_dead.push_back(s);
  }
  std::size_t next_spare = 0;
  for (int s = 0; s < m; ++s) {
    if (pi[s] < 0) pi[s] = spare_dead[next_spare++];
  }

  std::vector<int> slot_of = identity_permutation(m);
  for (auto [dead_unit, unit] : transposition_decomposition(pi, base)) {
    const int y = slot_of[dead_unit];
    const int x = slot_of[unit];
    std::swap(slot_of[dead_unit], slot_of[unit]);
    if (!is_active_a[unit]) continue;  // two identical dead units
    // Slide the dead w onto the active unit's w.
    current.w.row(y) = current.w.row(x);
    push_waypoint(waypoints, current.flat());
    // Transfer the output mass inside the duplicated pair.
    current.a.row(y) = current.a.row(x);
    current.a.row(x).setZero();
    push_waypoint(waypoints, current.flat());
    // Slide the freed unit back to the dead w.
    current.w.row(x) = dead_w.transpose();
    push_waypoint(waypoints, current.flat());
  }

  for (auto it = tail.rbegin(); it != tail.rend(); ++it) push_waypoint(waypoints, *it);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    path.segments.push_back({waypoints[i], waypoints[i + 1]});
  }
  return path;
}

Point layer_pair(const MultiPoint& theta, int hidden_layer) {
  if (hidden_layer < 1 || hidden_layer >= theta.depth()) {
    throw std::invalid_argument("layer_pair: hidden layer out of range");
  }
  return Point(theta.activation, theta.layers[hidden_layer - 1],
               theta.layers[hidden_layer].transpose());
}

MultiPoint with_layer_pair(const MultiPoint& theta, int hidden_layer, const Point& pair) {
  std::vector<Mat> layers = theta.layers;
  layers[hidden_layer - 1] = pair.w;
  layers[hidden_layer] = pair.a.transpose();
  return MultiPoint(theta.activation, std::move(layers));
}

MultiPoint multilayer_expand(const MultiPoint& theta, const std::vector<int>& m_vec,
                             const std::vector<ExpansionSpec>& specs, double tol) {
  const auto hidden = theta.hidden_widths();
  if (m_vec.size() != hidden.size() || specs.size() != hidden.size()) {
    throw std::invalid_argument("multilayer_expand: one target width and spec per hidden layer");
  }
  MultiPoint out = theta;
  for (int l = static_cast<int>(hidden.size()); l >= 1; --l) {
    if (m_vec[l - 1] < hidden[l - 1]) throw std::invalid_argument("multilayer_expand: width shrink");
    if (specs[l - 1].composition.width() != m_vec[l - 1]) {
      throw std::invalid_argument("multilayer_expand: spec width differs from the target width");
    }
    const Point pair = layer_pair(out, l);
    if (!is_irreducible(pair, tol)) {
      throw std::invalid_argument("multilayer_expand: layer pair " + std::to_string(l) +
                                  " is reducible");
    }
    out = with_layer_pair(out, l, expand_point(pair, specs[l - 1], tol));
  }
  return out;
}

std::pair<std::vector<ExpansionSpec>, MultiPoint> sample_multilayer_expansion(
    const MultiPoint& theta, const std::vector<int>& m_vec, Rng& rng, double tol) {
  const auto hidden = theta.hidden_widths();
  if (m_vec.size() != hidden.size()) throw std::invalid_argument("one target width per hidden layer");
  std::vector<ExpansionSpec> specs(hidden.size());
  MultiPoint out = theta;
  for (int l = static_cast<int>(hidden.size()); l >= 1; --l) {
    const Point pair = layer_pair(out, l);
    auto [spec, expanded] = sample_expansion(pair, m_vec[l - 1], rng, tol);
    specs[l - 1] = std::move(spec);
    out = with_layer_pair(out, l, expanded);
  }
  return {std::move(specs), std::move(out)};
}

int NeuronClassification::copy_count() const {
  int n = 0;
  for (const auto& label : labels) n += label.kind == NeuronLabel::Kind::copy;
  return n;
}

std::map<int, int> NeuronClassification::zero_type_histogram() const {
  std::map<int, int> hist;
  for (const auto& group : zero_groups) hist[static_cast<int>(group.members.size())] += group.members.size();
  return hist;
}

NeuronClassification classify_neurons(const Point& student, const Point& teacher, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("classify_neurons needs tol > 0");
  if (student.d_in() != teacher.d_in() || student.d_out() != teacher.d_out()) {
    throw std::invalid_argument("classify_neurons: student/teacher dimensions differ");
  }
  for (int s = 0; s < teacher.width(); ++s) {
    for (int t = s + 1; t < teacher.width(); ++t) {
      if ((teacher.w.row(s) - teacher.w.row(t)).lpNorm<Eigen::Infinity>() <= 2 * tol) {
        throw std::invalid_argument("classify_neurons: teacher vectors are not tol-separated");
      }
    }
  }
  NeuronClassification out;
  out.labels.resize(student.width());
  out.copies.resize(teacher.width());
  std::vector<int> rest;
  for (int i = 0; i < student.width(); ++i) {
    const int t = copy_of(teacher, student.w.row(i).transpose(), tol);
    if (t >= 0) {
      out.labels[i] = {NeuronLabel::Kind::copy, t};
      out.copies[t].members.push_back(i);
    } else {
      rest.push_back(i);
    }
  }
  bool consistent = true;
  for (int t = 0; t < teacher.width(); ++t) {
    auto& group = out.copies[t];
    group.teacher = t;
    Vec sum = Vec::Zero(teacher.d_out());
    for (int i : group.members) sum += student.a.row(i).transpose();
    group.output_error = inf_norm(sum - teacher.a.row(t).transpose());
    consistent = consistent && group.output_error <= tol;
  }
  for (auto& members : cluster_incoming<double>(student.w, tol, rest)) {
    ZeroTypeGroup group;
    Vec sum = Vec::Zero(student.d_out());
    for (int i : members) {
      sum += student.a.row(i).transpose();
      out.labels[i] = {NeuronLabel::Kind::zero_type, static_cast<int>(out.zero_groups.size())};
    }
    group.members = std::move(members);
    group.residual = inf_norm(sum);
    consistent = consistent && group.residual <= tol;
    out.zero_groups.push_back(std::move(group));
  }
  out.consistent = consistent;
  return out;
}

Permutation replicant_region(const Vec& flat_units, int unit_dim) {
  if (unit_dim < 1 || flat_units.size() % unit_dim != 0) {
    throw std::invalid_argument("replicant_region: flat vector is not a whole number of units");
  }
  const int m = static_cast<int>(flat_units.size() / unit_dim);
  Permutation order = identity_permutation(m);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    for (int d = 0; d < unit_dim; ++d) {
      const double ui = flat_units(Eigen::Index(i) * unit_dim + d);
      const double uj = flat_units(Eigen::Index(j) * unit_dim + d);
      if (ui != uj) return ui > uj;
    }
    return false;
  });
  return order;
}

Permutation replicant_region(const Point& theta) {
  return replicant_region(theta.flat(), theta.unit_dim());
}

}  // namespace lsym::expansion
