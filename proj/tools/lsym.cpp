// lsym: counting tables, expansion/reduction of model files, verification
// suites and experiment runs.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsym/combinatorics.hpp"
#include "lsym/expansion.hpp"
#include "lsym/experiments.hpp"
#include "lsym/io.hpp"
#include "lsym/verification.hpp"

namespace {

namespace comb = lsym::combinatorics;
namespace ex = lsym::expansion;
namespace exp_ = lsym::experiments;
namespace ver = lsym::verification;
namespace io = lsym::io;
using io::json;

// Thrown for bad user input; maps to exit code 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Global {
  std::string format = "json";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  int threads = 1;

  double tol_or(double fallback) const { return tol.value_or(fallback); }

  int resolved_threads() const {
    if (const char* env = std::getenv("LSYM_THREADS")) {
      try {
        const int n = std::stoi(env);
        if (n >= 1) return n;
      } catch (const std::exception&) {
      }
      throw UsageError("LSYM_THREADS must be a positive integer");
    }
    return threads;
  }
};

void emit(const Global& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    io::write_text(g.out, text);
  }
}

void emit_json(const Global& g, const json& j) { emit(g, j.dump(2) + "\n"); }

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("not an integer list: '" + text + "'");
    }
  }
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
  const auto v = parse_int_list(text);
  if (v.empty() || v.size() % 2) throw UsageError("--pairs needs an even number of indices");
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < v.size(); i += 2) out.emplace_back(v[i], v[i + 1]);
  return out;
}

// Max |f(x) - g(x)| over 50 fixed Gaussian probe inputs.
double probe_residual(const ex::Point& f, const ex::Point& g) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> n(0.0, 1.0);
  ex::Mat X(50, f.d_in());
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(rng);
  return (lsym::forward2_batch(f, X) - lsym::forward2_batch(g, X)).lpNorm<Eigen::Infinity>();
}

struct DataSource {
  std::string data_path;
  std::string teacher_path;
  double half_extent = 5.0;
  double grid_step = 0.5;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", data_path, "Dataset CSV (header row, inputs then targets)");
    cmd->add_option("--teacher-grid", teacher_path, "Generate the 2-D grid dataset from this teacher model");
    cmd->add_option("--half-extent", half_extent, "Grid half extent")->capture_default_str();
    cmd->add_option("--grid-step", grid_step, "Grid step")->capture_default_str();
  }

  lsym::Dataset<double> load(int d_in) const {
    if (!data_path.empty()) return io::dataset_from_csv(io::read_text(data_path), d_in);
    if (!teacher_path.empty()) {
      const auto teacher = io::two_layer_from_json(json::parse(io::read_text(teacher_path)));
      return exp_::teacher_dataset(teacher, half_extent, grid_step);
    }
    throw UsageError("a dataset is required: pass --data or --teacher-grid");
  }
};

json load_json(const std::string& path) { return json::parse(io::read_text(path)); }

// ---------------------------------------------------------------------------
// count

int run_count(const Global& g, const std::string& which, int r, int m, int k, int r_star, int m_max,
              int k_max, const std::string& r_vec, const std::string& m_vec, const std::string& kind,
              const std::string& weights, const std::string& a_k) {
  auto scalar = [&](const std::string& value) {
    if (g.format == "csv") emit(g, "value\n" + value + "\n");
    else emit_json(g, {{"value", value}});
    return 0;
  };
  if (which == "g") return scalar(comb::to_string(comb::count_G(r, m)));
  if (which == "t") return scalar(comb::to_string(comb::count_T(r, m)));
  if (which == "gu") return scalar(comb::to_string(comb::count_g(m)));
  if (which == "ratio") {
    const auto value = comb::ratio_Rk(k, r_star, m);
    const std::string num = comb::to_string(boost::multiprecision::numerator(value));
    const std::string den = comb::to_string(boost::multiprecision::denominator(value));
    if (g.format == "csv") {
      emit(g, "R_num,R_den,R_decimal\n" + num + "," + den + "," + comb::to_decimal(value) + "\n");
    } else {
      emit_json(g, {{"numerator", num}, {"denominator", den}, {"decimal", comb::to_decimal(value)}});
    }
    return 0;
  }
  if (which == "table") {
    comb::SaddleWeights w = comb::SaddleWeights::ones;
    std::vector<comb::Count> coeffs;
    if (weights == "binomial_bound") {
      w = comb::SaddleWeights::binomial_bound;
    } else if (weights == "custom") {
      w = comb::SaddleWeights::custom;
      for (int v : parse_int_list(a_k)) coeffs.emplace_back(v);
    } else if (weights != "ones") {
      throw UsageError("--weights must be ones, binomial_bound or custom");
    }
    const auto rows = comb::ratio_table(r_star, m_max, k_max, w, coeffs);
    emit(g, comb::ratio_table_csv(rows));
    return 0;
  }
  if (which == "multilayer") {
    const auto rv = parse_int_list(r_vec), mv = parse_int_list(m_vec);
    comb::CountKind ck;
    if (kind == "T") ck = comb::CountKind::T;
    else if (kind == "G") ck = comb::CountKind::G;
    else throw UsageError("--kind must be T or G");
    return scalar(comb::to_string(comb::multilayer_counts(rv, mv, ck)));
  }
  throw UsageError("unknown count kind '" + which + "'");
}

// ---------------------------------------------------------------------------
// expand / reduce

int run_expand(const Global& g, const std::string& model_path, const std::string& spec_path,
               int target_width, bool sample, bool critical, const std::string& spec_out) {
  const auto source = io::two_layer_from_json(load_json(model_path));
  ex::Point expanded;
  json spec_json;
  if (!spec_path.empty()) {
    if (critical) {
      const auto split = io::split_from_json(load_json(spec_path));
      expanded = ex::expand_critical(source, split);
      spec_json = io::split_to_json(split);
    } else {
      const auto spec = io::spec_from_json(load_json(spec_path));
      expanded = ex::expand_point(source, spec);
      spec_json = io::spec_to_json(spec);
    }
  } else if (sample) {
    if (target_width < source.width()) throw UsageError("--target-width must be >= the source width");
    ex::Rng rng(g.seed.value_or(0));
    if (critical) {
      const auto split = ex::sample_critical_split(source.width(), target_width, rng);
      expanded = ex::expand_critical(source, split);
      spec_json = io::split_to_json(split);
    } else {
      auto [spec, point] = ex::sample_expansion(source, target_width, rng);
      expanded = std::move(point);
      spec_json = io::spec_to_json(spec);
    }
  } else {
    throw UsageError("expand needs --spec or --target-width with --sample");
  }
  if (!spec_out.empty()) io::write_text(spec_out, spec_json.dump(2) + "\n");
  const double residual = probe_residual(source, expanded);
  const double tol = g.tol_or(1e-9);
  const std::string model = io::model_to_json(expanded).dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << model;
    std::cerr << "residual " << io::format_double(residual) << "\n";
  } else {
    io::write_text(g.out, model);
    std::cout << "residual " << io::format_double(residual) << "\n";
  }
  return residual <= tol ? 0 : 1;
}

int run_reduce(const Global& g, const std::string& model_path) {
  const auto source = io::two_layer_from_json(load_json(model_path));
  const double tol = g.tol_or(1e-9);
  const auto reduced = lsym::reduce(source, tol);
  if (reduced.width() == 0) {
    std::cerr << "model reduces to the zero function; nothing to write\n";
    return 1;
  }
  const bool unchanged = reduced.width() == source.width();
  const double residual = probe_residual(source, reduced);
  const std::string model = io::model_to_json(reduced).dump(2) + "\n";
  std::ostream& info = g.out.empty() ? std::cerr : std::cout;
  if (g.out.empty()) std::cout << model;
  else io::write_text(g.out, model);
  if (unchanged) info << "already irreducible\n";
  info << "width " << source.width() << " -> " << reduced.width() << "\n";
  info << "residual " << io::format_double(residual) << "\n";
  return residual <= tol ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify

int run_verify(const Global& g, const std::string& which, const std::string& model_path, DataSource& src,
               int min_null, double null_tol, const std::string& path_path, const std::string& a_path,
               const std::string& b_path, const std::string& source_path, const std::string& path_out,
               int samples, const std::string& pairs, double horizon, double step,
               const std::string& integrator, const std::string& trajectory_out) {
  if (which == "critical") {
    const auto model = io::two_layer_from_json(load_json(model_path));
    const auto data = src.load(model.d_in());
    const double tol = g.tol_or(1e-8);
    const auto check = ver::check_zero_gradient(model, data, tol);
    emit_json(g, {{"check", "critical"}, {"grad_norm", check.grad_norm}, {"tol", tol}, {"pass", check.pass}});
    return check.pass ? 0 : 1;
  }
  if (which == "hessian") {
    const auto model = io::two_layer_from_json(load_json(model_path));
    const auto data = src.load(model.d_in());
    const auto report = ver::hessian_report(model, data, null_tol);
    const bool pass = report.null_count >= min_null;
    if (g.format == "csv") {
      emit(g, io::spectrum_to_csv(report));
    } else {
      json j = io::spectrum_to_json(report);
      j["check"] = "hessian";
      j["min_null"] = min_null;
      j["pass"] = pass;
      emit_json(g, j);
    }
    return pass ? 0 : 1;
  }
  if (which == "path") {
    ex::PiecewisePath path;
    if (!path_path.empty()) {
      path = io::path_from_json(load_json(path_path));
    } else if (!a_path.empty() && !b_path.empty() && !source_path.empty()) {
      path = ex::build_path(io::two_layer_from_json(load_json(a_path)), io::two_layer_from_json(load_json(b_path)),
                            io::two_layer_from_json(load_json(source_path)));
      if (!path_out.empty()) io::write_text(path_out, io::path_to_json(path).dump(2) + "\n");
    } else {
      throw UsageError("verify path needs --path, or --a, --b and --source");
    }
    const auto data = src.load(path.prototype.d_in());
    const double tol = g.tol_or(1e-10);
    const auto profile = ver::path_loss_profile(path, data, samples);
    const bool pass = profile.max_abs_deviation <= tol;
    json j = io::profile_to_json(profile);
    j["check"] = "path";
    j["segments"] = path.segments.size();
    j["tol"] = tol;
    j["pass"] = pass;
    emit_json(g, j);
    return pass ? 0 : 1;
  }
  if (which == "flow") {
    const auto model = io::two_layer_from_json(load_json(model_path));
    const auto data = src.load(model.d_in());
    const auto obj = lsym::make_objective(model, data);
    const ex::Vec theta0 = model.flat();
    ver::Integrator integ;
    if (integrator == "rk4") integ = ver::Integrator::rk4;
    else if (integrator == "euler") integ = ver::Integrator::euler;
    else throw UsageError("--integrator must be rk4 or euler");
    const double h = step > 0 ? step : ver::default_flow_step(obj, theta0);
    const auto traj = ver::gradient_flow(obj, theta0, h, horizon, integ, model.unit_dim());
    if (!trajectory_out.empty()) io::write_text(trajectory_out, io::trajectory_to_csv(traj));
    const auto pair_list = parse_pairs(pairs);
    const double tol = g.tol_or(1e-12);
    const double deviation = ver::subspace_invariance_check(traj, pair_list);
    const double separation = ver::min_pairwise_distance(traj, pair_list);
    const bool pass = deviation <= tol;
    emit_json(g, {{"check", "flow"},
                  {"step", h},
                  {"horizon", horizon},
                  {"max_pair_deviation", deviation},
                  {"min_pair_distance", separation},
                  {"tol", tol},
                  {"pass", pass}});
    return pass ? 0 : 1;
  }
  throw UsageError("unknown verify suite '" + which + "'");
}

// ---------------------------------------------------------------------------
// experiment / classify

void print_histogram(const exp_::ExperimentReport& report) {
  for (const auto& h : report.classification) {
    std::cout << "run " << h.run << ": copies " << h.copies;
    for (auto [size, count] : h.zero_type_by_size) std::cout << ", zero-type size " << size << ": " << count;
    std::cout << (h.consistent ? " (consistent)" : " (INCONSISTENT)") << "\n";
  }
}

int run_experiment(const Global& g, const std::string& config_path) {
  auto cfg = io::experiment_config_from_json(load_json(config_path));
  if (g.seed) cfg.training.seed = *g.seed;
  const int threads = g.resolved_threads();
  const std::filesystem::path dir = g.out.empty() ? std::filesystem::path(".") : std::filesystem::path(g.out);
  std::filesystem::create_directories(dir);

  exp_::ExperimentReport report;
  json extra;
  if (cfg.kind == "multilayer") {
    const auto teacher = exp_::fit_multilayer_teacher(cfg.activation, cfg.half_extent, cfg.grid_step,
                                                      cfg.training.seed, cfg.teacher_fit_iters);
    io::write_text((dir / "teacher.json").string(), io::model_to_json(teacher).dump(2) + "\n");
    const auto grid = exp_::grid_dataset(cfg.half_extent, cfg.grid_step,
                                         [](const ex::Vec&) { return ex::Vec::Zero(1); }, 1);
    const lsym::Dataset<double> data(grid.inputs, lsym::forwardL_batch(teacher, grid.inputs));
    report = exp_::success_rate_multilayer(cfg.hidden, cfg.n_seeds, cfg.training, data, cfg.activation, threads);
  } else {
    const auto teacher = exp_::paper_teacher(cfg.activation);
    const auto data = exp_::teacher_dataset(teacher, cfg.half_extent, cfg.grid_step);
    if (cfg.kind == "success") {
      report = exp_::success_rate(cfg.widths, cfg.n_seeds, cfg.training, data, cfg.activation, threads);
    } else {
      exp_::ClassificationConfig ccfg;
      ccfg.width = cfg.widths.front();
      ccfg.n_seeds = cfg.n_seeds;
      ccfg.tol = cfg.tol;
      ccfg.training = cfg.training;
      report = exp_::classification_experiment(teacher, data, ccfg, threads);
    }
  }
  json j = io::report_to_json(report);
  j["config"] = io::experiment_config_to_json(cfg);
  io::write_text((dir / "report.json").string(), j.dump(2) + "\n");
  io::write_text((dir / "success.csv").string(), io::success_csv(report));
  io::write_text((dir / "classification.csv").string(), io::classification_csv(report));
  for (const auto& w : report.widths) {
    std::cout << "width " << w.width << ": " << w.converged << "/" << w.n_seeds << " converged (fraction "
              << io::format_double(w.success_fraction) << ")\n";
  }
  print_histogram(report);
  bool consistent = true;
  for (const auto& h : report.classification) consistent = consistent && h.consistent;
  return consistent ? 0 : 1;
}

int run_classify(const Global& g, const std::string& student_path, const std::string& teacher_path) {
  const auto student = io::two_layer_from_json(load_json(student_path));
  const auto teacher = io::two_layer_from_json(load_json(teacher_path));
  const double tol = g.tol_or(1e-3);
  const auto run = exp_::classify_run(student, teacher, tol);
  exp_::ExperimentReport report;
  report.classification.push_back(run.histogram);
  report.classifications.push_back(run.classification);
  if (g.format == "csv") {
    emit(g, io::classification_csv(report));
  } else {
    json j = io::report_to_json(report);
    j["tol"] = tol;
    emit_json(g, j);
  }
  if (!g.out.empty()) print_histogram(report);
  return run.classification.consistent ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-landscape symmetry toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  std::uint64_t seed = 0;
  double tol = 0;
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--out", g.out, "Output file (directory for experiment)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* tol_opt = app.add_option("--tol", tol, "Check tolerance (command-specific default)");
  app.add_option("--threads", g.threads, "Worker threads for experiment seeds (LSYM_THREADS overrides)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // count
  auto* count = app.add_subcommand("count", "Exact subspace counts and ratio tables");
  std::string count_kind, r_vec, m_vec, ml_kind = "T", weights = "ones", a_k;
  int r = 0, m = 0, k = 0, r_star = 0, m_max = 0, k_max = 5;
  count->add_option("quantity", count_kind, "g | t | gu | ratio | table | multilayer")
      ->required()
      ->check(CLI::IsMember({"g", "t", "gu", "ratio", "table", "multilayer"}));
  count->add_option("--r", r, "Width r (source width)");
  count->add_option("--m,--u", m, "Width m (or u for gu)");
  count->add_option("--k", k, "Saddle order k");
  count->add_option("--r-star", r_star, "Minimal width r*");
  count->add_option("--m-max", m_max, "Largest m in the table");
  count->add_option("--k-max", k_max, "Largest k in the table")->capture_default_str();
  count->add_option("--r-vec", r_vec, "Comma-separated hidden widths r_l");
  count->add_option("--m-vec", m_vec, "Comma-separated hidden widths m_l");
  count->add_option("--kind", ml_kind, "Multilayer count kind: T or G")->capture_default_str();
  count->add_option("--weights", weights, "ones | binomial_bound | custom")->capture_default_str();
  count->add_option("--a-k", a_k, "Comma-separated saddle weights a_1..a_{r*-1} for --weights custom");

  // expand
  auto* expand = app.add_subcommand("expand", "Embed a model into a wider network");
  std::string model_path, spec_path, spec_out;
  int target_width = 0;
  bool sample = false, critical = false;
  expand->add_option("--model", model_path, "Source model JSON")->required();
  expand->add_option("--spec", spec_path, "ExpansionSpec JSON (CriticalSplit JSON with --critical)");
  expand->add_option("--target-width", target_width, "Target width m");
  expand->add_flag("--sample", sample, "Sample a random spec (uses --seed)");
  expand->add_flag("--critical", critical, "Output-splitting expansion of a critical point");
  expand->add_option("--spec-out", spec_out, "Write the spec used");

  // reduce
  auto* reduce_cmd = app.add_subcommand("reduce", "Merge duplicate and drop silent neurons");
  reduce_cmd->add_option("--model", model_path, "Model JSON")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "Criticality, spectrum, path and flow checks");
  std::string verify_kind, path_path, a_path, b_path, source_path, path_out, pairs = "0,1", integrator = "rk4",
                           trajectory_out;
  int min_null = 0, samples = 11;
  double null_tol = ver::kNullTol, horizon = 10, step = 0;
  DataSource src;
  verify->add_option("suite", verify_kind, "critical | hessian | path | flow")
      ->required()
      ->check(CLI::IsMember({"critical", "hessian", "path", "flow"}));
  verify->add_option("--model", model_path, "Model JSON");
  src.add(verify);
  verify->add_option("--min-null", min_null, "hessian: required null eigenvalue count");
  verify->add_option("--null-tol", null_tol, "hessian: |lambda| threshold for null eigenvalues")->capture_default_str();
  verify->add_option("--path", path_path, "path: PiecewisePath JSON");
  verify->add_option("--a", a_path, "path: endpoint A model");
  verify->add_option("--b", b_path, "path: endpoint B model");
  verify->add_option("--source", source_path, "path: irreducible source model");
  verify->add_option("--path-out", path_out, "path: write the constructed path");
  verify->add_option("--samples", samples, "path: samples per segment")->capture_default_str();
  verify->add_option("--pairs", pairs, "flow: unit pairs, e.g. 0,1,2,3")->capture_default_str();
  verify->add_option("--horizon", horizon, "flow: integration horizon")->capture_default_str();
  verify->add_option("--step", step, "flow: step size (default 1e-2 / (1 + |grad|))");
  verify->add_option("--integrator", integrator, "flow: rk4 | euler")->capture_default_str();
  verify->add_option("--trajectory-out", trajectory_out, "flow: trajectory CSV");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a configured training experiment");
  std::string config_path;
  experiment->add_option("--config", config_path, "Experiment config JSON")->required();

  // classify
  auto* classify = app.add_subcommand("classify", "Classify trained neurons against a teacher");
  std::string student_path, teacher_path;
  classify->add_option("--student", student_path, "Trained model JSON")->required();
  classify->add_option("--teacher", teacher_path, "Teacher model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count()) g.seed = seed;
  if (tol_opt->count()) g.tol = tol;

  try {
    if (count->parsed()) {
      return run_count(g, count_kind, r, m, k, r_star, m_max, k_max, r_vec, m_vec, ml_kind, weights, a_k);
    }
    if (expand->parsed()) return run_expand(g, model_path, spec_path, target_width, sample, critical, spec_out);
    if (reduce_cmd->parsed()) return run_reduce(g, model_path);
    if (verify->parsed()) {
      if (verify_kind != "path" && model_path.empty()) throw UsageError("--model is required");
      return run_verify(g, verify_kind, model_path, src, min_null, null_tol, path_path, a_path, b_path,
                        source_path, path_out, samples, pairs, horizon, step, integrator, trajectory_out);
    }
    if (experiment->parsed()) return run_experiment(g, config_path);
    if (classify->parsed()) return run_classify(g, student_path, teacher_path);
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
