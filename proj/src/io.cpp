#include "lsym/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lsym::io {

namespace {

using Vec = Vector<double>;
using Mat = Matrix<double>;

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json row_major(const Mat& M) {
  std::vector<double> out;
  out.reserve(M.size());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) out.push_back(M(i, c));
  }
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  while (used < text.size() && (text[used] == ' ' || text[used] == '\r')) ++used;
  if (used != text.size()) throw std::invalid_argument("not a number: '" + text + "'");
  return value;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

json activation_to_json(const Activation<double>& act) {
  json j{{"kind", act.name()}};
  if (act.kind() == ActivationKind::blended) {
    j["alpha"] = act.alpha();
    j["gamma"] = act.gamma();
  }
  return j;
}

Activation<double> activation_from_json(const json& j) {
  if (j.is_string()) return Activation<double>::from_name(j.get<std::string>());
  return Activation<double>::from_name(j.at("kind").get<std::string>(), get_or(j, "alpha", 1.0),
                                       get_or(j, "gamma", 4.0));
}

json model_to_json(const Point& p) { return model_to_json(MultiPoint::from_two_layer(p)); }

json model_to_json(const MultiPoint& p) {
  json layers = json::array();
  for (const auto& W : p.layers) layers.push_back(row_major(W));
  return {{"d_in", p.d_in()},
          {"d_out", p.d_out()},
          {"widths", p.hidden_widths()},
          {"activation", activation_to_json(p.activation)},
          {"layers", layers}};
}

MultiPoint model_from_json(const json& j) {
  const int d_in = j.at("d_in").get<int>();
  const int d_out = j.at("d_out").get<int>();
  const auto widths = j.at("widths").get<std::vector<int>>();
  if (d_in < 1 || d_out < 1 || widths.empty()) throw std::invalid_argument("model: bad dimensions");
  std::vector<int> r{d_in};
  r.insert(r.end(), widths.begin(), widths.end());
  r.push_back(d_out);
  const auto& layers = j.at("layers");
  if (layers.size() != r.size() - 1) throw std::invalid_argument("model: layer count does not match widths");
  std::vector<Mat> mats;
  for (std::size_t l = 0; l + 1 < r.size(); ++l) {
    if (r[l + 1] < 1) throw std::invalid_argument("model: widths must be >= 1");
    const auto values = layers[l].get<std::vector<double>>();
    if (values.size() != std::size_t(r[l + 1]) * r[l]) {
      throw std::invalid_argument("model: layer " + std::to_string(l) + " has the wrong number of entries");
    }
    Mat W(r[l + 1], r[l]);
    for (int i = 0; i < r[l + 1]; ++i) {
      for (int c = 0; c < r[l]; ++c) W(i, c) = values[std::size_t(i) * r[l] + c];
    }
    if (!W.allFinite()) throw std::invalid_argument("model: non-finite weights");
    mats.push_back(std::move(W));
  }
  return MultiPoint(activation_from_json(j.at("activation")), std::move(mats));
}

Point two_layer_from_json(const json& j) {
  const MultiPoint p = model_from_json(j);
  if (p.depth() != 2) throw std::invalid_argument("expected a two-layer model (one hidden layer)");
  return Point(p.activation, p.layers[0], p.layers[1].transpose());
}

std::string dataset_to_csv(const Data& data) {
  std::string out;
  for (int c = 0; c < data.d_in(); ++c) out += (c ? ",x" : "x") + std::to_string(c);
  for (int c = 0; c < data.d_out(); ++c) out += ",y" + std::to_string(c);
  out += '\n';
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    for (int c = 0; c < data.d_in(); ++c) out += (c ? "," : "") + format_double(data.inputs(n, c));
    for (int c = 0; c < data.d_out(); ++c) out += "," + format_double(data.targets(n, c));
    out += '\n';
  }
  return out;
}

Data dataset_from_csv(const std::string& text, int d_in) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const int cols = static_cast<int>(split_line(line).size());
  if (d_in < 1 || cols <= d_in) throw std::invalid_argument("dataset: need d_in >= 1 input and >= 1 target column");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (static_cast<int>(cells.size()) != cols) {
      throw std::invalid_argument("dataset: row " + std::to_string(rows.size() + 2) + " has the wrong column count");
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }
  Mat X(rows.size(), d_in), Y(rows.size(), cols - d_in);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (int c = 0; c < cols; ++c) {
      if (c < d_in) X(n, c) = rows[n][c];
      else Y(n, c - d_in) = rows[n][c];
    }
  }
  return Data(std::move(X), std::move(Y));
}

json spec_to_json(const expansion::ExpansionSpec& spec) {
  json w_prime = json::array(), a_splits = json::array(), alpha_splits = json::array();
  for (const auto& w : spec.splits.w_prime) w_prime.push_back(vec_to_json(w));
  for (const auto& group : spec.splits.a_splits) {
    json g = json::array();
    for (const auto& a : group) g.push_back(vec_to_json(a));
    a_splits.push_back(g);
  }
  for (const auto& group : spec.splits.alpha_splits) {
    json g = json::array();
    for (const auto& a : group) g.push_back(vec_to_json(a));
    alpha_splits.push_back(g);
  }
  return {{"k", spec.composition.k},    {"b", spec.composition.b},         {"w_prime", w_prime},
          {"a_splits", a_splits},       {"alpha_splits", alpha_splits},    {"pi", spec.pi}};
}

expansion::ExpansionSpec spec_from_json(const json& j) {
  expansion::ExpansionSpec spec;
  spec.composition.k = j.at("k").get<std::vector<int>>();
  spec.composition.b = get_or(j, "b", std::vector<int>{});
  if (j.contains("w_prime")) {
    for (const auto& w : j.at("w_prime")) spec.splits.w_prime.push_back(vec_from_json(w));
  }
  for (const auto& group : j.at("a_splits")) {
    std::vector<Vec> g;
    for (const auto& a : group) g.push_back(vec_from_json(a));
    spec.splits.a_splits.push_back(std::move(g));
  }
  if (j.contains("alpha_splits")) {
    for (const auto& group : j.at("alpha_splits")) {
      std::vector<Vec> g;
      for (const auto& a : group) g.push_back(vec_from_json(a));
      spec.splits.alpha_splits.push_back(std::move(g));
    }
  }
  spec.pi = get_or(j, "pi", Permutation{});
  return spec;
}

json split_to_json(const expansion::CriticalSplit& split) {
  return {{"k", split.k}, {"beta", split.beta}, {"pi", split.pi}};
}

expansion::CriticalSplit split_from_json(const json& j) {
  expansion::CriticalSplit split;
  split.k = j.at("k").get<std::vector<int>>();
  split.beta = j.at("beta").get<std::vector<std::vector<double>>>();
  split.pi = get_or(j, "pi", Permutation{});
  return split;
}

json path_to_json(const expansion::PiecewisePath& path) {
  json segments = json::array();
  for (const auto& s : path.segments) segments.push_back({{"start", vec_to_json(s.start)}, {"end", vec_to_json(s.end)}});
  return {{"model", model_to_json(path.prototype)}, {"segments", segments}};
}

expansion::PiecewisePath path_from_json(const json& j) {
  expansion::PiecewisePath path;
  path.prototype = two_layer_from_json(j.at("model"));
  for (const auto& s : j.at("segments")) {
    expansion::Segment seg{vec_from_json(s.at("start")), vec_from_json(s.at("end"))};
    if (seg.start.size() != path.prototype.parameter_count() || seg.end.size() != path.prototype.parameter_count()) {
      throw std::invalid_argument("path: segment endpoint has the wrong dimension");
    }
    path.segments.push_back(std::move(seg));
  }
  return path;
}

json spectrum_to_json(const verification::SpectrumReport& r) {
  return {{"eigenvalues", r.eigenvalues}, {"tol", r.tol},        {"null_count", r.null_count},
          {"min_eig", r.min_eig},         {"trace", r.trace},    {"loss", r.loss_at_point},
          {"grad_norm", r.grad_norm}};
}

std::string spectrum_to_csv(const verification::SpectrumReport& r) {
  std::string out = "index,eigenvalue\n";
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    out += std::to_string(i) + "," + format_double(r.eigenvalues[i]) + "\n";
  }
  return out;
}

json profile_to_json(const verification::PathProfile& p) {
  json rows = json::array();
  for (const auto& row : p.rows) rows.push_back({{"segment", row.segment}, {"t", row.t}, {"loss", row.loss}});
  return {{"max_abs_deviation", p.max_abs_deviation}, {"rows", rows}};
}

std::string trajectory_to_csv(const verification::FlowTrajectory& traj) {
  std::string out = "t";
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  for (Eigen::Index i = 0; i < n; ++i) out += ",theta_" + std::to_string(i);
  out += '\n';
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    out += format_double(traj.times[s]);
    for (Eigen::Index i = 0; i < n; ++i) out += "," + format_double(traj.states[s][i]);
    out += '\n';
  }
  return out;
}

json training_config_to_json(const experiments::TrainingConfig& cfg) {
  return {{"optimizer", cfg.optimizer == experiments::Optimizer::adam ? "adam" : "gd"},
          {"learning_rate", cfg.learning_rate},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"epsilon", cfg.epsilon},
          {"max_iters", cfg.max_iters},
          {"target_loss", cfg.target_loss},
          {"seed", cfg.seed},
          {"checkpoint_every", cfg.checkpoint_every}};
}

experiments::TrainingConfig training_config_from_json(const json& j) {
  experiments::TrainingConfig cfg;
  const auto opt = get_or(j, "optimizer", std::string("adam"));
  if (opt == "adam") cfg.optimizer = experiments::Optimizer::adam;
  else if (opt == "gd") cfg.optimizer = experiments::Optimizer::gd;
  else throw std::invalid_argument("unknown optimizer '" + opt + "'");
  cfg.learning_rate = get_or(j, "learning_rate", cfg.learning_rate);
  cfg.beta1 = get_or(j, "beta1", cfg.beta1);
  cfg.beta2 = get_or(j, "beta2", cfg.beta2);
  cfg.epsilon = get_or(j, "epsilon", cfg.epsilon);
  cfg.max_iters = get_or(j, "max_iters", cfg.max_iters);
  cfg.target_loss = get_or(j, "target_loss", cfg.target_loss);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.checkpoint_every = get_or(j, "checkpoint_every", cfg.checkpoint_every);
  cfg.validate();
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  return {{"kind", cfg.kind},
          {"widths", cfg.widths},
          {"hidden", cfg.hidden},
          {"seeds", cfg.n_seeds},
          {"grid", {{"half_extent", cfg.half_extent}, {"step", cfg.grid_step}}},
          {"activation", activation_to_json(cfg.activation)},
          {"tol", cfg.tol},
          {"optimizer", training_config_to_json(cfg.training)},
          {"teacher_fit_iters", cfg.teacher_fit_iters}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.kind = get_or(j, "kind", cfg.kind);
  if (cfg.kind != "success" && cfg.kind != "classification" && cfg.kind != "multilayer") {
    throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
  }
  cfg.widths = get_or(j, "widths", cfg.widths);
  cfg.hidden = get_or(j, "hidden", cfg.hidden);
  cfg.n_seeds = get_or(j, "seeds", cfg.n_seeds);
  if (j.contains("grid")) {
    cfg.half_extent = get_or(j.at("grid"), "half_extent", cfg.half_extent);
    cfg.grid_step = get_or(j.at("grid"), "step", cfg.grid_step);
  }
  if (j.contains("activation")) cfg.activation = activation_from_json(j.at("activation"));
  cfg.tol = get_or(j, "tol", cfg.tol);
  if (j.contains("optimizer")) cfg.training = training_config_from_json(j.at("optimizer"));
  cfg.teacher_fit_iters = get_or(j, "teacher_fit_iters", cfg.teacher_fit_iters);
  if (cfg.n_seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  if (cfg.kind == "multilayer" && cfg.hidden.empty()) throw std::invalid_argument("multilayer config needs 'hidden'");
  if (cfg.kind != "multilayer" && cfg.widths.empty()) throw std::invalid_argument("config needs 'widths'");
  return cfg;
}

json report_to_json(const experiments::ExperimentReport& report) {
  json runs = json::array(), widths = json::array(), hist = json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"width", r.width},
                    {"hidden", r.hidden},
                    {"seed", r.seed},
                    {"converged", r.converged},
                    {"final_loss", r.final_loss},
                    {"iters", r.iters}});
  }
  for (const auto& w : report.widths) {
    widths.push_back({{"width", w.width},
                      {"n_seeds", w.n_seeds},
                      {"converged", w.converged},
                      {"success_fraction", w.success_fraction}});
  }
  for (const auto& h : report.classification) {
    json sizes = json::object();
    for (auto [size, count] : h.zero_type_by_size) sizes[std::to_string(size)] = count;
    hist.push_back({{"run", h.run}, {"copies", h.copies}, {"zero_type_by_size", sizes}, {"consistent", h.consistent}});
  }
  return {{"runs", runs}, {"widths", widths}, {"classification", hist}};
}

std::string success_csv(const experiments::ExperimentReport& report) {
  std::string out = "width,seed,converged,final_loss,iters\n";
  for (const auto& r : report.runs) {
    out += std::to_string(r.width) + "," + std::to_string(r.seed) + "," + (r.converged ? "1" : "0") + "," +
           format_double(r.final_loss) + "," + std::to_string(r.iters) + "\n";
  }
  return out;
}

std::string classification_csv(const experiments::ExperimentReport& report) {
  std::string out = "run,neuron,label,group_size,residual\n";
  for (std::size_t c = 0; c < report.classification.size() && c < report.classifications.size(); ++c) {
    const auto& cl = report.classifications[c];
    const int run = report.classification[c].run;
    for (std::size_t n = 0; n < cl.labels.size(); ++n) {
      const auto& label = cl.labels[n];
      std::string kind;
      std::size_t size = 0;
      double residual = 0;
      if (label.kind == expansion::NeuronLabel::Kind::copy) {
        kind = "copy";
        const auto& g = *std::find_if(cl.copies.begin(), cl.copies.end(),
                                      [&](const expansion::CopyGroup& cg) { return cg.teacher == label.group; });
        size = g.members.size();
        residual = g.output_error;
      } else {
        kind = "zero_type";
        const auto& g = cl.zero_groups.at(label.group);
        size = g.members.size();
        residual = g.residual;
      }
      out += std::to_string(run) + "," + std::to_string(n) + "," + kind + "," + std::to_string(size) + "," +
             format_double(residual) + "\n";
    }
  }
  return out;
}

}  // namespace lsym::io
