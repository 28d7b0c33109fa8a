#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lsym/expansion.hpp"
#include "lsym/experiments.hpp"
#include "lsym/verification.hpp"

namespace lsym::io {

using json = nlohmann::json;
using expansion::MultiPoint;
using expansion::Point;
using Data = Dataset<double>;

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

json activation_to_json(const Activation<double>& act);
Activation<double> activation_from_json(const json& j);

json model_to_json(const Point& p);
json model_to_json(const MultiPoint& p);
MultiPoint model_from_json(const json& j);
/// Throws std::invalid_argument unless the model has exactly one hidden layer.
Point two_layer_from_json(const json& j);

std::string dataset_to_csv(const Data& data);
/// First row is a header; d_in columns come first, the rest are targets.
Data dataset_from_csv(const std::string& text, int d_in);

json spec_to_json(const expansion::ExpansionSpec& spec);
expansion::ExpansionSpec spec_from_json(const json& j);
json split_to_json(const expansion::CriticalSplit& split);
expansion::CriticalSplit split_from_json(const json& j);

json path_to_json(const expansion::PiecewisePath& path);
expansion::PiecewisePath path_from_json(const json& j);

json spectrum_to_json(const verification::SpectrumReport& r);
std::string spectrum_to_csv(const verification::SpectrumReport& r);
json profile_to_json(const verification::PathProfile& p);
std::string trajectory_to_csv(const verification::FlowTrajectory& traj);

json training_config_to_json(const experiments::TrainingConfig& cfg);
experiments::TrainingConfig training_config_from_json(const json& j);

/// Run description read by `lsym experiment`.
struct ExperimentConfig {
  std::string kind = "success";  ///< success | classification | multilayer
  std::vector<int> widths{5, 45};
  std::vector<std::vector<int>> hidden;  ///< multilayer configurations
  int n_seeds = 20;
  double half_extent = 5.0;
  double grid_step = 0.5;
  Activation<double> activation = Activation<double>::sigmoid();
  double tol = 1e-3;  ///< classification tolerance
  experiments::TrainingConfig training;
  long teacher_fit_iters = 20000;  ///< multilayer: iterations fitting the local teacher
};

json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const json& j);

json report_to_json(const experiments::ExperimentReport& report);
std::string success_csv(const experiments::ExperimentReport& report);
std::string classification_csv(const experiments::ExperimentReport& report);

}  // namespace lsym::io
