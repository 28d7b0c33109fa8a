#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "lsym/io.hpp"
#include "test_util.hpp"

using namespace lsym;
using namespace lsym::io;
using lsym::testing::gaussian;
using lsym::testing::random_point;
using Rng = std::mt19937_64;

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(1);
  std::normal_distribution<double> n(0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = n(rng) * std::pow(10.0, i % 40 - 20);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(3.0), "3");
}

TEST(Activation, JsonRoundTrip) {
  for (const auto& act : lsym::testing::all_activations()) {
    EXPECT_EQ(activation_from_json(activation_to_json(act)), act);
  }
  EXPECT_EQ(activation_from_json(json("sigmoid")), Activation<double>::sigmoid());
  EXPECT_EQ(activation_from_json(json{{"kind", "blended"}, {"alpha", 2.0}, {"gamma", 3.0}}),
            Activation<double>::blended(2, 3));
  EXPECT_ANY_THROW(activation_from_json(json("relu")));
}

TEST(Model, TwoLayerRoundTripIsBitExact) {
  Rng rng(2);
  const Point p = random_point(rng, 5, 2, 3);
  const json j = json::parse(model_to_json(p).dump());
  const Point q = two_layer_from_json(j);
  EXPECT_EQ(q.w, p.w);
  EXPECT_EQ(q.a, p.a);
  EXPECT_EQ(q.activation, p.activation);
  EXPECT_EQ(j.at("widths"), json::array({5}));
}

TEST(Model, MultiLayerRoundTrip) {
  Rng rng(3);
  const MultiLayerPoint<double> p(Activation<double>::tanh(),
                                  {gaussian(rng, 3, 2), gaussian(rng, 4, 3), gaussian(rng, 1, 4)});
  const MultiLayerPoint<double> q = model_from_json(json::parse(model_to_json(p).dump()));
  EXPECT_EQ(q.flat(), p.flat());
  EXPECT_EQ(q.widths(), p.widths());
  EXPECT_THROW(two_layer_from_json(model_to_json(p)), std::invalid_argument);
}

TEST(Model, RejectsInconsistentShapes) {
  Rng rng(4);
  json j = model_to_json(random_point(rng, 3, 2, 1));
  j["widths"] = {4};
  EXPECT_ANY_THROW(model_from_json(j));
}

TEST(Dataset, CsvRoundTrip) {
  Rng rng(5);
  const auto data = lsym::testing::noise_data(rng, 17, 2, 2);
  const std::string csv = dataset_to_csv(data);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x0,x1,y0,y1");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  const auto back = dataset_from_csv(csv, 2);
  EXPECT_EQ(back.inputs, data.inputs);
  EXPECT_EQ(back.targets, data.targets);
  EXPECT_ANY_THROW(dataset_from_csv("x0,y0\n1,2\n3\n", 1));
}

TEST(Spec, JsonRoundTrip) {
  Rng rng(6);
  const Point theta = random_point(rng, 2, 2, 1);
  for (int i = 0; i < 20; ++i) {
    const auto [spec, point] = expansion::sample_expansion(theta, 5, rng);
    const json j = json::parse(spec_to_json(spec).dump());
    for (const char* key : {"k", "b", "w_prime", "a_splits", "alpha_splits", "pi"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    const auto back = spec_from_json(j);
    const Point again = expansion::expand_point(theta, back);
    EXPECT_EQ(again.w, point.w);
    EXPECT_EQ(again.a, point.a);
  }
}

TEST(Split, JsonRoundTrip) {
  Rng rng(7);
  const auto split = expansion::sample_critical_split(2, 5, rng);
  const json j = json::parse(split_to_json(split).dump());
  EXPECT_TRUE(j.contains("beta"));
  const auto back = split_from_json(j);
  EXPECT_EQ(back.k, split.k);
  EXPECT_EQ(back.beta, split.beta);
  EXPECT_EQ(back.pi, split.pi);
}

TEST(Path, JsonRoundTrip) {
  Rng rng(8);
  const Point theta = random_point(rng, 2, 2, 1);
  const Point A = expansion::sample_expansion(theta, 4, rng).second;
  const Point B = expansion::sample_expansion(theta, 4, rng).second;
  const auto path = expansion::build_path(A, B, theta);
  const auto back = path_from_json(json::parse(path_to_json(path).dump()));
  ASSERT_EQ(back.segments.size(), path.segments.size());
  for (std::size_t s = 0; s < path.segments.size(); ++s) {
    EXPECT_EQ(back.segments[s].start, path.segments[s].start);
    EXPECT_EQ(back.segments[s].end, path.segments[s].end);
  }
  EXPECT_EQ(back.prototype.width(), 4);
}

TEST(Reports, SpectrumAndTrajectoryCsv) {
  verification::SpectrumReport r;
  r.eigenvalues = {-0.5, 0.0, 2.0};
  r.null_count = 1;
  r.min_eig = -0.5;
  const std::string csv = spectrum_to_csv(r);
  EXPECT_EQ(csv, "index,eigenvalue\n0,-0.5\n1,0\n2,2\n");
  const json j = spectrum_to_json(r);
  EXPECT_EQ(j.at("null_count"), 1);
  EXPECT_EQ(j.at("min_eig"), -0.5);

  const auto traj = verification::gradient_flow(make_quadratic_objective<double>(2), Vector<double>::LinSpaced(2, 1, 2), 0.5, 1.0);
  const std::string t = trajectory_to_csv(traj);
  EXPECT_EQ(t.substr(0, t.find('\n')), "t,theta_0,theta_1");
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 4);
}

TEST(TrainingConfigJson, RoundTrip) {
  experiments::TrainingConfig cfg;
  cfg.optimizer = experiments::Optimizer::gd;
  cfg.learning_rate = 0.125;
  cfg.max_iters = 1234;
  cfg.target_loss = 1e-9;
  cfg.seed = 99;
  const auto back = training_config_from_json(json::parse(training_config_to_json(cfg).dump()));
  EXPECT_EQ(back.optimizer, cfg.optimizer);
  EXPECT_EQ(back.learning_rate, cfg.learning_rate);
  EXPECT_EQ(back.max_iters, cfg.max_iters);
  EXPECT_EQ(back.target_loss, cfg.target_loss);
  EXPECT_EQ(back.seed, cfg.seed);
}

TEST(ExperimentConfigJson, DefaultsAndRoundTrip) {
  const ExperimentConfig defaults = experiment_config_from_json(json::object());
  EXPECT_EQ(defaults.kind, "success");
  EXPECT_EQ(defaults.widths, (std::vector<int>{5, 45}));
  EXPECT_EQ(defaults.n_seeds, 20);
  EXPECT_EQ(defaults.grid_step, 0.5);

  ExperimentConfig cfg;
  cfg.kind = "classification";
  cfg.widths = {10};
  cfg.n_seeds = 3;
  cfg.activation = Activation<double>::blended(1, 4);
  cfg.tol = 1e-4;
  const auto back = experiment_config_from_json(json::parse(experiment_config_to_json(cfg).dump()));
  EXPECT_EQ(back.kind, cfg.kind);
  EXPECT_EQ(back.widths, cfg.widths);
  EXPECT_EQ(back.n_seeds, 3);
  EXPECT_EQ(back.activation, cfg.activation);
  EXPECT_EQ(back.tol, cfg.tol);
  EXPECT_ANY_THROW(experiment_config_from_json(json{{"kind", "nonsense"}}));
}

TEST(ReportCsv, SuccessAndClassification) {
  experiments::ExperimentReport report;
  report.runs.push_back({5, {5}, 0, true, 1e-8, 100});
  report.runs.push_back({5, {5}, 1, false, 0.25, 200});
  const std::string s = success_csv(report);
  EXPECT_EQ(s, "width,seed,converged,final_loss,iters\n5,0,1,1e-08,100\n5,1,0,0.25,200\n");

  const Point teacher = experiments::paper_teacher(Activation<double>::blended(1, 4));
  const auto run = experiments::classify_run(teacher, teacher, 1e-3);
  report.classification.push_back(run.histogram);
  report.classifications.push_back(run.classification);
  const std::string c = classification_csv(report);
  EXPECT_EQ(c.substr(0, c.find('\n')), "run,neuron,label,group_size,residual");
  EXPECT_EQ(std::count(c.begin(), c.end(), '\n'), 5);
  EXPECT_TRUE(report_to_json(report).contains("runs"));
}

TEST(Files, WriteAndReadText) {
  const auto path = std::filesystem::temp_directory_path() / "lsym_io_test.txt";
  write_text(path.string(), "a\nb\n");
  EXPECT_EQ(read_text(path.string()), "a\nb\n");
  std::filesystem::remove(path);
  EXPECT_ANY_THROW(read_text((std::filesystem::temp_directory_path() / "lsym_missing_file").string()));
}
