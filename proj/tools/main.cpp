#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "taskmix/data_io.hpp"
#include "taskmix/errors.hpp"
#include "taskmix/eval.hpp"
#include "taskmix/serialize.hpp"
#include "taskmix/structure.hpp"
#include "taskmix/types.hpp"
#include "taskmix/vi.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw taskmix::IoError("cannot create " + dir.string() + ": " +
                           ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw taskmix::IoError("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!text.empty() && text.back() != '\n') {
    out << "\n";
  }
  if (!out) {
    throw taskmix::IoError("failed writing " + path.string());
  }
}

std::string shortest(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ec == std::errc() ? ptr : buffer);
}

/// Every command writes the options it actually ran with next to its
/// outputs, so a run can be reproduced from the output directory alone.
void write_run_config(const fs::path& out_dir, const json& config) {
  write_text(out_dir / "config.json", config.dump(2));
}

json hyper_to_json(const taskmix::Hyperparameters& h) {
  return {{"alpha1", h.alpha1},
          {"alpha2", h.alpha2},
          {"truncation_f", h.truncation_f},
          {"truncation_k", h.truncation_k},
          {"outer_iters", h.outer_iters},
          {"inner_tol", h.inner_tol},
          {"seed", h.seed}};
}

struct SynthOptions {
  std::string kind;
  std::uint64_t seed = 0;
  std::string out;
  taskmix::ClustersParams clusters;
  taskmix::GroupsParams groups;
};

int cmd_synth(const SynthOptions& opt) {
  const fs::path out_dir(opt.out);
  ensure_dir(out_dir);

  taskmix::SyntheticData data;
  json params;
  if (opt.kind == "clusters") {
    data = taskmix::gen_synthetic_clusters(opt.seed, opt.clusters);
    params = {{"n_clusters", opt.clusters.n_clusters},
              {"tasks_per_cluster", opt.clusters.tasks_per_cluster},
              {"feature_dim", opt.clusters.feature_dim},
              {"train_per_task", opt.clusters.train_per_task},
              {"test_per_task", opt.clusters.test_per_task},
              {"center_scale", opt.clusters.center_scale},
              {"within_scale", opt.clusters.within_scale}};
  } else {
    data = taskmix::gen_synthetic_groups_regression(opt.seed, opt.groups);
    params = {{"n_groups", opt.groups.n_groups},
              {"tasks_per_group", opt.groups.tasks_per_group},
              {"feature_dim", opt.groups.feature_dim},
              {"train_per_task", opt.groups.train_per_task},
              {"test_per_task", opt.groups.test_per_task},
              {"subspace_rank", opt.groups.subspace_rank},
              {"mean_scale", opt.groups.mean_scale},
              {"within_scale", opt.groups.within_scale},
              {"noise_scale", opt.groups.noise_scale}};
  }

  taskmix::DatasetPair pair{std::move(data.train), std::move(data.test)};
  taskmix::write_dataset(pair, opt.kind, out_dir);

  json truth;
  truth["true_labels"] = json::object();
  for (Eigen::Index t = 0; t < pair.train.num_tasks(); ++t) {
    truth["true_labels"][pair.train.tasks[t].id] = data.true_labels[t];
  }
  json theta = json::array();
  for (Eigen::Index i = 0; i < data.true_theta.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.true_theta.cols(); ++j) {
      theta.push_back(data.true_theta(i, j));
    }
  }
  truth["true_theta"] = std::move(theta);
  truth["true_theta_dims"] = {data.true_theta.rows(), data.true_theta.cols()};
  write_text(out_dir / "truth.json", truth.dump(2));

  write_run_config(out_dir, {{"command", "synth"},
                             {"kind", opt.kind},
                             {"seed", opt.seed},
                             {"out", opt.out},
                             {"params", params}});
  std::cout << "wrote " << (out_dir / "manifest.json").string() << "\n";
  return 0;
}

struct FitOptions {
  std::string manifest;
  std::string out;
  double alpha1 = 1.0;
  double alpha2 = 5.0;
  int truncation_f = -1;  // -1: default to the number of tasks
  int truncation_k = -1;  // -1: default to min(feature_dim, num_tasks)
  int iters = 3;
  double inner_tol = 1e-5;
  std::uint64_t seed = 0;
  int restarts = 1;
  bool standardize = false;
};

taskmix::Hyperparameters resolve_hyper(const FitOptions& opt,
                                       const taskmix::MultitaskDataset& train) {
  taskmix::Hyperparameters h;
  h.alpha1 = opt.alpha1;
  h.alpha2 = opt.alpha2;
  h.truncation_f = opt.truncation_f > 0
                       ? opt.truncation_f
                       : static_cast<int>(train.num_tasks());
  h.truncation_k =
      opt.truncation_k >= 0
          ? opt.truncation_k
          : static_cast<int>(std::min(train.feature_dim, train.num_tasks()));
  h.outer_iters = opt.iters;
  h.inner_tol = opt.inner_tol;
  h.seed = opt.seed;
  return h;
}

std::string elbo_trace_csv(const std::vector<double>& trace) {
  std::ostringstream out;
  out << "step,elbo\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << "," << shortest(trace[i]) << "\n";
  }
  return out.str();
}

int cmd_fit(const FitOptions& opt) {
  const fs::path out_dir(opt.out);
  ensure_dir(out_dir);

  const taskmix::DatasetPair pair = taskmix::load_dataset(opt.manifest);
  taskmix::MultitaskDataset train = pair.train;

  std::optional<taskmix::Standardizer> standardizer;
  if (opt.standardize) {
    standardizer = taskmix::fit_standardizer(train);
    train = taskmix::apply_standardizer(*standardizer, train);
  }

  const taskmix::Hyperparameters h = resolve_hyper(opt, train);
  const taskmix::FitOutput result =
      taskmix::fit_with_restarts(train, h, opt.restarts);

  taskmix::SavedModel model;
  model.state = result.state;
  model.hyper = h;
  model.hyper.seed = result.report.seed;
  model.standardizer = standardizer;
  for (const auto& task : train.tasks) {
    model.task_ids.push_back(task.id);
  }
  taskmix::save_model(model, out_dir / "model.json");
  write_text(out_dir / "report.json", taskmix::report_to_json(result.report));
  write_text(out_dir / "elbo.csv", elbo_trace_csv(result.report.elbo_trace));

  write_run_config(out_dir,
                   {{"command", "fit"},
                    {"manifest", opt.manifest},
                    {"out", opt.out},
                    {"standardize", opt.standardize},
                    {"restarts", opt.restarts},
                    {"chosen_seed", result.report.seed},
                    {"hyperparameters", hyper_to_json(h)}});
  std::cout << "wrote " << (out_dir / "model.json").string()
            << " (final bound " << shortest(result.report.elbo_trace.back())
            << ")\n";
  return 0;
}

struct EvalOptions {
  std::string model;
  std::string manifest;
  std::string out;
};

int cmd_eval(const EvalOptions& opt) {
  const fs::path out_dir(opt.out);
  ensure_dir(out_dir);

  const taskmix::SavedModel model = taskmix::load_model(opt.model);
  taskmix::DatasetPair pair = taskmix::load_dataset(opt.manifest);

  if (pair.train.task_type != model.state.task_type) {
    throw taskmix::InvalidArgument("eval: model and dataset task types differ");
  }
  if (pair.train.feature_dim != model.state.feature_dim()) {
    std::ostringstream msg;
    msg << "eval: model expects " << model.state.feature_dim()
        << " features but the dataset has " << pair.train.feature_dim;
    throw taskmix::InvalidArgument(msg.str());
  }
  std::vector<std::string> dataset_ids;
  for (const auto& task : pair.train.tasks) {
    dataset_ids.push_back(task.id);
  }
  if (dataset_ids != model.task_ids) {
    throw taskmix::InvalidArgument(
        "eval: dataset task ids do not match the model's task ids");
  }

  if (model.standardizer.has_value()) {
    pair.train = taskmix::apply_standardizer(*model.standardizer, pair.train);
    pair.test = taskmix::apply_standardizer(*model.standardizer, pair.test);
  }

  const Eigen::MatrixXd stl_weights = taskmix::fit_stl(pair.train);

  struct Row {
    const char* method;
    const char* split;
    Eigen::VectorXd values;
  };
  const std::vector<Row> rows = {
      {"mfa_mtl", "train", taskmix::per_task_metric(model.state, pair.train)},
      {"mfa_mtl", "test", taskmix::per_task_metric(model.state, pair.test)},
      {"stl", "train", taskmix::per_task_metric(stl_weights, pair.train)},
      {"stl", "test", taskmix::per_task_metric(stl_weights, pair.test)},
  };

  const std::string metric =
      pair.train.task_type == taskmix::TaskType::regression ? "mse"
                                                            : "accuracy";
  json doc;
  doc["metric"] = metric;
  doc["methods"] = json::object();
  std::ostringstream csv;
  csv << "task_id,method,split,value\n";
  for (const auto& row : rows) {
    json per_task = json::object();
    for (std::size_t t = 0; t < dataset_ids.size(); ++t) {
      const double value = row.values[static_cast<Eigen::Index>(t)];
      per_task[dataset_ids[t]] = value;
      csv << dataset_ids[t] << "," << row.method << "," << row.split << ","
          << shortest(value) << "\n";
    }
    doc["methods"][row.method][row.split] = {
        {"per_task", std::move(per_task)},
        {"mean", taskmix::mean_metric(row.values)}};
  }
  write_text(out_dir / "eval.json", doc.dump(2));
  write_text(out_dir / "eval.csv", csv.str());

  write_run_config(out_dir, {{"command", "eval"},
                             {"model", opt.model},
                             {"manifest", opt.manifest},
                             {"out", opt.out}});

  std::cout << "mean test " << metric << ": mfa_mtl "
            << shortest(taskmix::mean_metric(rows[1].values)) << ", stl "
            << shortest(taskmix::mean_metric(rows[3].values)) << "\n";
  return 0;
}

struct InspectOptions {
  std::string model;
  std::string out;
  double occupancy_threshold = 1e-3;
  double usage_threshold = 0.5;
};

int cmd_inspect(const InspectOptions& opt) {
  const fs::path out_dir(opt.out);
  ensure_dir(out_dir);

  const taskmix::SavedModel model = taskmix::load_model(opt.model);
  const taskmix::StructureSummary summary = taskmix::summarize_structure(
      model.state, opt.occupancy_threshold, opt.usage_threshold);

  write_text(out_dir / "structure.json",
             taskmix::structure_to_json(summary, model.task_ids));
  write_text(out_dir / "correlation.csv",
             taskmix::correlation_to_csv(summary.task_correlation,
                                         model.task_ids));

  write_run_config(out_dir, {{"command", "inspect"},
                             {"model", opt.model},
                             {"out", opt.out},
                             {"occupancy_threshold", opt.occupancy_threshold},
                             {"usage_threshold", opt.usage_threshold}});
  std::cout << "occupied components: " << summary.occupied_components << "\n";
  return 0;
}

struct CurveOptions {
  FitOptions fit;
  std::vector<double> fractions;
  std::vector<std::uint64_t> seeds;
};

int cmd_curve(const CurveOptions& opt) {
  const fs::path out_dir(opt.fit.out);
  ensure_dir(out_dir);

  const taskmix::DatasetPair pair = taskmix::load_dataset(opt.fit.manifest);
  taskmix::MultitaskDataset train = pair.train;
  taskmix::MultitaskDataset test = pair.test;
  if (opt.fit.standardize) {
    const taskmix::Standardizer standardizer = taskmix::fit_standardizer(train);
    train = taskmix::apply_standardizer(standardizer, train);
    test = taskmix::apply_standardizer(standardizer, test);
  }

  const taskmix::Hyperparameters h = resolve_hyper(opt.fit, train);
  const std::vector<taskmix::CurvePoint> points =
      taskmix::learning_curve(train, test, h, opt.fractions, opt.seeds);

  std::ostringstream csv;
  csv << "method,fraction,seed,value\n";
  for (const auto& point : points) {
    csv << point.method << "," << shortest(point.fraction) << "," << point.seed
        << "," << shortest(point.value) << "\n";
  }
  write_text(out_dir / "curve.csv", csv.str());

  json fractions = json::array();
  for (double fraction : opt.fractions) {
    fractions.push_back(fraction);
  }
  json seeds = json::array();
  for (std::uint64_t seed : opt.seeds) {
    seeds.push_back(seed);
  }
  write_run_config(out_dir, {{"command", "curve"},
                             {"manifest", opt.fit.manifest},
                             {"out", opt.fit.out},
                             {"standardize", opt.fit.standardize},
                             {"fractions", fractions},
                             {"seeds", seeds},
                             {"hyperparameters", hyper_to_json(h)}});
  std::cout << "wrote " << (out_dir / "curve.csv").string() << "\n";
  return 0;
}

void add_fit_flags(CLI::App* cmd, FitOptions& opt) {
  cmd->add_option("manifest", opt.manifest, "Dataset manifest JSON")
      ->required();
  cmd->add_option("--out", opt.out, "Output directory")->required();
  cmd->add_option("--alpha1", opt.alpha1,
                  "Concentration of the component-weight process");
  cmd->add_option("--alpha2", opt.alpha2,
                  "Concentration of the factor-activation prior");
  cmd->add_option("--truncation-f", opt.truncation_f,
                  "Number of mixture components (default: number of tasks)");
  cmd->add_option("--truncation-k", opt.truncation_k,
                  "Factors per component (default: min(feature_dim, tasks))");
  cmd->add_option("--iters", opt.iters, "Outer iterations");
  cmd->add_option("--inner-tol", opt.inner_tol,
                  "Relative tolerance of the inner coordinate loop");
  cmd->add_option("--seed", opt.seed, "Random seed");
  cmd->add_option("--restarts", opt.restarts,
                  "Fit this many seeds and keep the best final bound")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--standardize", opt.standardize,
                "Standardize features on the training split");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multitask learner that clusters tasks and shares low-rank "
               "structure within clusters"};
  app.require_subcommand(1);

  SynthOptions synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("kind", synth.kind, "clusters or groups")
      ->required()
      ->check(CLI::IsMember({"clusters", "groups"}));
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--clusters", synth.clusters.n_clusters,
                        "Cluster count (clusters kind)");
  synth_cmd->add_option("--tasks-per-cluster", synth.clusters.tasks_per_cluster,
                        "Tasks per cluster (clusters kind)");
  synth_cmd->add_option("--groups", synth.groups.n_groups,
                        "Group count (groups kind)");
  synth_cmd->add_option("--tasks-per-group", synth.groups.tasks_per_group,
                        "Tasks per group (groups kind)");
  synth_cmd->add_option("--dim", synth.clusters.feature_dim,
                        "Feature dimension");
  synth_cmd->add_option("--train", synth.clusters.train_per_task,
                        "Training rows per task");
  synth_cmd->add_option("--test", synth.clusters.test_per_task,
                        "Test rows per task");

  FitOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the multitask model");
  add_fit_flags(fit_cmd, fit);

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Evaluate a fitted model against the single-task baseline");
  eval_cmd->add_option("--model", eval.model, "Fitted model JSON")->required();
  eval_cmd->add_option("--manifest", eval.manifest, "Dataset manifest JSON")
      ->required();
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();

  InspectOptions inspect;
  CLI::App* inspect_cmd = app.add_subcommand(
      "inspect", "Summarize the latent structure of a fitted model");
  inspect_cmd->add_option("--model", inspect.model, "Fitted model JSON")
      ->required();
  inspect_cmd->add_option("--out", inspect.out, "Output directory")->required();
  inspect_cmd->add_option("--occupancy-threshold", inspect.occupancy_threshold,
                          "Assignment mass above which a component counts");
  inspect_cmd->add_option("--usage-threshold", inspect.usage_threshold,
                          "Mean activation above which a factor counts");

  CurveOptions curve;
  CLI::App* curve_cmd = app.add_subcommand(
      "curve", "Learning curve across training fractions and seeds");
  add_fit_flags(curve_cmd, curve.fit);
  curve_cmd
      ->add_option("--fractions", curve.fractions,
                   "Comma-separated training fractions in (0, 1]")
      ->delimiter(',')
      ->required();
  curve_cmd
      ->add_option("--seeds", curve.seeds, "Comma-separated replicate seeds")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) {
      // The shared size flags land in the clusters params; mirror them for
      // the groups generator.
      synth.groups.feature_dim = synth.clusters.feature_dim;
      synth.groups.train_per_task =
          synth_cmd->count("--train") > 0 ? synth.clusters.train_per_task : 15;
      synth.groups.test_per_task = synth.clusters.test_per_task;
      return cmd_synth(synth);
    }
    if (fit_cmd->parsed()) {
      return cmd_fit(fit);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval);
    }
    if (inspect_cmd->parsed()) {
      return cmd_inspect(inspect);
    }
    if (curve_cmd->parsed()) {
      return cmd_curve(curve);
    }
  } catch (const taskmix::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const taskmix::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
