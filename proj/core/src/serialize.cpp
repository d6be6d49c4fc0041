#include "taskmix/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "taskmix/errors.hpp"

namespace taskmix {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json flatten(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      arr.push_back(m(i, j));
    }
  }
  return arr;
}

Eigen::MatrixXd unflatten(const json& arr, Eigen::Index rows,
                          Eigen::Index cols, const std::string& name) {
  if (!arr.is_array() ||
      static_cast<Eigen::Index>(arr.size()) != rows * cols) {
    std::ostringstream msg;
    msg << "model: field " << name << " must be a flat array of "
        << rows * cols << " numbers";
    throw IoError(msg.str());
  }
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j, ++pos) {
      m(i, j) = arr.at(pos).get<double>();
    }
  }
  return m;
}

json flatten_stack(const std::vector<Eigen::MatrixXd>& stack) {
  json arr = json::array();
  for (const auto& m : stack) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        arr.push_back(m(i, j));
      }
    }
  }
  return arr;
}

std::vector<Eigen::MatrixXd> unflatten_stack(const json& arr,
                                             Eigen::Index count,
                                             Eigen::Index rows,
                                             Eigen::Index cols,
                                             const std::string& name) {
  if (!arr.is_array() ||
      static_cast<Eigen::Index>(arr.size()) != count * rows * cols) {
    std::ostringstream msg;
    msg << "model: field " << name << " must be a flat array of "
        << count * rows * cols << " numbers";
    throw IoError(msg.str());
  }
  std::vector<Eigen::MatrixXd> stack(count, Eigen::MatrixXd(rows, cols));
  Eigen::Index pos = 0;
  for (Eigen::Index c = 0; c < count; ++c) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j, ++pos) {
        stack[c](i, j) = arr.at(pos).get<double>();
      }
    }
  }
  return stack;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v[i]);
  }
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& name) {
  if (!arr.is_array()) {
    throw IoError("model: field " + name + " must be an array");
  }
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr.at(i).get<double>();
  }
  return v;
}

}  // namespace

std::string model_to_json(const SavedModel& model) {
  const VariationalState& state = model.state;
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["task_type"] = to_string(state.task_type);
  doc["task_ids"] = model.task_ids;
  doc["dims"] = {{"num_tasks", state.num_tasks()},
                 {"feature_dim", state.feature_dim()},
                 {"num_components", state.num_components()},
                 {"num_factors", state.num_factors()}};
  doc["hyperparameters"] = {
      {"alpha1", model.hyper.alpha1},
      {"alpha2", model.hyper.alpha2},
      {"truncation_f", model.hyper.truncation_f},
      {"truncation_k", model.hyper.truncation_k},
      {"outer_iters", model.hyper.outer_iters},
      {"inner_tol", model.hyper.inner_tol},
      {"seed", model.hyper.seed},
  };
  if (model.standardizer.has_value()) {
    doc["standardizer"] = {
        {"mean", vector_to_json(model.standardizer->mean)},
        {"scale", vector_to_json(model.standardizer->scale)}};
  } else {
    doc["standardizer"] = nullptr;
  }
  json s;
  s["nu_theta"] = flatten(state.nu_theta);
  s["nu_mu"] = flatten(state.nu_mu);
  s["nu_lambda"] = flatten_stack(state.nu_lambda);
  s["nu_s"] = flatten_stack(state.nu_s);
  s["nu_b"] = flatten_stack(state.nu_b);
  s["nu_z"] = flatten(state.nu_z);
  s["gamma"] = flatten(state.gamma);
  s["rho1"] = flatten(state.rho1);
  s["rho2"] = flatten(state.rho2);
  s["sigma"] = state.sigma;
  json xi = json::array();
  for (const auto& v : state.xi) {
    xi.push_back(vector_to_json(v));
  }
  s["xi"] = xi;
  s["elbo_trace"] = state.elbo_trace;
  doc["state"] = std::move(s);
  return doc.dump(2);
}

SavedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw IoError("model: unsupported format_version");
    }
    SavedModel model;
    model.state.task_type =
        task_type_from_string(doc.at("task_type").get<std::string>());
    model.task_ids = doc.at("task_ids").get<std::vector<std::string>>();

    const json& dims = doc.at("dims");
    const auto t_count = dims.at("num_tasks").get<Eigen::Index>();
    const auto d = dims.at("feature_dim").get<Eigen::Index>();
    const auto f_count = dims.at("num_components").get<Eigen::Index>();
    const auto k_count = dims.at("num_factors").get<Eigen::Index>();
    if (t_count < 1 || d < 1 || f_count < 1 || k_count < 0) {
      throw IoError("model: invalid dims");
    }
    if (static_cast<Eigen::Index>(model.task_ids.size()) != t_count) {
      throw IoError("model: task_ids length does not match num_tasks");
    }

    const json& hyper = doc.at("hyperparameters");
    model.hyper.alpha1 = hyper.at("alpha1").get<double>();
    model.hyper.alpha2 = hyper.at("alpha2").get<double>();
    model.hyper.truncation_f = hyper.at("truncation_f").get<int>();
    model.hyper.truncation_k = hyper.at("truncation_k").get<int>();
    model.hyper.outer_iters = hyper.at("outer_iters").get<int>();
    model.hyper.inner_tol = hyper.at("inner_tol").get<double>();
    model.hyper.seed = hyper.at("seed").get<std::uint64_t>();

    if (!doc.at("standardizer").is_null()) {
      Standardizer standardizer;
      standardizer.mean =
          vector_from_json(doc.at("standardizer").at("mean"), "standardizer.mean");
      standardizer.scale = vector_from_json(doc.at("standardizer").at("scale"),
                                            "standardizer.scale");
      if (standardizer.mean.size() != d || standardizer.scale.size() != d) {
        throw IoError("model: standardizer dimension mismatch");
      }
      model.standardizer = std::move(standardizer);
    }

    const json& s = doc.at("state");
    VariationalState& state = model.state;
    state.nu_theta = unflatten(s.at("nu_theta"), t_count, d, "nu_theta");
    state.nu_mu = unflatten(s.at("nu_mu"), f_count, d, "nu_mu");
    state.nu_lambda =
        unflatten_stack(s.at("nu_lambda"), f_count, d, k_count, "nu_lambda");
    state.nu_s = unflatten_stack(s.at("nu_s"), t_count, f_count, k_count, "nu_s");
    state.nu_b = unflatten_stack(s.at("nu_b"), t_count, f_count, k_count, "nu_b");
    state.nu_z = unflatten(s.at("nu_z"), t_count, f_count, "nu_z");
    state.gamma = unflatten(s.at("gamma"), f_count, 2, "gamma");
    state.rho1 = unflatten(s.at("rho1"), f_count, k_count, "rho1");
    state.rho2 = unflatten(s.at("rho2"), f_count, k_count, "rho2");
    state.sigma = s.at("sigma").get<double>();
    const json& xi = s.at("xi");
    if (!xi.is_array()) {
      throw IoError("model: field xi must be an array");
    }
    for (const auto& v : xi) {
      state.xi.push_back(vector_from_json(v, "xi"));
    }
    state.elbo_trace = s.at("elbo_trace").get<std::vector<double>>();

    state.validate();
    return model;
  } catch (const json::exception& e) {
    throw IoError(std::string("model: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("model: ") + e.what());
  } catch (const NumericalError& e) {
    throw IoError(std::string("model: ") + e.what());
  }
}

void save_model(const SavedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << model_to_json(model) << "\n";
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

std::string report_to_json(const FitReport& report) {
  json doc;
  doc["metric"] = report.metric_name;
  json per_task = json::object();
  for (std::size_t t = 0; t < report.task_ids.size(); ++t) {
    per_task[report.task_ids[t]] =
        report.train_metric[static_cast<Eigen::Index>(t)];
  }
  doc["train_metric"] = std::move(per_task);
  doc["mean_train_metric"] = report.mean_train_metric;
  doc["elbo_trace"] = report.elbo_trace;
  if (report.elbo_trace.empty()) {
    doc["final_elbo"] = nullptr;
  } else {
    doc["final_elbo"] = report.elbo_trace.back();
  }
  doc["structure"] = json::parse(
      structure_to_json(report.structure, report.task_ids));
  doc["seed"] = report.seed;
  doc["wall_time_seconds"] = report.wall_time_seconds;
  return doc.dump(2);
}

std::string structure_to_json(const StructureSummary& summary,
                              const std::vector<std::string>& task_ids) {
  json doc;
  doc["cluster_of_task"] = json::object();
  for (std::size_t t = 0; t < task_ids.size(); ++t) {
    doc["cluster_of_task"][task_ids[t]] = summary.cluster_of_task[t];
  }
  doc["occupied_components"] = summary.occupied_components;
  doc["factor_usage"] = flatten(summary.factor_usage);
  doc["factor_usage_dims"] = {summary.factor_usage.rows(),
                              summary.factor_usage.cols()};
  doc["effective_rank"] = summary.effective_rank;
  doc["degenerate_tasks"] = summary.degenerate_tasks;
  return doc.dump(2);
}

std::string correlation_to_csv(const Eigen::MatrixXd& correlation,
                               const std::vector<std::string>& task_ids) {
  if (correlation.rows() != correlation.cols() ||
      correlation.rows() != static_cast<Eigen::Index>(task_ids.size())) {
    throw InvalidArgument("correlation_to_csv: shape mismatch");
  }
  const auto shortest = [](double value) {
    char buffer[32];
    const auto [ptr, ec] =
        std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ec == std::errc() ? ptr : buffer);
  };
  std::ostringstream out;
  out << "task_id";
  for (const auto& id : task_ids) {
    out << "," << id;
  }
  out << "\n";
  for (Eigen::Index i = 0; i < correlation.rows(); ++i) {
    out << task_ids[i];
    for (Eigen::Index j = 0; j < correlation.cols(); ++j) {
      out << "," << shortest(correlation(i, j));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace taskmix
