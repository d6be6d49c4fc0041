#include "taskmix/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "taskmix/errors.hpp"
#include "taskmix/rng.hpp"

namespace taskmix {

namespace {

using nlohmann::json;

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) {
    throw NumericalError("format_double: value not representable");
  }
  return std::string(buffer, ptr);
}

double parse_double(const std::string& field, const std::filesystem::path& path,
                    std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << path.string() << ": row " << row << ", column " << col
        << ": cannot parse \"" << field << "\" as a number";
    throw IoError(msg.str());
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  DatasetManifest manifest;
  try {
    manifest.name = doc.at("name").get<std::string>();
    manifest.task_type =
        task_type_from_string(doc.at("task_type").get<std::string>());
    manifest.feature_dim = doc.at("feature_dim").get<Eigen::Index>();
    for (const auto& entry : doc.at("tasks")) {
      ManifestTask task;
      task.id = entry.at("id").get<std::string>();
      task.train_path = entry.at("train_path").get<std::string>();
      task.test_path = entry.at("test_path").get<std::string>();
      manifest.tasks.push_back(std::move(task));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (manifest.feature_dim < 1) {
    throw IoError(path.string() + ": feature_dim must be >= 1");
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path) {
  json doc;
  doc["name"] = manifest.name;
  doc["task_type"] = to_string(manifest.task_type);
  doc["feature_dim"] = manifest.feature_dim;
  doc["tasks"] = json::array();
  for (const auto& task : manifest.tasks) {
    doc["tasks"].push_back({{"id", task.id},
                            {"train_path", task.train_path},
                            {"test_path", task.test_path}});
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << doc.dump(2) << "\n";
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

TaskData read_task_csv(const std::filesystem::path& path, const std::string& id,
                       TaskType type) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(path.string() + ": missing header row");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2 || header.back() != "y") {
    throw IoError(path.string() +
                  ": header must be f0,...,f{D-1},y with at least one feature");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw IoError(path.string() + ": column " + std::to_string(j + 1) +
                    ": expected header field f" + std::to_string(j) +
                    ", got \"" + header[j] + "\"");
    }
  }

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t row_index = 1;
  while (std::getline(in, line)) {
    ++row_index;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != dim + 1) {
      std::ostringstream msg;
      msg << path.string() << ": row " << row_index << ": expected "
          << dim + 1 << " fields, got " << fields.size();
      throw IoError(msg.str());
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const double value = parse_double(fields[j], path, row_index, j + 1);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << path.string() << ": row " << row_index << ", column " << j + 1
            << ": non-finite value";
        throw IoError(msg.str());
      }
      if (type == TaskType::classification && j == dim && value != 0.0 &&
          value != 1.0) {
        std::ostringstream msg;
        msg << path.string() << ": row " << row_index << ", column " << j + 1
            << ": classification label must be 0 or 1, got " << fields[j];
        throw IoError(msg.str());
      }
      values.push_back(value);
    }
    ++rows;
  }

  TaskData task;
  task.id = id;
  task.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  task.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      task.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          values[i * (dim + 1) + j];
    }
    task.y[static_cast<Eigen::Index>(i)] = values[i * (dim + 1) + dim];
  }
  return task;
}

void write_task_csv(const TaskData& task, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  for (Eigen::Index j = 0; j < task.x.cols(); ++j) {
    out << "f" << j << ",";
  }
  out << "y\n";
  for (Eigen::Index i = 0; i < task.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < task.x.cols(); ++j) {
      out << format_double(task.x(i, j)) << ",";
    }
    out << format_double(task.y[i]) << "\n";
  }
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

DatasetPair load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const std::filesystem::path base = manifest_path.parent_path();
  DatasetPair pair;
  pair.train.task_type = manifest.task_type;
  pair.train.feature_dim = manifest.feature_dim;
  pair.test.task_type = manifest.task_type;
  pair.test.feature_dim = manifest.feature_dim;
  for (const auto& entry : manifest.tasks) {
    TaskData train =
        read_task_csv(base / entry.train_path, entry.id, manifest.task_type);
    TaskData test =
        read_task_csv(base / entry.test_path, entry.id, manifest.task_type);
    for (const TaskData* part : {&train, &test}) {
      if (part->x.cols() != manifest.feature_dim) {
        std::ostringstream msg;
        msg << "task \"" << entry.id << "\": file has " << part->x.cols()
            << " features but the manifest declares " << manifest.feature_dim;
        throw IoError(msg.str());
      }
    }
    pair.train.tasks.push_back(std::move(train));
    pair.test.tasks.push_back(std::move(test));
  }
  pair.train.validate();
  pair.test.validate();
  return pair;
}

std::filesystem::path write_dataset(const DatasetPair& pair,
                                    const std::string& name,
                                    const std::filesystem::path& dir) {
  if (pair.train.num_tasks() != pair.test.num_tasks()) {
    throw InvalidArgument("write_dataset: train/test task counts differ");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir / "data", ec);
  if (ec) {
    throw IoError("cannot create " + (dir / "data").string() + ": " +
                  ec.message());
  }
  DatasetManifest manifest;
  manifest.name = name;
  manifest.task_type = pair.train.task_type;
  manifest.feature_dim = pair.train.feature_dim;
  for (Eigen::Index t = 0; t < pair.train.num_tasks(); ++t) {
    const std::string& id = pair.train.tasks[t].id;
    ManifestTask entry;
    entry.id = id;
    entry.train_path = "data/" + id + ".train.csv";
    entry.test_path = "data/" + id + ".test.csv";
    write_task_csv(pair.train.tasks[t], dir / entry.train_path);
    write_task_csv(pair.test.tasks[t], dir / entry.test_path);
    manifest.tasks.push_back(std::move(entry));
  }
  const std::filesystem::path manifest_path = dir / "manifest.json";
  write_manifest(manifest, manifest_path);
  return manifest_path;
}

namespace {

std::string task_name(int index) {
  std::ostringstream name;
  name << "task" << (index < 10 ? "0" : "") << index;
  return name.str();
}

Eigen::VectorXd random_unit_vector(Rng& rng, Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index j = 0; j < dim; ++j) {
      v[j] = rng.normal();
    }
    norm = v.norm();
  } while (!(norm > 1e-12));
  return v / norm;
}

}  // namespace

SyntheticData gen_synthetic_clusters(std::uint64_t seed,
                                     const ClustersParams& params) {
  if (params.n_clusters < 1 || params.tasks_per_cluster < 1 ||
      params.feature_dim < 1 || params.train_per_task < 1 ||
      params.test_per_task < 1) {
    throw InvalidArgument("gen_synthetic_clusters: counts must be positive");
  }
  const Eigen::Index d = params.feature_dim;
  const int t_count = params.n_clusters * params.tasks_per_cluster;
  const int n_total = params.train_per_task + params.test_per_task;

  Rng rng(seed);
  Eigen::MatrixXd centers(params.n_clusters, d);
  for (int g = 0; g < params.n_clusters; ++g) {
    centers.row(g) =
        (params.center_scale * random_unit_vector(rng, d)).transpose();
  }

  SyntheticData out;
  out.train.task_type = TaskType::classification;
  out.train.feature_dim = d;
  out.test.task_type = TaskType::classification;
  out.test.feature_dim = d;
  out.true_theta.resize(t_count, d);

  int index = 0;
  for (int g = 0; g < params.n_clusters; ++g) {
    for (int j = 0; j < params.tasks_per_cluster; ++j, ++index) {
      out.true_labels.push_back(g);
      Eigen::VectorXd theta = centers.row(g).transpose();
      for (Eigen::Index c = 0; c < d; ++c) {
        theta[c] += params.within_scale * rng.normal();
      }
      out.true_theta.row(index) = theta.transpose();

      // Draw the task's observations, redrawing (deterministically, from
      // the same stream) if the label rate degenerates.
      Eigen::MatrixXd x(n_total, d);
      Eigen::VectorXd y(n_total);
      for (int attempt = 0;; ++attempt) {
        double positives = 0.0;
        for (int i = 0; i < n_total; ++i) {
          for (Eigen::Index c = 0; c < d; ++c) {
            x(i, c) = rng.normal();
          }
          const double p = 1.0 / (1.0 + std::exp(-theta.dot(x.row(i))));
          y[i] = rng.bernoulli(p) ? 1.0 : 0.0;
          positives += y[i];
        }
        const double rate = positives / static_cast<double>(n_total);
        if (rate > 0.05 && rate < 0.95) {
          break;
        }
        if (attempt >= 1000) {
          throw NumericalError(
              "gen_synthetic_clusters: could not achieve a non-degenerate "
              "label rate");
        }
      }

      TaskData train;
      train.id = task_name(index);
      train.x = x.topRows(params.train_per_task);
      train.y = y.head(params.train_per_task);
      TaskData test;
      test.id = train.id;
      test.x = x.bottomRows(params.test_per_task);
      test.y = y.tail(params.test_per_task);
      out.train.tasks.push_back(std::move(train));
      out.test.tasks.push_back(std::move(test));
    }
  }
  return out;
}

SyntheticData gen_synthetic_groups_regression(std::uint64_t seed,
                                              const GroupsParams& params) {
  if (params.n_groups < 1 || params.tasks_per_group < 1 ||
      params.feature_dim < 1 || params.train_per_task < 1 ||
      params.test_per_task < 1 || params.subspace_rank < 1) {
    throw InvalidArgument(
        "gen_synthetic_groups_regression: counts must be positive");
  }
  if (static_cast<Eigen::Index>(params.n_groups) * params.subspace_rank >
      params.feature_dim) {
    throw InvalidArgument(
        "gen_synthetic_groups_regression: disjoint subspaces need "
        "n_groups * subspace_rank <= feature_dim");
  }
  const Eigen::Index d = params.feature_dim;
  const int t_count = params.n_groups * params.tasks_per_group;
  const int rank = params.subspace_rank;

  Rng rng(seed);
  // Each group's weights live in its own block of coordinates, so the
  // stacked weight matrix of a group has rank at most `rank`.
  Eigen::MatrixXd group_means(params.n_groups, d);
  group_means.setZero();
  for (int g = 0; g < params.n_groups; ++g) {
    const Eigen::VectorXd unit = random_unit_vector(rng, rank);
    group_means.row(g).segment(g * rank, rank) =
        (params.mean_scale * unit).transpose();
  }

  SyntheticData out;
  out.train.task_type = TaskType::regression;
  out.train.feature_dim = d;
  out.test.task_type = TaskType::regression;
  out.test.feature_dim = d;
  out.true_theta.resize(t_count, d);

  int index = 0;
  for (int g = 0; g < params.n_groups; ++g) {
    for (int j = 0; j < params.tasks_per_group; ++j, ++index) {
      out.true_labels.push_back(g);
      Eigen::VectorXd theta = group_means.row(g).transpose();
      for (int r = 0; r < rank; ++r) {
        theta[g * rank + r] += params.within_scale * rng.normal();
      }
      out.true_theta.row(index) = theta.transpose();

      const int n_total = params.train_per_task + params.test_per_task;
      Eigen::MatrixXd x(n_total, d);
      Eigen::VectorXd y(n_total);
      for (int i = 0; i < n_total; ++i) {
        for (Eigen::Index c = 0; c < d; ++c) {
          x(i, c) = rng.normal();
        }
        y[i] = theta.dot(x.row(i)) + params.noise_scale * rng.normal();
      }

      TaskData train;
      train.id = task_name(index);
      train.x = x.topRows(params.train_per_task);
      train.y = y.head(params.train_per_task);
      TaskData test;
      test.id = train.id;
      test.x = x.bottomRows(params.test_per_task);
      test.y = y.tail(params.test_per_task);
      out.train.tasks.push_back(std::move(train));
      out.test.tasks.push_back(std::move(test));
    }
  }
  return out;
}

MultitaskDataset split_fraction(const MultitaskDataset& data, double fraction,
                                std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction <= 1.0)) {
    throw InvalidArgument("split_fraction: fraction must be in (0, 1]");
  }
  if (fraction == 1.0) {
    return data;
  }
  Rng rng(seed);
  MultitaskDataset out;
  out.task_type = data.task_type;
  out.feature_dim = data.feature_dim;
  for (const auto& task : data.tasks) {
    const Eigen::Index n = task.x.rows();
    TaskData sub;
    sub.id = task.id;
    if (n == 0) {
      sub.x.resize(0, data.feature_dim);
      sub.y.resize(0);
      out.tasks.push_back(std::move(sub));
      continue;
    }
    const Eigen::Index keep = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(
               std::lround(fraction * static_cast<double>(n))));
    std::vector<Eigen::Index> indices(n);
    std::iota(indices.begin(), indices.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < keep; ++i) {
      const Eigen::Index j =
          i + static_cast<Eigen::Index>(
                  rng.next_u64() % static_cast<std::uint64_t>(n - i));
      std::swap(indices[i], indices[j]);
    }
    std::vector<Eigen::Index> chosen(indices.begin(), indices.begin() + keep);
    std::sort(chosen.begin(), chosen.end());
    sub.x.resize(keep, data.feature_dim);
    sub.y.resize(keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
      sub.x.row(i) = task.x.row(chosen[i]);
      sub.y[i] = task.y[chosen[i]];
    }
    out.tasks.push_back(std::move(sub));
  }
  return out;
}

Standardizer fit_standardizer(const MultitaskDataset& data) {
  const Eigen::Index d = data.feature_dim;
  Standardizer standardizer;
  standardizer.mean = Eigen::VectorXd::Zero(d);
  standardizer.scale = Eigen::VectorXd::Ones(d);
  double rows = 0.0;
  for (const auto& task : data.tasks) {
    standardizer.mean += task.x.colwise().sum().transpose();
    rows += static_cast<double>(task.x.rows());
  }
  if (rows == 0.0) {
    return standardizer;
  }
  standardizer.mean /= rows;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(d);
  for (const auto& task : data.tasks) {
    sq += (task.x.rowwise() - standardizer.mean.transpose())
              .array()
              .square()
              .colwise()
              .sum()
              .matrix()
              .transpose();
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    const double stddev = std::sqrt(sq[j] / rows);
    standardizer.scale[j] = stddev > 0.0 ? stddev : 1.0;
  }
  return standardizer;
}

MultitaskDataset apply_standardizer(const Standardizer& standardizer,
                                    const MultitaskDataset& data) {
  if (standardizer.mean.size() != data.feature_dim ||
      standardizer.scale.size() != data.feature_dim) {
    throw InvalidArgument("apply_standardizer: dimension mismatch");
  }
  MultitaskDataset out = data;
  for (auto& task : out.tasks) {
    task.x = (task.x.rowwise() - standardizer.mean.transpose()).array().rowwise() /
             standardizer.scale.transpose().array();
  }
  return out;
}

}  // namespace taskmix
