#include <Eigen/SVD>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "taskmix/data_io.hpp"
#include "taskmix/errors.hpp"
#include "taskmix/solvers.hpp"

using namespace taskmix;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TaskData toy_task(const std::string& id) {
  TaskData task;
  task.id = id;
  task.x.resize(3, 2);
  task.x << 0.25, -1.5, 1e-8, 3.25e2, -0.3333333333333333, 0.1;
  task.y.resize(3);
  task.y << 1.0, -2.5, 0.7071067811865476;
  return task;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("task csv round-trips doubles exactly") {
  const auto dir = fresh_dir("taskmix_csv_test");
  const TaskData task = toy_task("t0");
  write_task_csv(task, dir / "t0.csv");
  const TaskData loaded =
      read_task_csv(dir / "t0.csv", "t0", TaskType::regression);
  CHECK(loaded.id == "t0");
  CHECK(same_matrix(loaded.x, task.x));
  CHECK((loaded.y.array() == task.y.array()).all());
  std::filesystem::remove_all(dir);
}

TEST_CASE("task csv errors name the file, row, and column") {
  const auto dir = fresh_dir("taskmix_csv_err");
  {
    std::ofstream out(dir / "bad_header.csv");
    out << "a,b,y\n1,2,3\n";
  }
  CHECK_THROWS_AS(
      read_task_csv(dir / "bad_header.csv", "t", TaskType::regression),
      IoError);
  {
    std::ofstream out(dir / "bad_cell.csv");
    out << "f0,f1,y\n1,2,3\n1,oops,3\n";
  }
  try {
    read_task_csv(dir / "bad_cell.csv", "t", TaskType::regression);
    CHECK(false);
  } catch (const IoError& e) {
    const std::string what = e.what();
    CHECK(what.find("bad_cell.csv") != std::string::npos);
    CHECK(what.find("row 3") != std::string::npos);
    CHECK(what.find("column 2") != std::string::npos);
  }
  {
    std::ofstream out(dir / "short_row.csv");
    out << "f0,f1,y\n1,2\n";
  }
  CHECK_THROWS_AS(
      read_task_csv(dir / "short_row.csv", "t", TaskType::regression),
      IoError);
  {
    std::ofstream out(dir / "bad_label.csv");
    out << "f0,f1,y\n1,2,0.5\n";
  }
  CHECK_THROWS_AS(
      read_task_csv(dir / "bad_label.csv", "t", TaskType::classification),
      IoError);
  CHECK_THROWS_AS(read_task_csv(dir / "missing.csv", "t", TaskType::regression),
                  IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset write and load round-trip") {
  const auto dir = fresh_dir("taskmix_dataset_test");
  const SyntheticData synth = gen_synthetic_groups_regression(
      3, {.n_groups = 2,
          .tasks_per_group = 2,
          .feature_dim = 6,
          .train_per_task = 5,
          .test_per_task = 4,
          .subspace_rank = 2});
  const DatasetPair pair{synth.train, synth.test};
  const auto manifest_path = write_dataset(pair, "tiny", dir);
  CHECK(std::filesystem::exists(manifest_path));

  const DatasetManifest manifest = read_manifest(manifest_path);
  CHECK(manifest.name == "tiny");
  CHECK(manifest.task_type == TaskType::regression);
  CHECK(manifest.feature_dim == 6);
  CHECK(manifest.tasks.size() == 4);

  const DatasetPair loaded = load_dataset(manifest_path);
  REQUIRE(loaded.train.tasks.size() == pair.train.tasks.size());
  REQUIRE(loaded.test.tasks.size() == pair.test.tasks.size());
  for (size_t t = 0; t < pair.train.tasks.size(); ++t) {
    CHECK(loaded.train.tasks[t].id == pair.train.tasks[t].id);
    CHECK(same_matrix(loaded.train.tasks[t].x, pair.train.tasks[t].x));
    CHECK((loaded.train.tasks[t].y.array() == pair.train.tasks[t].y.array())
              .all());
    CHECK(same_matrix(loaded.test.tasks[t].x, pair.test.tasks[t].x));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest errors are reported as io failures") {
  const auto dir = fresh_dir("taskmix_manifest_err");
  CHECK_THROWS_AS(read_manifest(dir / "missing.json"), IoError);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(read_manifest(dir / "broken.json"), IoError);
  {
    std::ofstream out(dir / "incomplete.json");
    out << "{\"name\": \"x\"}";
  }
  CHECK_THROWS_AS(read_manifest(dir / "incomplete.json"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cluster generator produces balanced non-degenerate tasks") {
  const SyntheticData synth = gen_synthetic_clusters(0);
  CHECK(synth.train.task_type == TaskType::classification);
  CHECK(synth.train.tasks.size() == 50);
  CHECK(synth.test.tasks.size() == 50);
  CHECK(synth.true_theta.rows() == 50);
  CHECK(synth.true_theta.cols() == 20);

  std::set<int> labels(synth.true_labels.begin(), synth.true_labels.end());
  CHECK(labels.size() == 5);
  for (int g = 0; g < 5; ++g) {
    CHECK(std::count(synth.true_labels.begin(), synth.true_labels.end(), g) ==
          10);
  }
  for (size_t t = 0; t < synth.train.tasks.size(); ++t) {
    const double pooled = synth.train.tasks[t].y.sum() +
                          synth.test.tasks[t].y.sum();
    const double rate =
        pooled / static_cast<double>(synth.train.tasks[t].y.size() +
                                     synth.test.tasks[t].y.size());
    CHECK(rate > 0.05);
    CHECK(rate < 0.95);
    CHECK(((synth.train.tasks[t].y.array() == 0.0) ||
           (synth.train.tasks[t].y.array() == 1.0))
              .all());
  }

  const SyntheticData again = gen_synthetic_clusters(0);
  CHECK(same_matrix(again.true_theta, synth.true_theta));
  CHECK(same_matrix(again.train.tasks[7].x, synth.train.tasks[7].x));
  const SyntheticData other = gen_synthetic_clusters(1);
  CHECK_FALSE(same_matrix(other.true_theta, synth.true_theta));

  CHECK_THROWS_AS(gen_synthetic_clusters(0, {.n_clusters = 0}),
                  InvalidArgument);
}

TEST_CASE("group generator hides low-rank structure that defeats ridge") {
  const SyntheticData synth = gen_synthetic_groups_regression(0);
  CHECK(synth.train.task_type == TaskType::regression);
  CHECK(synth.train.tasks.size() == 30);
  std::set<int> labels(synth.true_labels.begin(), synth.true_labels.end());
  CHECK(labels.size() == 3);

  // Each group's stacked weight matrix is rank 4: the fifth singular
  // value vanishes.
  for (int g = 0; g < 3; ++g) {
    Eigen::MatrixXd stacked(10, 20);
    int row = 0;
    for (int t = 0; t < 30; ++t) {
      if (synth.true_labels[t] == g) {
        stacked.row(row++) = synth.true_theta.row(t);
      }
    }
    REQUIRE(row == 10);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
    CHECK(svd.singularValues()(4) < 1e-10 * svd.singularValues()(0));
  }

  // A per-task ridge fit on 15 rows of 20 features loses badly to least
  // squares on the true 4 coordinates, so sharing structure has headroom.
  double ridge_mse = 0.0;
  double oracle_mse = 0.0;
  for (size_t t = 0; t < synth.train.tasks.size(); ++t) {
    const TaskData& train = synth.train.tasks[t];
    const TaskData& test = synth.test.tasks[t];
    const Eigen::VectorXd ridge =
        fit_single_task(train.x, train.y, TaskType::regression);
    ridge_mse += (test.x * ridge - test.y).squaredNorm() /
                 static_cast<double>(test.y.size());

    const int g = synth.true_labels[t];
    const Eigen::MatrixXd x_sub = train.x.middleCols(g * 4, 4);
    const Eigen::VectorXd w_sub =
        (x_sub.transpose() * x_sub)
            .ldlt()
            .solve(x_sub.transpose() * train.y);
    const Eigen::MatrixXd x_test_sub = test.x.middleCols(g * 4, 4);
    oracle_mse += (x_test_sub * w_sub - test.y).squaredNorm() /
                  static_cast<double>(test.y.size());
  }
  CHECK(ridge_mse > 2.0 * oracle_mse);

  const SyntheticData again = gen_synthetic_groups_regression(0);
  CHECK(same_matrix(again.true_theta, synth.true_theta));
  CHECK_THROWS_AS(
      gen_synthetic_groups_regression(
          0, {.n_groups = 3, .feature_dim = 8, .subspace_rank = 4}),
      InvalidArgument);
}

TEST_CASE("split_fraction subsamples per task deterministically") {
  const SyntheticData synth = gen_synthetic_groups_regression(
      5, {.n_groups = 1,
          .tasks_per_group = 3,
          .feature_dim = 4,
          .train_per_task = 9,
          .test_per_task = 2,
          .subspace_rank = 2});
  const MultitaskDataset& data = synth.train;

  const MultitaskDataset whole = split_fraction(data, 1.0, 3);
  for (size_t t = 0; t < data.tasks.size(); ++t) {
    CHECK(same_matrix(whole.tasks[t].x, data.tasks[t].x));
  }

  const MultitaskDataset half = split_fraction(data, 0.5, 3);
  for (size_t t = 0; t < data.tasks.size(); ++t) {
    CHECK(half.tasks[t].y.size() == 5);  // round(0.5 * 9) with round-half-up
    // Kept rows appear in their original relative order.
    int cursor = 0;
    for (Eigen::Index i = 0; i < half.tasks[t].x.rows(); ++i) {
      bool found = false;
      for (; cursor < data.tasks[t].x.rows(); ++cursor) {
        if ((data.tasks[t].x.row(cursor).array() ==
             half.tasks[t].x.row(i).array())
                .all() &&
            data.tasks[t].y[cursor] == half.tasks[t].y[i]) {
          ++cursor;
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
  const MultitaskDataset half2 = split_fraction(data, 0.5, 3);
  CHECK(same_matrix(half2.tasks[0].x, half.tasks[0].x));
  const MultitaskDataset other = split_fraction(data, 0.5, 4);
  bool any_diff = false;
  for (size_t t = 0; t < data.tasks.size(); ++t) {
    if (!same_matrix(other.tasks[t].x, half.tasks[t].x)) {
      any_diff = true;
    }
  }
  CHECK(any_diff);

  const MultitaskDataset tiny = split_fraction(data, 1e-6, 0);
  for (const TaskData& task : tiny.tasks) {
    CHECK(task.y.size() == 1);
  }

  CHECK_THROWS_AS(split_fraction(data, 0.0, 0), InvalidArgument);
  CHECK_THROWS_AS(split_fraction(data, 1.5, 0), InvalidArgument);
}

TEST_CASE("standardizer pools training rows and guards flat features") {
  MultitaskDataset data;
  data.task_type = TaskType::regression;
  data.feature_dim = 3;
  TaskData a;
  a.id = "a";
  a.x.resize(2, 3);
  a.x << 1.0, 5.0, 2.0, 3.0, 5.0, 4.0;
  a.y.resize(2);
  a.y << 0.0, 1.0;
  TaskData b;
  b.id = "b";
  b.x.resize(2, 3);
  b.x << 5.0, 5.0, 6.0, 7.0, 5.0, 8.0;
  b.y.resize(2);
  b.y << 2.0, 3.0;
  data.tasks = {a, b};

  const Standardizer std_fit = fit_standardizer(data);
  CHECK(std_fit.mean[0] == doctest::Approx(4.0));
  CHECK(std_fit.mean[1] == doctest::Approx(5.0));
  CHECK(std_fit.mean[2] == doctest::Approx(5.0));
  CHECK(std_fit.scale[1] == 1.0);  // zero-variance feature keeps scale 1
  CHECK(std_fit.scale[0] == doctest::Approx(std::sqrt(5.0)));

  const MultitaskDataset scaled = apply_standardizer(std_fit, data);
  CHECK(scaled.tasks[0].x(0, 0) ==
        doctest::Approx((1.0 - 4.0) / std::sqrt(5.0)));
  CHECK(scaled.tasks[0].x(0, 1) == doctest::Approx(0.0));
  CHECK((scaled.tasks[0].y.array() == data.tasks[0].y.array()).all());

  // Pooled columns: mean 0, unit variance after the transform.
  Eigen::MatrixXd pooled(4, 3);
  pooled << scaled.tasks[0].x, scaled.tasks[1].x;
  CHECK(pooled.col(0).mean() == doctest::Approx(0.0));
  CHECK(pooled.col(0).squaredNorm() / 4.0 == doctest::Approx(1.0));
}
