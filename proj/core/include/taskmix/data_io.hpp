#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taskmix/types.hpp"

namespace taskmix {

/// Train/test file locations for one task, relative to the manifest.
struct ManifestTask {
  std::string id;
  std::string train_path;
  std::string test_path;
};

/// On-disk description of a multitask dataset.
struct DatasetManifest {
  std::string name;
  TaskType task_type = TaskType::regression;
  Eigen::Index feature_dim = 0;
  std::vector<ManifestTask> tasks;
};

struct DatasetPair {
  MultitaskDataset train;
  MultitaskDataset test;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);

/// Reads one task's observations from CSV. The header must be
/// f0,...,f{D-1},y; every row needs D+1 numeric fields. Parse failures
/// raise IoError naming the file, row, and column.
TaskData read_task_csv(const std::filesystem::path& path, const std::string& id,
                       TaskType type);
void write_task_csv(const TaskData& task, const std::filesystem::path& path);

/// Loads every task listed in a manifest, resolving relative paths
/// against the manifest's directory.
DatasetPair load_dataset(const std::filesystem::path& manifest_path);

/// Writes a dataset pair as manifest.json plus per-task CSVs under
/// dir/data/, and returns the manifest path.
std::filesystem::path write_dataset(const DatasetPair& pair,
                                    const std::string& name,
                                    const std::filesystem::path& dir);

/// Synthetic data with its generating truth.
struct SyntheticData {
  MultitaskDataset train;
  MultitaskDataset test;
  std::vector<int> true_labels;  // generating cluster per task
  Eigen::MatrixXd true_theta;    // T x D generating weights
};

struct ClustersParams {
  int n_clusters = 5;
  int tasks_per_cluster = 10;
  Eigen::Index feature_dim = 20;
  int train_per_task = 50;
  int test_per_task = 50;
  double center_scale = 4.5;   // norm of each cluster center
  double within_scale = 0.3;   // per-coordinate spread around the center
};

/// Binary classification tasks whose weight vectors form well-separated
/// clusters. Every task's empirical positive rate is kept inside
/// (0.05, 0.95) by redrawing that task's observations (deterministically)
/// when violated.
SyntheticData gen_synthetic_clusters(std::uint64_t seed,
                                     const ClustersParams& params = {});

struct GroupsParams {
  int n_groups = 3;
  int tasks_per_group = 10;
  Eigen::Index feature_dim = 20;
  int train_per_task = 15;
  int test_per_task = 50;
  int subspace_rank = 4;
  double mean_scale = 4.0;    // norm of each group's mean weight vector
  double within_scale = 0.75; // spread of tasks inside their subspace
  double noise_scale = 0.5;   // observation noise standard deviation
};

/// Regression tasks in groups; each group's weight vectors live in its
/// own low-rank coordinate block (plus a group mean), so the stacked
/// weight matrix of a group has rank at most subspace_rank.
SyntheticData gen_synthetic_groups_regression(std::uint64_t seed,
                                              const GroupsParams& params = {});

/// Per-task subsample without replacement keeping round(fraction * N_t)
/// rows (at least 1 for non-empty tasks), in their original order.
/// fraction = 1 returns the dataset unchanged. Throws InvalidArgument
/// unless 0 < fraction <= 1.
MultitaskDataset split_fraction(const MultitaskDataset& data, double fraction,
                                std::uint64_t seed);

/// Per-feature affine transform fitted on pooled training rows.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // features with zero variance keep scale 1
};

Standardizer fit_standardizer(const MultitaskDataset& data);
MultitaskDataset apply_standardizer(const Standardizer& standardizer,
                                    const MultitaskDataset& data);

}  // namespace taskmix
