#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "taskmix/data_io.hpp"
#include "taskmix/eval.hpp"
#include "taskmix/structure.hpp"
#include "taskmix/types.hpp"
#include "taskmix/vi.hpp"

namespace taskmix {

/// Everything needed to reuse a fitted model.
struct SavedModel {
  VariationalState state;
  Hyperparameters hyper;
  std::vector<std::string> task_ids;
  std::optional<Standardizer> standardizer;
};

/// Versioned JSON for a fitted model. Numeric arrays are flattened
/// row-major; doubles are rendered with round-trip precision, so loading
/// reproduces the state bit for bit.
std::string model_to_json(const SavedModel& model);
SavedModel model_from_json(const std::string& text);

void save_model(const SavedModel& model, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

std::string report_to_json(const FitReport& report);

std::string structure_to_json(const StructureSummary& summary,
                              const std::vector<std::string>& task_ids);

/// Square correlation matrix as CSV with task ids on the first row and
/// first column.
std::string correlation_to_csv(const Eigen::MatrixXd& correlation,
                               const std::vector<std::string>& task_ids);

}  // namespace taskmix
