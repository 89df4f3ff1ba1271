#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "jenn/core.hpp"
#include "jenn/experiments.hpp"
#include "jenn/sbo.hpp"

namespace jenn {

/// File missing, unreadable, or unwritable.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed CSV or model file content. `line` is 1-based, 0 when not line-specific.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

/// Reads a dataset with columns x1..x{nx}, y1..y{ny} and optional dy{k}_dx{j}.
/// With no Jacobian columns the dataset is values-only. Absent individual Jacobian
/// columns read as zero with gamma = 0 for that partial.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Reads the x1..x{nx} columns only; other columns are ignored. Zero rows is allowed.
Matrix read_inputs_csv(const std::filesystem::path& path, Index inputs);

/// Mask or weight file for gamma: columns dy{k}_dx{j} (any subset, absent columns = 1),
/// either one row broadcast over all examples or one row per example.
JacobianTensor read_gamma_csv(const std::filesystem::path& path, Index outputs, Index inputs,
                              Index examples);

/// Writes x, y and every dy{k}_dx{j} column for each input row.
void write_predictions_csv(const std::filesystem::path& path, const Matrix& X,
                           const RawPrediction& prediction);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);
std::string model_to_string(const Model& model);
Model model_from_string(const std::string& text);

void write_cost_history_csv(const std::filesystem::path& path, const std::vector<double>& history);
void write_trace_csv(const std::filesystem::path& path, const OptTrace& trace);
void write_validation_csv(const std::filesystem::path& path, const ValidationReport& report);
void write_curve_csv(const std::filesystem::path& path, const CurveData& curve);
void write_noise_csv(const std::filesystem::path& path, const NoiseStudyReport& report);
void write_runtime_csv(const std::filesystem::path& path, const RuntimeReport& report);
void write_rosenbrock_summary_csv(const std::filesystem::path& path,
                                  const RosenbrockStudyReport& report);

}  // namespace jenn
