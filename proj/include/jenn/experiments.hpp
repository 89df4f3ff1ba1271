#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jenn/benchmarks.hpp"
#include "jenn/core.hpp"

namespace jenn {

/// Metrics for one trained model on one held-out test set.
struct ExperimentResult {
    std::string experiment;
    std::string model;  // "jenn" (gamma = 1) or "nn" (gamma = 0)
    Index samples = 0;
    double r_squared = 0.0;
    double error_std = 0.0;
    std::vector<double> partial_r_squared;  // one per input
    double runtime_seconds = 0.0;
    double final_cost = 0.0;
    std::string architecture;
};

/// Test-grid truth and both models' predictions, for plotting.
struct CurveData {
    std::string experiment;
    Matrix points;
    Vector truth;
    Vector jenn;
    Vector nn;
    Matrix train_points;
};

/// How training points are placed in the domain.
enum class SamplingPlan {
    Lhs,       // Latin hypercube with the case's seed
    Centered,  // midpoints of n equal-width strata (1-D only)
    Even,      // n evenly spaced points including both bounds (1-D only)
};

struct ValidationCase {
    TestFunctionKind function = TestFunctionKind::Sin;
    Index samples = 3;
    SamplingPlan plan = SamplingPlan::Centered;
    std::uint64_t sample_seed = 0;
    Architecture architecture;
    TrainingConfig training;
    Index test_levels = 200;  // per dimension
};

struct ValidationConfig {
    std::vector<ValidationCase> cases;
};

struct ValidationReport {
    std::vector<ExperimentResult> results;
    std::vector<CurveData> curves;

    const ExperimentResult& find(std::string_view experiment, std::string_view model) const;
};

ValidationConfig default_validation_config();

/// Trains JENN and a plain NN on each case and scores them on a dense test grid.
ValidationReport run_validation_suite(const ValidationConfig& config);

/// Trains one case once with the given gamma scale and returns its test metrics.
ExperimentResult run_validation_case(const ValidationCase& c, double gamma_scale,
                                     CurveData* curve = nullptr);

struct NoiseStudyConfig {
    Index samples = 200;
    std::uint64_t sample_seed = 0;
    Architecture architecture;
    TrainingConfig training;
    DifferenceScheme scheme = DifferenceScheme::Forward;
    std::vector<double> steps;
    Index test_levels = 50;
};

struct NoisePoint {
    double step = 0.0;               // 0 means analytic partials
    double mean_error_percent = 0.0;  // mean |fd - exact| / mean |exact| * 100
    double jenn_r_squared = 0.0;
};

struct NoiseStudyReport {
    std::vector<NoisePoint> points;
    double nn_r_squared = 0.0;
    /// Mean FD error (percent) where JENN's R^2 first falls to the NN baseline, linearly
    /// interpolated between sweep levels. Negative when no crossover occurs.
    double crossover_percent = -1.0;
};

NoiseStudyConfig default_noise_config();

/// Mean absolute finite-difference error relative to the mean absolute exact partial, in percent.
double mean_fd_error_percent(const JacobianTensor& approx, const JacobianTensor& exact);

NoiseStudyReport run_noisy_partials_study(const NoiseStudyConfig& config);

struct RuntimeConfig {
    std::vector<Index> sample_sizes;
    Architecture architecture;
    Index epochs = 20;
    int repeats = 3;
    std::uint64_t seed = 0;
};

struct RuntimeReport {
    std::vector<Index> sample_sizes;
    std::vector<double> seconds_per_epoch;  // median over repeats
    double slope = 0.0;
    double intercept = 0.0;
    double fit_r_squared = 0.0;
};

RuntimeConfig default_runtime_config();

RuntimeReport run_runtime_scaling(const RuntimeConfig& config);

}  // namespace jenn
