#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jenn/benchmarks.hpp"
#include "jenn/core.hpp"
#include "jenn/training.hpp"

namespace jenn {

struct OptProblem {
    ScalarFunction objective;
    Bounds bounds;
    Vector x0;
};

struct OptSettings {
    double gtol = 1e-6;   // on the projected-gradient step P(x - g) - x
    double xtol = 1e-10;  // on the accepted step length
    Index max_iter = 5000;
    double armijo = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 60;
};

enum class Termination { GradientTolerance, StepTolerance, MaxIterations, LineSearchFailed };

std::string_view to_string(Termination t);

struct OptTrace {
    std::vector<Vector> iterates;
    std::vector<double> values;
    bool converged = false;
    Termination termination_reason = Termination::MaxIterations;

    const Vector& final_point() const { return iterates.back(); }
};

/// Box projection: clamps each coordinate into [lower, upper].
Vector project(const Vector& x, const Bounds& bounds);

/// Projected gradient descent with Barzilai-Borwein trial steps and monotone Armijo
/// backtracking along the projection arc. Every recorded iterate lies in the box and the
/// recorded values never increase.
OptTrace minimize(const OptProblem& problem, const OptSettings& settings = {});

/// Wraps a single-output model as (value, gradient) in raw units.
ScalarFunction surrogate_objective(const Model& model);

struct RosenbrockStudyConfig {
    Architecture architecture = parse_architecture("2,16,16,1");
    TrainingConfig training{};
    Index polish_epochs = 2000;
    double polish_alpha = 0.01;
    PolishConfig polish{};
    Index grid_levels = 9;
    Index lhs_points = 100;
    std::uint64_t lhs_seed = 0;
    Vector x0 = (Vector(2) << -1.5, -1.0).finished();
    OptSettings settings{};
    Index random_starts = 10;
    std::uint64_t start_seed = 1;
};

struct StudyRun {
    std::string name;  // true, nn, jenn, jenn_polished
    OptTrace trace;
    double final_distance = 0.0;  // to the known optimum (1, 1)
    double start_dispersion_mean = 0.0;  // mean final distance over random starts
    double start_dispersion_max = 0.0;
};

struct RosenbrockStudyReport {
    std::vector<StudyRun> runs;
    std::vector<Vector> random_starts;

    const StudyRun& run(std::string_view name) const;
};

RosenbrockStudyConfig default_rosenbrock_config();

RosenbrockStudyReport run_rosenbrock_study(const RosenbrockStudyConfig& config);

}  // namespace jenn
