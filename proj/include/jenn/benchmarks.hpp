#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>

#include "jenn/core.hpp"

namespace jenn {

/// Function value and gradient at one point.
struct Evaluation {
    double value = 0.0;
    Vector gradient;
};

using ScalarFunction = std::function<Evaluation(const Vector&)>;

enum class TestFunctionKind { Sin, XSinX, Rastrigin2D, Rosenbrock2D };

class TestFunction {
public:
    explicit TestFunction(TestFunctionKind kind) : kind_(kind) {}

    TestFunctionKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept;
    Index inputs() const noexcept;
    Index outputs() const noexcept { return 1; }

    /// sin, xsinx on [-pi, pi]; rastrigin, rosenbrock on [-2, 2]^2.
    Bounds domain() const;

    Evaluation operator()(const Vector& x) const;

private:
    TestFunctionKind kind_;
};

TestFunction parse_test_function(std::string_view name);

/// Latin hypercube design: n points (columns), one per equal-width stratum in every
/// dimension, uniformly jittered within the stratum.
Matrix lhs_sample(Index n, const Bounds& bounds, std::uint64_t seed);

/// Regular grid with `levels` points per dimension, endpoints included, first dimension fastest.
Matrix grid_sample(Index levels, const Bounds& bounds);

enum class DifferenceScheme { Forward, Central };

/// Finite-difference partials of a scalar function at each column of `points`,
/// returned as a (1 x inputs x points) tensor.
JacobianTensor finite_difference_partials(const ScalarFunction& f, const Matrix& points, double h,
                                          DifferenceScheme scheme = DifferenceScheme::Central);

/// Exact values and analytic partials at the given points.
Dataset sample_dataset(const TestFunction& f, const Matrix& points);

struct Metrics {
    double r_squared = 0.0;
    double error_std = 0.0;
};

/// R^2 = 1 - SS_res / SS_tot and the population standard deviation of (pred - true).
Metrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace jenn
