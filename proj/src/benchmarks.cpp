#include "jenn/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace jenn {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

std::string_view TestFunction::name() const noexcept {
    switch (kind_) {
        case TestFunctionKind::Sin: return "sin";
        case TestFunctionKind::XSinX: return "xsinx";
        case TestFunctionKind::Rastrigin2D: return "rastrigin";
        case TestFunctionKind::Rosenbrock2D: return "rosenbrock";
    }
    return "unknown";
}

Index TestFunction::inputs() const noexcept {
    switch (kind_) {
        case TestFunctionKind::Sin:
        case TestFunctionKind::XSinX: return 1;
        default: return 2;
    }
}

Bounds TestFunction::domain() const {
    if (inputs() == 1) return {Vector::Constant(1, -kPi), Vector::Constant(1, kPi)};
    return {Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)};
}

Evaluation TestFunction::operator()(const Vector& x) const {
    if (x.size() != inputs()) {
        throw std::invalid_argument(std::string(name()) + ": expected " +
                                    std::to_string(inputs()) + " inputs, got " +
                                    std::to_string(x.size()));
    }
    Evaluation e;
    e.gradient.resize(x.size());
    switch (kind_) {
        case TestFunctionKind::Sin:
            e.value = std::sin(x(0));
            e.gradient(0) = std::cos(x(0));
            break;
        case TestFunctionKind::XSinX:
            e.value = x(0) * std::sin(x(0));
            e.gradient(0) = std::sin(x(0)) + x(0) * std::cos(x(0));
            break;
        case TestFunctionKind::Rastrigin2D:
            e.value = 0.0;
            for (Index i = 0; i < 2; ++i) {
                const double xi = x(i);
                e.value += xi * xi - 10.0 * std::cos(2.0 * kPi * xi) + 10.0;
                e.gradient(i) = 2.0 * xi + 20.0 * kPi * std::sin(2.0 * kPi * xi);
            }
            break;
        case TestFunctionKind::Rosenbrock2D: {
            const double a = 1.0 - x(0);
            const double b = x(1) - x(0) * x(0);
            e.value = a * a + 100.0 * b * b;
            e.gradient(0) = -2.0 * a - 400.0 * x(0) * b;
            e.gradient(1) = 200.0 * b;
            break;
        }
    }
    return e;
}

TestFunction parse_test_function(std::string_view name) {
    for (auto kind : {TestFunctionKind::Sin, TestFunctionKind::XSinX,
                      TestFunctionKind::Rastrigin2D, TestFunctionKind::Rosenbrock2D}) {
        if (TestFunction(kind).name() == name) return TestFunction(kind);
    }
    throw std::invalid_argument("unknown test function '" + std::string(name) +
                                "' (valid: sin, xsinx, rastrigin, rosenbrock)");
}

Matrix lhs_sample(Index n, const Bounds& bounds, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("lhs: need at least one point");
    bounds.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Index dims = bounds.dims();
    Matrix points(dims, n);
    std::vector<Index> strata(static_cast<std::size_t>(n));
    for (Index d = 0; d < dims; ++d) {
        std::iota(strata.begin(), strata.end(), Index{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        const double width = (bounds.upper(d) - bounds.lower(d)) / static_cast<double>(n);
        for (Index i = 0; i < n; ++i) {
            const double u = unit(rng);  // in [0, 1)
            points(d, i) = bounds.lower(d) +
                           (static_cast<double>(strata[static_cast<std::size_t>(i)]) + u) * width;
        }
    }
    return points;
}

Matrix grid_sample(Index levels, const Bounds& bounds) {
    if (levels < 2) throw std::invalid_argument("grid: need at least two levels");
    bounds.validate();
    const Index dims = bounds.dims();
    Index total = 1;
    for (Index d = 0; d < dims; ++d) total *= levels;
    Matrix points(dims, total);
    for (Index c = 0; c < total; ++c) {
        Index rem = c;
        for (Index d = 0; d < dims; ++d) {
            const Index level = rem % levels;
            rem /= levels;
            points(d, c) = bounds.lower(d) + (bounds.upper(d) - bounds.lower(d)) *
                                                 static_cast<double>(level) /
                                                 static_cast<double>(levels - 1);
        }
    }
    return points;
}

JacobianTensor finite_difference_partials(const ScalarFunction& f, const Matrix& points, double h,
                                          DifferenceScheme scheme) {
    if (!(h > 0.0)) throw std::invalid_argument("finite difference: step must be > 0");
    const Index nx = points.rows();
    JacobianTensor J(1, nx, points.cols());
    for (Index t = 0; t < points.cols(); ++t) {
        Vector x = points.col(t);
        const double f0 = scheme == DifferenceScheme::Forward ? f(x).value : 0.0;
        for (Index j = 0; j < nx; ++j) {
            const double saved = x(j);
            x(j) = saved + h;
            const double up = f(x).value;
            if (scheme == DifferenceScheme::Forward) {
                J(0, j, t) = (up - f0) / h;
            } else {
                x(j) = saved - h;
                J(0, j, t) = (up - f(x).value) / (2.0 * h);
            }
            x(j) = saved;
        }
    }
    return J;
}

Dataset sample_dataset(const TestFunction& f, const Matrix& points) {
    if (points.rows() != f.inputs()) {
        throw std::invalid_argument("sample_dataset: point dimension does not match function");
    }
    const Index m = points.cols();
    Matrix Y(1, m);
    JacobianTensor J(1, f.inputs(), m);
    for (Index t = 0; t < m; ++t) {
        const Evaluation e = f(points.col(t));
        Y(0, t) = e.value;
        for (Index j = 0; j < f.inputs(); ++j) J(0, j, t) = e.gradient(j);
    }
    return make_dataset(points, std::move(Y), std::move(J));
}

Metrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() < 2) {
        throw std::invalid_argument("metrics: need two equal-length series of at least 2 values");
    }
    const double n = static_cast<double>(y_true.size());
    const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
    double ss_tot = 0.0;
    double ss_res = 0.0;
    double err_sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
        const double e = y_pred[i] - y_true[i];
        ss_res += e * e;
        err_sum += e;
    }
    if (ss_tot == 0.0) throw std::invalid_argument("metrics: y_true is constant, R^2 undefined");
    const double err_mean = err_sum / n;
    double err_var = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_pred[i] - y_true[i] - err_mean;
        err_var += e * e;
    }
    return {1.0 - ss_res / ss_tot, std::sqrt(err_var / n)};
}

}  // namespace jenn
