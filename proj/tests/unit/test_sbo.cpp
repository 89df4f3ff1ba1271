#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "jenn/sbo.hpp"
#include "oracles.hpp"

using namespace jenn;

namespace {

Bounds box2(double lo, double hi) { return {Vector::Constant(2, lo), Vector::Constant(2, hi)}; }

ScalarFunction half_norm_squared(const Vector& center) {
    return [center](const Vector& x) {
        return Evaluation{0.5 * (x - center).squaredNorm(), x - center};
    };
}

void expect_feasible_and_monotone(const OptTrace& trace, const Bounds& b) {
    ASSERT_EQ(trace.iterates.size(), trace.values.size());
    ASSERT_GE(trace.iterates.size(), 1u);
    for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
        EXPECT_TRUE(b.contains(trace.iterates[i])) << "iterate " << i;
        EXPECT_EQ(project(trace.iterates[i], b), trace.iterates[i]);
        if (i > 0) EXPECT_LE(trace.values[i], trace.values[i - 1]) << "iterate " << i;
    }
}

}  // namespace

TEST(Minimize, ConvexQuadraticInterior) {
    const Bounds b = box2(-2.0, 2.0);
    const OptTrace t = minimize({half_norm_squared(Vector::Zero(2)), b, (Vector(2) << 1.5, -0.7).finished()});
    EXPECT_TRUE(t.converged);
    EXPECT_LT(t.final_point().norm(), 1e-6);
    expect_feasible_and_monotone(t, b);
}

TEST(Minimize, MinimumOutsideBoxLandsOnFace) {
    const Bounds b = box2(-1.0, 1.0);
    const Vector target = (Vector(2) << 3.0, 0.25).finished();
    const OptTrace t = minimize({half_norm_squared(target), b, Vector::Zero(2)});
    EXPECT_TRUE(t.converged);
    EXPECT_EQ(t.final_point()(0), 1.0);
    EXPECT_NEAR(t.final_point()(1), 0.25, 1e-6);
    expect_feasible_and_monotone(t, b);
}

TEST(Minimize, TrueRosenbrockFromFarSide) {
    const TestFunction f(TestFunctionKind::Rosenbrock2D);
    const OptTrace t = minimize({[f](const Vector& x) { return f(x); }, f.domain(),
                                 (Vector(2) << -1.5, -1.0).finished()});
    EXPECT_LT((t.final_point() - Vector::Ones(2)).norm(), 1e-3);
    expect_feasible_and_monotone(t, f.domain());
}

TEST(Minimize, InvalidProblemsThrow) {
    const Bounds b = box2(-1.0, 1.0);
    EXPECT_THROW(minimize({half_norm_squared(Vector::Zero(2)), b, Vector::Constant(2, 2.0)}),
                 std::invalid_argument);
    const ScalarFunction nan_at_start = [](const Vector& x) {
        return Evaluation{std::nan(""), Vector::Zero(x.size())};
    };
    EXPECT_THROW(minimize({nan_at_start, b, Vector::Zero(2)}), std::runtime_error);
    const ScalarFunction wrong_dim = [](const Vector&) { return Evaluation{0.0, Vector::Zero(3)}; };
    EXPECT_THROW(minimize({wrong_dim, b, Vector::Zero(2)}), std::invalid_argument);
    EXPECT_THROW(minimize({half_norm_squared(Vector::Zero(2)), box2(1.0, 1.0), Vector::Ones(2)}),
                 std::invalid_argument);
}

TEST(Minimize, MaxIterationsIsReported) {
    const TestFunction f(TestFunctionKind::Rosenbrock2D);
    OptSettings s;
    s.max_iter = 3;
    const OptTrace t = minimize({[f](const Vector& x) { return f(x); }, f.domain(),
                                 (Vector(2) << -1.5, -1.0).finished()},
                                s);
    EXPECT_EQ(t.termination_reason, Termination::MaxIterations);
    EXPECT_FALSE(t.converged);
    EXPECT_EQ(to_string(t.termination_reason), "max_iter");
}

TEST(MinimizeProperty, IteratesFeasibleAndValuesMonotone) {
    // Wavy objectives with many local minima and random boxes/starts.
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Matrix r = oracle::random_matrix(6, 1, seed, 1.0);
        const Bounds b{(Vector(2) << -1.0 + 0.5 * r(0), -2.0).finished(),
                       (Vector(2) << 1.0 + 0.5 * r(1), 0.5 + r(2)).finished()};
        const double k = 3.0 + 2.0 * std::abs(r(3));
        const ScalarFunction wavy = [k](const Vector& x) {
            Evaluation e;
            e.value = std::sin(k * x(0)) * std::cos(k * x(1)) + 0.1 * x.squaredNorm();
            e.gradient = (Vector(2) << k * std::cos(k * x(0)) * std::cos(k * x(1)) + 0.2 * x(0),
                          -k * std::sin(k * x(0)) * std::sin(k * x(1)) + 0.2 * x(1))
                             .finished();
            return e;
        };
        const Vector x0 = project((Vector(2) << r(4), r(5)).finished(), b);
        expect_feasible_and_monotone(minimize({wavy, b, x0}), b);
    }
}

TEST(Project, ClampsAndIsIdempotent) {
    const Bounds b = box2(-1.0, 1.0);
    const Vector x = (Vector(2) << -3.0, 0.5).finished();
    const Vector p = project(x, b);
    EXPECT_EQ(p, (Vector(2) << -1.0, 0.5).finished());
    EXPECT_EQ(project(p, b), p);
}

TEST(Surrogate, LinearModelGradientIsCoefficients) {
    Architecture a = parse_architecture("2,1");
    Parameters p;
    p.W.push_back((Matrix(1, 2) << 3.0, -0.5).finished());
    p.b.push_back(Vector::Constant(1, 1.0));
    NormalizationStats s = NormalizationStats::identity(2, 1);
    s.sigma_x << 2.0, 4.0;
    s.mu_x << 1.0, -1.0;
    const ScalarFunction f = surrogate_objective(Model(a, p, s));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Evaluation e = f(oracle::random_matrix(2, 1, seed, 3.0).col(0));
        EXPECT_NEAR(e.gradient(0), 3.0 / 2.0, 1e-14);
        EXPECT_NEAR(e.gradient(1), -0.5 / 4.0, 1e-14);
    }
}

TEST(Surrogate, GradientMatchesFiniteDifferenceAndIsPure) {
    const Architecture a = parse_architecture("2,8,8,1");
    NormalizationStats s = NormalizationStats::identity(2, 1);
    s.sigma_y(0) = 50.0;
    s.mu_y(0) = 10.0;
    const ScalarFunction f = surrogate_objective(Model(a, oracle::random_parameters(a, 3, 0.8), s));
    const Matrix P = oracle::random_matrix(2, 10, 4, 1.5);
    for (Index t = 0; t < P.cols(); ++t) {
        const Evaluation e = f(P.col(t));
        const Evaluation again = f(P.col(t));
        EXPECT_EQ(e.value, again.value);
        EXPECT_EQ(e.gradient, again.gradient);
        for (Index j = 0; j < 2; ++j) {
            Vector up = P.col(t), down = P.col(t);
            up(j) += 1e-6;
            down(j) -= 1e-6;
            const double fd = (f(up).value - f(down).value) / 2e-6;
            EXPECT_LE(std::abs(e.gradient(j) - fd), 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Surrogate, RequiresSingleOutput) {
    const Architecture a = parse_architecture("2,3,2");
    EXPECT_THROW(surrogate_objective(Model(a, init_parameters(a, 0), NormalizationStats::identity(2, 2))),
                 std::invalid_argument);
}

TEST(Surrogate, OptimizerOnlyCallsWrappedObjective) {
    const Architecture a = parse_architecture("2,4,1");
    const ScalarFunction inner = surrogate_objective(Model(a, init_parameters(a, 2), NormalizationStats::identity(2, 1)));
    std::atomic<int> calls{0};
    const ScalarFunction counted = [&](const Vector& x) {
        ++calls;
        return inner(x);
    };
    const OptTrace t = minimize({counted, box2(-2, 2), Vector::Zero(2)});
    EXPECT_GE(calls.load(), static_cast<int>(t.iterates.size()));
}

TEST(RosenbrockStudy, SmallConfigProducesFourRuns) {
    RosenbrockStudyConfig c;
    c.architecture = parse_architecture("2,6,1");
    c.training.epochs = 30;
    c.polish_epochs = 10;
    c.grid_levels = 3;
    c.lhs_points = 10;
    c.random_starts = 2;
    c.settings.max_iter = 50;
    const RosenbrockStudyReport r = run_rosenbrock_study(c);
    ASSERT_EQ(r.runs.size(), 4u);
    for (const char* name : {"true", "nn", "jenn", "jenn_polished"}) {
        const StudyRun& run = r.run(name);
        EXPECT_TRUE(TestFunction(TestFunctionKind::Rosenbrock2D).domain().contains(run.trace.final_point()));
        EXPECT_GE(run.final_distance, 0.0);
        EXPECT_LE(run.start_dispersion_mean, run.start_dispersion_max);
    }
    EXPECT_EQ(r.random_starts.size(), 2u);
    EXPECT_THROW(r.run("missing"), std::out_of_range);
}
