#include <gtest/gtest.h>

#include <cmath>

#include "jenn/benchmarks.hpp"
#include "jenn/training.hpp"
#include "oracles.hpp"

using namespace jenn;

namespace {

// 1-1 linear network a = w x + b.
Architecture linear_1_1() { return parse_architecture("1,1"); }

Parameters linear_params(double w, double b) {
    Parameters p;
    p.W.push_back(Matrix::Constant(1, 1, w));
    p.b.push_back(Vector::Constant(1, b));
    return p;
}

void expect_same(const Gradients& a, const Gradients& b) {
    ASSERT_EQ(a.dW.size(), b.dW.size());
    for (std::size_t l = 0; l < a.dW.size(); ++l) {
        EXPECT_EQ(a.dW[l], b.dW[l]);
        EXPECT_EQ(a.db[l], b.db[l]);
    }
}

void expect_same(const Parameters& a, const Parameters& b) {
    ASSERT_EQ(a.layers(), b.layers());
    for (std::size_t l = 0; l < a.layers(); ++l) {
        EXPECT_EQ(a.W[l], b.W[l]);
        EXPECT_EQ(a.b[l], b.b[l]);
    }
}

}  // namespace

TEST(Loss, HandComputedExample) {
    // value error 2, partial error 3: 1/2 * 4 + 1/2 * 9
    const Dataset d =
        make_dataset(Matrix::Zero(1, 1), Matrix::Zero(1, 1), JacobianTensor(1, 1, 1, 0.0));
    const Parameters p = linear_params(3.0, 2.0);
    const ForwardCache c = forward_with_partials(linear_1_1(), p, d.X);
    EXPECT_DOUBLE_EQ(loss(c, d), 6.5);
}

TEST(Loss, PerfectPredictionIsZero) {
    const Architecture a = parse_architecture("2,4,1");
    const Parameters p = oracle::random_parameters(a, 1, 1.0);
    const Matrix X = oracle::random_matrix(2, 5, 2);
    const ForwardCache c = forward_with_partials(a, p, X);
    const Dataset d = make_dataset(X, c.output(), c.output_jacobian());
    EXPECT_EQ(loss(c, d), 0.0);
}

TEST(Loss, ZeroGammaIsWeightedHalfMse) {
    const Architecture a = parse_architecture("2,3,2");
    const Parameters p = oracle::random_parameters(a, 3, 1.0);
    Dataset d = oracle::random_dataset(2, 2, 6, 4);
    for (Index j = 0; j < 2; ++j) d.gamma.slice(j).setZero();
    d.beta = oracle::random_matrix(2, 6, 5).cwiseAbs();
    const ForwardCache c = forward_with_partials(a, p, d.X);
    double ref = 0.0;
    for (Index t = 0; t < 6; ++t) {
        for (Index k = 0; k < 2; ++k) ref += 0.5 * d.beta(k, t) * std::pow(c.output()(k, t) - d.Y(k, t), 2);
    }
    EXPECT_NEAR(loss(c, d), ref / 6.0, 1e-14);
}

TEST(Loss, NonzeroGammaWithoutPartialsThrows) {
    Dataset d = make_dataset(Matrix::Zero(1, 2), Matrix::Zero(1, 2));
    d.gamma = JacobianTensor(1, 1, 2, 1.0);
    const ForwardCache c = forward_with_partials(linear_1_1(), linear_params(1, 0), d.X);
    EXPECT_THROW(loss(c, d), std::invalid_argument);

    const Dataset e = oracle::random_dataset(1, 1, 2, 0);
    EXPECT_THROW(loss(forward(linear_1_1(), linear_params(1, 0), e.X), e), std::invalid_argument);
}

TEST(Cost, RegularizationTerm) {
    const Dataset d = make_dataset(Matrix::Zero(1, 1), Matrix::Zero(1, 1));
    const Parameters p = linear_params(2.0, 0.0);
    const ForwardCache c = forward(linear_1_1(), p, d.X);
    EXPECT_EQ(cost(p, c, d, 0.0), loss(c, d));
    EXPECT_DOUBLE_EQ(cost(p, c, d, 1.0), 2.0);
}

TEST(Cost, MonotoneInLambda) {
    const Architecture a = parse_architecture("2,5,1");
    const Parameters p = oracle::random_parameters(a, 2, 1.0);
    const Dataset d = oracle::random_dataset(2, 1, 8, 3);
    const ForwardCache c = forward_with_partials(a, p, d.X);
    double prev = cost(p, c, d, 0.0);
    for (double lambda : {0.01, 0.1, 0.5, 1.0, 10.0}) {
        const double cur = cost(p, c, d, lambda);
        EXPECT_GE(cur, prev);
        prev = cur;
    }
}

TEST(Backward, ZeroWeightsGiveZeroGradients) {
    const Architecture a = parse_architecture("2,4,2");
    Dataset d = oracle::random_dataset(2, 2, 5, 1);
    d.beta.setZero();
    for (Index j = 0; j < 2; ++j) d.gamma.slice(j).setZero();
    const Parameters p = oracle::random_parameters(a, 2, 1.0);
    const Gradients g = backward(a, p, forward_with_partials(a, p, d.X), d, 0.0);
    for (std::size_t l = 0; l < g.dW.size(); ++l) {
        EXPECT_TRUE((g.dW[l].array() == 0.0).all());
        EXPECT_TRUE((g.db[l].array() == 0.0).all());
    }
}

TEST(Backward, LinearLayerLeastSquares) {
    Architecture a = parse_architecture("3,2");
    const Parameters p = oracle::random_parameters(a, 6, 1.0);
    const Matrix X = oracle::random_matrix(3, 7, 1);
    const Matrix Y = oracle::random_matrix(2, 7, 2);
    const Dataset d = make_dataset(X, Y);
    const ForwardCache c = forward_with_partials(a, p, X);
    const Gradients g = backward(a, p, c, d, 0.0);
    for (Index s = 0; s < 2; ++s) {
        double db = 0.0;
        for (Index t = 0; t < 7; ++t) db += c.output()(s, t) - Y(s, t);
        EXPECT_NEAR(g.db[0](s), db / 7.0, 1e-14);
        for (Index r = 0; r < 3; ++r) {
            double ref = 0.0;
            for (Index t = 0; t < 7; ++t) ref += (c.output()(s, t) - Y(s, t)) * X(r, t);
            EXPECT_NEAR(g.dW[0](s, r), ref / 7.0, 1e-14);
        }
    }
}

TEST(Backward, MatchesFiniteDifferencesOn2_8_8_2) {
    const Architecture a = parse_architecture("2,8,8,2");
    const Parameters p = oracle::random_parameters(a, 12, 0.8);
    const Dataset d = oracle::random_dataset(2, 2, 6, 13);
    EXPECT_LT(gradient_check(a, p, d, 0.1, 1e-6), 1e-6);
}

TEST(Backward, RegularizationOnlyGradient) {
    const Architecture a = parse_architecture("2,5,3,1");
    Dataset d = oracle::random_dataset(2, 1, 4, 3);
    d.beta.setZero();
    for (Index j = 0; j < 2; ++j) d.gamma.slice(j).setZero();
    const Parameters p = oracle::random_parameters(a, 8, 1.0);
    const double lambda = 0.3;
    const Gradients g = backward(a, p, forward_with_partials(a, p, d.X), d, lambda);
    for (std::size_t l = 0; l < p.layers(); ++l) {
        EXPECT_EQ(g.dW[l], ((lambda / 4.0) * p.W[l]).eval());
        EXPECT_TRUE((g.db[l].array() == 0.0).all());
    }
}

TEST(Backward, NonFiniteIntermediateNamesLayer) {
    const Architecture a = parse_architecture("1,2,1");
    Parameters p = oracle::random_parameters(a, 1, 1.0);
    const Dataset d = oracle::random_dataset(1, 1, 2, 0);
    ForwardCache c = forward_with_partials(a, p, d.X);
    c.layers[2].A(0, 0) = INFINITY;
    try {
        backward(a, p, c, d, 0.0);
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos);
    }
}

TEST(GradientCheck, LinearNetworkIsExact) {
    const Dataset d = make_dataset(oracle::random_matrix(1, 5, 1), oracle::random_matrix(1, 5, 2),
                                   oracle::random_tensor(1, 1, 5, 3));
    EXPECT_LT(gradient_check(linear_1_1(), linear_params(0.7, -0.2), d, 0.0, 1e-4), 1e-9);
}

TEST(GradientCheck, TanhNetworkWithPartials) {
    const Architecture a = parse_architecture("2,16,16,1");
    const Dataset d = oracle::random_dataset(2, 1, 10, 4);
    EXPECT_LT(gradient_check(a, init_parameters(a, 5), d, 0.0, 1e-6), 1e-6);
}

TEST(GradientCheck, ErrorShrinksQuadraticallyWithStep) {
    const Architecture a = parse_architecture("2,6,1");
    const Parameters p = oracle::random_parameters(a, 3, 1.5);
    Dataset d = oracle::random_dataset(2, 1, 5, 6);
    d.Y *= 10.0;
    const double e1 = gradient_check(a, p, d, 0.0, 1e-2);
    const double e2 = gradient_check(a, p, d, 0.0, 1e-3);
    // Truncation error dominates here: a 10x smaller step should cut it by about 100x.
    EXPECT_GT(e1 / e2, 30.0);
    EXPECT_LT(e1 / e2, 300.0);
    EXPECT_THROW(gradient_check(a, p, d, 0.0, 0.0), std::invalid_argument);
}

TEST(GradientProperty, BackwardMatchesFiniteDifferencesAcrossConfigurations) {
    const char* archs[] = {"1,4,1", "2,8,8,2", "3,16,16,16,1"};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Architecture a = parse_architecture(archs[seed % 3]);
        Dataset d = oracle::random_dataset(a.inputs(), a.outputs(), 4, seed * 3 + 1);
        if (seed % 2 == 0) {
            d = make_dataset(d.X, d.Y);
        }
        const double lambda = (seed / 2) % 2 == 0 ? 0.0 : 0.1;
        const Parameters p = oracle::random_parameters(a, seed, 0.6);
        EXPECT_LT(gradient_check(a, p, d, lambda, 1e-6), 1e-6)
            << "seed " << seed << " arch " << archs[seed % 3];
    }
}

TEST(GammaProperty, ZeroGammaIgnoresJacobianContents) {
    const Architecture a = parse_architecture("2,6,6,1");
    Dataset d1 = oracle::random_dataset(2, 1, 9, 1);
    for (Index j = 0; j < 2; ++j) d1.gamma.slice(j).setZero();
    Dataset d2 = d1;
    d2.jacobian = oracle::random_tensor(1, 2, 9, 999, 1e6);
    Dataset d3 = make_dataset(d1.X, d1.Y);

    const Parameters p = oracle::random_parameters(a, 2, 1.0);
    const ForwardCache c = forward_with_partials(a, p, d1.X);
    EXPECT_EQ(loss(c, d1), loss(c, d2));
    EXPECT_EQ(loss(c, d1), loss(c, d3));
    expect_same(backward(a, p, c, d1, 0.1), backward(a, p, c, d2, 0.1));
    expect_same(backward(a, p, c, d1, 0.1), backward(a, p, c, d3, 0.1));

    TrainingConfig cfg;
    cfg.epochs = 50;
    const TrainingResult r1 = train(d1, a, cfg);
    const TrainingResult r2 = train(d2, a, cfg);
    const TrainingResult r3 = train(d3, a, cfg);
    expect_same(r1.model.parameters(), r2.model.parameters());
    expect_same(r1.model.parameters(), r3.model.parameters());
    EXPECT_EQ(r1.report.cost_history, r2.report.cost_history);
}

TEST(GammaProperty, ScalingWeightsScalesLossAndGradients) {
    const Architecture a = parse_architecture("2,5,2");
    const Parameters p = oracle::random_parameters(a, 4, 1.0);
    const Dataset d = oracle::random_dataset(2, 2, 7, 8);
    const ForwardCache c = forward_with_partials(a, p, d.X);
    const double base = loss(c, d);
    const Gradients g = backward(a, p, c, d, 0.0);
    for (double scale : {0.5, 2.0, 4.0, 3.0, 0.1}) {
        Dataset s = d;
        s.beta *= scale;
        for (Index j = 0; j < 2; ++j) s.gamma.slice(j) *= scale;
        const bool exact = scale == 0.5 || scale == 2.0 || scale == 4.0;
        const double l = loss(c, s);
        const Gradients gs = backward(a, p, c, s, 0.0);
        if (exact) {
            EXPECT_EQ(l, scale * base);
        } else {
            EXPECT_NEAR(l, scale * base, 1e-14 * std::abs(scale * base));
        }
        for (std::size_t k = 0; k < g.dW.size(); ++k) {
            for (Index i = 0; i < g.dW[k].size(); ++i) {
                const double ref = scale * g.dW[k].data()[i];
                if (exact) {
                    EXPECT_EQ(gs.dW[k].data()[i], ref);
                } else {
                    EXPECT_NEAR(gs.dW[k].data()[i], ref, 1e-13 * std::max(1.0, std::abs(ref)));
                }
            }
        }
    }
}

TEST(GammaProperty, MaskMatchesDatasetWithMissingColumns) {
    // Gamma mask zeroing inputs 1 and 3 vs. a dataset whose partials for those inputs are absent.
    const Index m = 30;
    const Dataset full = oracle::random_dataset(4, 1, m, 21);

    Dataset missing = full;
    for (Index j : {1, 3}) {
        missing.jacobian->slice(j).setZero();
        missing.gamma.slice(j).setZero();
    }

    TrainingConfig masked_cfg;
    masked_cfg.epochs = 100;
    JacobianTensor mask(1, 4, m, 1.0);
    mask.slice(1).setZero();
    mask.slice(3).setZero();
    masked_cfg.gamma_weights = mask;

    TrainingConfig plain_cfg;
    plain_cfg.epochs = 100;

    const Architecture a = parse_architecture("4,8,1");
    const TrainingResult masked = train(full, a, masked_cfg);
    const TrainingResult reference = train(missing, a, plain_cfg);
    expect_same(masked.model.parameters(), reference.model.parameters());
    EXPECT_EQ(masked.report.cost_history, reference.report.cost_history);
}

TEST(Update, GradientDescentStep) {
    Parameters p = linear_params(1.0, 1.0);
    Gradients g = Gradients::zeros_like(p);
    g.dW[0](0, 0) = 2.0;
    TrainingConfig cfg;
    cfg.optimizer = OptimizerKind::GradientDescent;
    cfg.alpha = 0.1;
    OptimizerState state;
    update_parameters(p, g, state, cfg);
    EXPECT_DOUBLE_EQ(p.W[0](0, 0), 0.8);
    EXPECT_EQ(p.b[0](0), 1.0);
}

TEST(Update, ZeroGradientLeavesParameters) {
    for (auto kind : {OptimizerKind::GradientDescent, OptimizerKind::Adam}) {
        const Architecture a = parse_architecture("2,3,1");
        Parameters p = oracle::random_parameters(a, 1, 1.0);
        const Parameters before = p;
        TrainingConfig cfg;
        cfg.optimizer = kind;
        OptimizerState state;
        for (int i = 0; i < 3; ++i) update_parameters(p, Gradients::zeros_like(p), state, cfg);
        expect_same(p, before);
    }
}

TEST(Update, AdamFirstStepHasMagnitudeAlpha) {
    for (double grad : {1e-4, 0.3, 250.0, -7.0}) {
        Parameters p = linear_params(0.0, 0.0);
        Gradients g = Gradients::zeros_like(p);
        g.dW[0](0, 0) = grad;
        TrainingConfig cfg;
        cfg.alpha = 0.01;
        OptimizerState state;
        update_parameters(p, g, state, cfg);
        // m_hat = g, v_hat = g^2 after bias correction: step = alpha * g / (|g| + eps).
        const double expected = -cfg.alpha * grad / (std::abs(grad) + cfg.adam_eps);
        EXPECT_NEAR(p.W[0](0, 0), expected, 1e-15);
        EXPECT_NEAR(std::abs(p.W[0](0, 0)), cfg.alpha, cfg.alpha * cfg.adam_eps / std::abs(grad) * 1.01);
        EXPECT_EQ(state.step, 1);
    }
}

TEST(Update, ShapeMismatchThrows) {
    Parameters p = oracle::random_parameters(parse_architecture("2,3,1"), 0, 1.0);
    const Gradients g = Gradients::zeros_like(oracle::random_parameters(parse_architecture("2,4,1"), 0, 1.0));
    OptimizerState state;
    EXPECT_THROW(update_parameters(p, g, state, TrainingConfig{}), std::invalid_argument);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
    const Architecture a = parse_architecture("2,4,1");
    const Dataset d = oracle::random_dataset(2, 1, 5, 0);
    TrainingConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 17;
    const TrainingResult r = train(d, a, cfg);
    EXPECT_TRUE(r.report.cost_history.empty());
    EXPECT_EQ(r.report.epochs_run, 0);
    expect_same(r.model.parameters(), init_parameters(a, 17));
}

TEST(Train, CostDecreasesOnBenchmarkFunctions) {
    for (auto kind : {TestFunctionKind::Sin, TestFunctionKind::XSinX,
                      TestFunctionKind::Rastrigin2D, TestFunctionKind::Rosenbrock2D}) {
        const TestFunction f(kind);
        const Dataset d = sample_dataset(f, lhs_sample(20, f.domain(), 3));
        Architecture a = parse_architecture(f.inputs() == 1 ? "1,8,8,1" : "2,8,8,1");
        TrainingConfig cfg;
        cfg.epochs = 200;
        const TrainingResult r = train(d, a, cfg);
        ASSERT_EQ(r.report.cost_history.size(), 200u);
        EXPECT_LE(r.report.cost_history.back(), r.report.cost_history.front()) << f.name();
        EXPECT_EQ(r.report.final_cost, r.report.cost_history.back());
        for (double c : r.report.cost_history) EXPECT_TRUE(std::isfinite(c));
    }
}

TEST(Train, DeterministicGivenSeed) {
    const Architecture a = parse_architecture("2,6,1");
    const Dataset d = oracle::random_dataset(2, 1, 12, 4);
    TrainingConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 5;
    cfg.seed = 9;
    const TrainingResult r1 = train(d, a, cfg);
    const TrainingResult r2 = train(d, a, cfg);
    expect_same(r1.model.parameters(), r2.model.parameters());
    EXPECT_EQ(r1.report.cost_history, r2.report.cost_history);
    cfg.seed = 10;
    EXPECT_NE(train(d, a, cfg).model.parameters().W[0], r1.model.parameters().W[0]);
}

TEST(Train, DivergenceReportsEpoch) {
    const Architecture a = parse_architecture("1,1");
    Dataset d = make_dataset(Matrix::Constant(1, 2, 1.0), Matrix::Constant(1, 2, 1.0));
    d.X(0, 1) = 3.0;
    d.Y(0, 1) = 1e3;
    TrainingConfig cfg;
    cfg.optimizer = OptimizerKind::GradientDescent;
    cfg.alpha = 1e3;
    cfg.epochs = 5000;
    try {
        train(d, a, cfg);
        FAIL() << "expected divergence";
    } catch (const TrainingDiverged& e) {
        EXPECT_GT(e.epoch(), 0);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(Train, RejectsMismatchedArchitecture) {
    const Dataset d = oracle::random_dataset(2, 1, 5, 0);
    EXPECT_THROW(train(d, parse_architecture("3,4,1"), TrainingConfig{}), std::invalid_argument);
}

TEST(Train, WarmStartKeepsNormalizationAndParameters) {
    const Architecture a = parse_architecture("2,4,1");
    const Dataset d = oracle::random_dataset(2, 1, 8, 5);
    TrainingConfig cfg;
    cfg.epochs = 20;
    const TrainingResult first = train(d, a, cfg);

    Dataset shifted = d;
    shifted.X.array() += 5.0;
    TrainingConfig none = cfg;
    none.epochs = 0;
    const TrainingResult resumed = train(shifted, a, none, &first.model);
    expect_same(resumed.model.parameters(), first.model.parameters());
    EXPECT_EQ(resumed.model.normalization().mu_x, first.model.normalization().mu_x);
    EXPECT_THROW(train(d, parse_architecture("2,5,1"), cfg, &first.model), std::invalid_argument);
}

TEST(Polish, KnownValues) {
    JacobianTensor J(1, 1, 3);
    J(0, 0, 0) = 0.0;
    J(0, 0, 1) = 10.0;
    J(0, 0, 2) = -10.0;
    const JacobianTensor g = polish_weights(J, PolishConfig{});
    EXPECT_EQ(g(0, 0, 0), 1001.0);
    EXPECT_NEAR(g(0, 0, 1), 368.87944117144235, 1e-10);
    EXPECT_DOUBLE_EQ(g(0, 0, 1), g(0, 0, 2));
    EXPECT_NEAR(g(0, 0, 1), 1.0 + 1000.0 * std::exp(-1.0), 1e-12);

    const JacobianTensor off = polish_weights(J, PolishConfig{0.0, 0.1});
    for (Index t = 0; t < 3; ++t) EXPECT_EQ(off(0, 0, t), 1.0);
    EXPECT_THROW(polish_weights(J, PolishConfig{-1.0, 0.1}), std::invalid_argument);
    EXPECT_THROW(polish_weights(J, PolishConfig{1.0, 0.0}), std::invalid_argument);
}

TEST(PolishProperty, WeightsStayInRange) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const JacobianTensor J = oracle::random_tensor(2, 3, 40, seed, 100.0);
        const double eta = 10.0 * static_cast<double>(seed + 1);
        const JacobianTensor g = polish_weights(J, PolishConfig{eta, 0.05});
        for (Index j = 0; j < 3; ++j) {
            EXPECT_TRUE((g.slice(j).array() >= 1.0).all());
            EXPECT_TRUE((g.slice(j).array() <= 1.0 + eta).all());
        }
    }
}
