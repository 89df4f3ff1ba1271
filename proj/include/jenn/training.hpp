#pragma once

#include <stdexcept>
#include <vector>

#include "jenn/core.hpp"
#include "jenn/propagation.hpp"

namespace jenn {

/// dJ/dW and dJ/db for every weight layer; shapes mirror Parameters.
struct Gradients {
    std::vector<Matrix> dW;
    std::vector<Vector> db;

    static Gradients zeros_like(const Parameters& params);
};

/// Mean Jacobian-augmented loss over the examples in `data` (already normalized).
///
/// Per example: 1/2 sum_k beta_k (a_k - y_k)^2 + 1/2 sum_k sum_j gamma_kj (a'_kj - y'_kj)^2.
/// Partial columns whose gamma slice is identically zero are skipped entirely, so the
/// result does not depend on the Jacobian values stored there.
double loss(const ForwardCache& cache, const Dataset& data);

/// loss + lambda/(2m) * sum of squared weights.
double cost(const Parameters& params, const ForwardCache& cache, const Dataset& data,
            double lambda);

/// Convenience: forward pass (with partials when any gamma is nonzero) followed by cost().
double evaluate_cost(const Architecture& arch, const Parameters& params, const Dataset& data,
                     double lambda);

/// Backprop of the augmented cost. `cache` must come from forward_with_partials.
Gradients backward(const Architecture& arch, const Parameters& params, const ForwardCache& cache,
                   const Dataset& data, double lambda);

/// Worst relative discrepancy between backward() and central differences of the cost
/// over every parameter. Relative error uses max(|analytic|, |numeric|, 1) as scale.
double gradient_check(const Architecture& arch, const Parameters& params, const Dataset& data,
                      double lambda, double h);

/// Moment estimates for ADAM; unused by plain gradient descent.
struct OptimizerState {
    Gradients first;
    Gradients second;
    long long step = 0;
};

void update_parameters(Parameters& params, const Gradients& grads, OptimizerState& state,
                       const TrainingConfig& config);

struct TrainingReport {
    std::vector<double> cost_history;  // full-data cost after each epoch
    double final_cost = 0.0;
    Index epochs_run = 0;
};

struct TrainingResult {
    Model model;
    TrainingReport report;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(Index epoch, double value);
    Index epoch() const noexcept { return epoch_; }

private:
    Index epoch_;
};

/// Fits a network to `data`. With `warm_start`, training resumes from its parameters and
/// reuses its normalization instead of initializing from the seed.
TrainingResult train(const Dataset& data, const Architecture& arch, const TrainingConfig& config,
                     const Model* warm_start = nullptr);

struct PolishConfig {
    double eta = 1000.0;
    double epsilon = 0.1;

    void validate() const;
};

/// gamma = 1 + eta * exp(-(epsilon * dy/dx)^2), elementwise. Emphasizes flat regions.
JacobianTensor polish_weights(const JacobianTensor& J_raw, const PolishConfig& polish);

}  // namespace jenn
