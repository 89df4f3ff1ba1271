#include "jenn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace jenn {

Gradients Gradients::zeros_like(const Parameters& params) {
    Gradients g;
    for (std::size_t l = 0; l < params.layers(); ++l) {
        g.dW.push_back(Matrix::Zero(params.W[l].rows(), params.W[l].cols()));
        g.db.push_back(Vector::Zero(params.b[l].size()));
    }
    return g;
}

namespace {

// Input columns j whose Jacobian term contributes to the loss.
std::vector<Index> active_partials(const Dataset& data) {
    std::vector<Index> active;
    for (Index j = 0; j < data.gamma.inputs(); ++j) {
        if (!data.gamma.slice_is_zero(j)) active.push_back(j);
    }
    return active;
}

void check_cache(const ForwardCache& cache, const Dataset& data,
                 const std::vector<Index>& active) {
    if (cache.layers.empty() || cache.examples() != data.examples() ||
        cache.output().rows() != data.outputs() || cache.inputs() != data.inputs()) {
        throw std::invalid_argument("loss: forward cache does not match dataset shape");
    }
    if (active.empty()) return;
    if (!data.jacobian) {
        throw std::invalid_argument("loss: nonzero gamma but the dataset has no Jacobian");
    }
    if (!cache.has_partials) {
        throw std::invalid_argument("loss: nonzero gamma requires a forward pass with partials");
    }
}

}  // namespace

double loss(const ForwardCache& cache, const Dataset& data) {
    const auto active = active_partials(data);
    check_cache(cache, data, active);
    const double m = static_cast<double>(data.examples());

    double total = 0.5 * (data.beta.array() * (cache.output() - data.Y).array().square()).sum();
    const LayerCache& last = cache.layers.back();
    for (Index j : active) {
        const auto ju = static_cast<std::size_t>(j);
        total += 0.5 * (data.gamma.slice(j).array() *
                        (last.Aprime[ju] - data.jacobian->slice(j)).array().square())
                           .sum();
    }
    return total / m;
}

double cost(const Parameters& params, const ForwardCache& cache, const Dataset& data,
            double lambda) {
    double penalty = 0.0;
    if (lambda != 0.0) {
        for (const auto& W : params.W) penalty += W.squaredNorm();
        penalty *= lambda / (2.0 * static_cast<double>(data.examples()));
    }
    return loss(cache, data) + penalty;
}

double evaluate_cost(const Architecture& arch, const Parameters& params, const Dataset& data,
                     double lambda) {
    const bool partials = !active_partials(data).empty();
    const ForwardCache cache = partials ? forward_with_partials(arch, params, data.X)
                                        : forward(arch, params, data.X);
    return cost(params, cache, data, lambda);
}

Gradients backward(const Architecture& arch, const Parameters& params, const ForwardCache& cache,
                   const Dataset& data, double lambda) {
    const auto active = active_partials(data);
    check_cache(cache, data, active);
    if (cache.layers.size() != params.layers() + 1) {
        throw std::invalid_argument("backward: cache depth does not match parameters");
    }
    const double m = static_cast<double>(data.examples());
    const std::size_t nx = static_cast<std::size_t>(data.inputs());

    // Output-layer seeds: dL/da = beta (a - y), dL/da'_j = gamma_j (a'_j - y'_j).
    Matrix dA = data.beta.cwiseProduct(cache.output() - data.Y);
    std::vector<Matrix> dAp(nx);
    for (Index j : active) {
        const auto ju = static_cast<std::size_t>(j);
        dAp[ju] = data.gamma.slice(j).cwiseProduct(cache.layers.back().Aprime[ju] -
                                                   data.jacobian->slice(j));
    }

    Gradients grads;
    grads.dW.resize(params.layers());
    grads.db.resize(params.layers());

    for (std::size_t l = params.layers(); l-- > 0;) {
        const LayerCache& cur = cache.layers[l + 1];
        const LayerCache& prev = cache.layers[l];
        const Matrix& W = params.W[l];
        const ActivationValues act = activation(arch.activation_of(l), cur.Z);

        // dL/dz, including the second-derivative terms contributed by the partials.
        Matrix dZ = dA.cwiseProduct(act.dg);
        std::vector<Matrix> dZp(nx);  // dL/dz'_j = dL/da'_j * g'(z)
        for (Index j : active) {
            const auto ju = static_cast<std::size_t>(j);
            dZ.array() += dAp[ju].array() * act.d2g.array() * cur.Zprime[ju].array();
            dZp[ju] = dAp[ju].cwiseProduct(act.dg);
        }
        if (!dZ.allFinite()) {
            throw std::runtime_error("backward: non-finite derivative at layer " +
                                     std::to_string(l + 1));
        }

        Matrix dW = dZ * prev.A.transpose();
        for (Index j : active) {
            const auto ju = static_cast<std::size_t>(j);
            dW.noalias() += dZp[ju] * prev.Aprime[ju].transpose();
        }
        grads.dW[l] = dW / m + (lambda / m) * W;
        grads.db[l] = dZ.rowwise().sum() / m;

        if (l > 0) {
            dA = W.transpose() * dZ;
            for (Index j : active) {
                const auto ju = static_cast<std::size_t>(j);
                dAp[ju] = W.transpose() * dZp[ju];
            }
        }
    }
    return grads;
}

double gradient_check(const Architecture& arch, const Parameters& params, const Dataset& data,
                      double lambda, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("gradient_check: step must be > 0");
    const ForwardCache cache = forward_with_partials(arch, params, data.X);
    const Gradients grads = backward(arch, params, cache, data, lambda);

    Parameters probe = params;
    double worst = 0.0;
    auto compare = [&](double analytic, double& entry) {
        const double saved = entry;
        entry = saved + h;
        const double up = evaluate_cost(arch, probe, data, lambda);
        entry = saved - h;
        const double down = evaluate_cost(arch, probe, data, lambda);
        entry = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1.0});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    for (std::size_t l = 0; l < probe.layers(); ++l) {
        for (Index c = 0; c < probe.W[l].cols(); ++c) {
            for (Index r = 0; r < probe.W[l].rows(); ++r) compare(grads.dW[l](r, c), probe.W[l](r, c));
        }
        for (Index r = 0; r < probe.b[l].size(); ++r) compare(grads.db[l](r), probe.b[l](r));
    }
    return worst;
}

void update_parameters(Parameters& params, const Gradients& grads, OptimizerState& state,
                       const TrainingConfig& config) {
    if (grads.dW.size() != params.layers() || grads.db.size() != params.layers()) {
        throw std::invalid_argument("update: gradient layer count does not match parameters");
    }
    for (std::size_t l = 0; l < params.layers(); ++l) {
        if (grads.dW[l].rows() != params.W[l].rows() || grads.dW[l].cols() != params.W[l].cols() ||
            grads.db[l].size() != params.b[l].size()) {
            throw std::invalid_argument("update: gradient shape mismatch at layer " +
                                        std::to_string(l + 1));
        }
    }

    if (config.optimizer == OptimizerKind::GradientDescent) {
        for (std::size_t l = 0; l < params.layers(); ++l) {
            params.W[l] -= config.alpha * grads.dW[l];
            params.b[l] -= config.alpha * grads.db[l];
        }
        return;
    }

    if (state.first.dW.size() != params.layers()) {
        state.first = Gradients::zeros_like(params);
        state.second = Gradients::zeros_like(params);
        state.step = 0;
    }
    ++state.step;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double eps = config.adam_eps;
    const double alpha = config.alpha;

    auto step = [&](auto& theta, const auto& g, auto& mom1, auto& mom2) {
        mom1 = b1 * mom1 + (1.0 - b1) * g;
        mom2 = b2 * mom2 + (1.0 - b2) * g.cwiseProduct(g);
        theta.array() -= alpha * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < params.layers(); ++l) {
        step(params.W[l], grads.dW[l], state.first.dW[l], state.second.dW[l]);
        step(params.b[l], grads.db[l], state.first.db[l], state.second.db[l]);
    }
}

TrainingDiverged::TrainingDiverged(Index epoch, double value)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + " (cost " +
                         std::to_string(value) + ")"),
      epoch_(epoch) {}

TrainingResult train(const Dataset& data, const Architecture& arch, const TrainingConfig& config,
                     const Model* warm_start) {
    config.validate();
    data.validate();
    arch.validate();
    if (arch.inputs() != data.inputs() || arch.outputs() != data.outputs()) {
        throw std::invalid_argument("train: architecture endpoints do not match dataset dims");
    }

    NormalizationStats stats;
    Parameters params;
    if (warm_start) {
        if (warm_start->architecture().layer_sizes != arch.layer_sizes) {
            throw std::invalid_argument("train: warm-start model has a different architecture");
        }
        stats = warm_start->normalization();
        params = warm_start->parameters();
    } else {
        stats = compute_normalization(data);
        params = init_parameters(arch, config.seed);
    }

    Dataset norm = normalize_dataset(data, stats);
    if (config.gamma_weights && !config.gamma_weights->same_shape(norm.gamma)) {
        throw std::invalid_argument("train: gamma weights shape does not match the Jacobian");
    }
    for (Index j = 0; j < norm.inputs(); ++j) {
        norm.gamma.slice(j) *= config.gamma_scale;
        if (config.gamma_weights) {
            norm.gamma.slice(j) = norm.gamma.slice(j).cwiseProduct(config.gamma_weights->slice(j));
        }
    }
    norm.validate();
    const bool partials = !active_partials(norm).empty();
    auto run_forward = [&](const Dataset& d) {
        return partials ? forward_with_partials(arch, params, d.X) : forward(arch, params, d.X);
    };

    const Index m = norm.examples();
    const bool full_batch = !config.batch_size || *config.batch_size >= m;
    OptimizerState state;
    std::mt19937_64 rng(config.seed);
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});

    TrainingReport report;
    ForwardCache cache = run_forward(norm);
    double current = cost(params, cache, norm, config.lambda);
    if (!std::isfinite(current)) throw TrainingDiverged(0, current);

    for (Index epoch = 0; epoch < config.epochs; ++epoch) {
        if (full_batch) {
            update_parameters(params, backward(arch, params, cache, norm, config.lambda), state,
                              config);
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            for (Index start = 0; start < m; start += *config.batch_size) {
                const Index stop = std::min(m, start + *config.batch_size);
                const std::vector<Index> idx(order.begin() + start, order.begin() + stop);
                const Dataset batch = norm.columns(idx);
                const ForwardCache batch_cache = run_forward(batch);
                update_parameters(params, backward(arch, params, batch_cache, batch, config.lambda),
                                  state, config);
            }
        }
        cache = run_forward(norm);
        current = cost(params, cache, norm, config.lambda);
        if (!std::isfinite(current) || !params.all_finite()) throw TrainingDiverged(epoch + 1, current);
        report.cost_history.push_back(current);
    }
    report.final_cost = current;
    report.epochs_run = config.epochs;
    return {Model(arch, std::move(params), std::move(stats)), std::move(report)};
}

void PolishConfig::validate() const {
    if (!(eta >= 0.0)) throw std::invalid_argument("polish: eta must be >= 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("polish: epsilon must be > 0");
}

JacobianTensor polish_weights(const JacobianTensor& J_raw, const PolishConfig& polish) {
    polish.validate();
    JacobianTensor gamma(J_raw.outputs(), J_raw.inputs(), J_raw.examples());
    for (Index j = 0; j < J_raw.inputs(); ++j) {
        gamma.slice(j) =
            1.0 + polish.eta * (-(polish.epsilon * J_raw.slice(j).array()).square()).exp();
    }
    return gamma;
}

}  // namespace jenn
