#include "jenn/propagation.hpp"

#include <string>

namespace jenn {

ActivationValues activation(Activation kind, const Matrix& z) {
    switch (kind) {
        case Activation::Tanh: {
            ActivationValues v;
            v.g = z.array().tanh();
            v.dg = 1.0 - v.g.array().square();
            v.d2g = -2.0 * v.g.array() * v.dg.array();
            return v;
        }
        case Activation::Linear:
            return {z, Matrix::Ones(z.rows(), z.cols()), Matrix::Zero(z.rows(), z.cols())};
    }
    throw std::invalid_argument("activation: unknown kind " +
                                std::to_string(static_cast<int>(kind)));
}

JacobianTensor ForwardCache::output_jacobian() const {
    if (!has_partials) throw std::logic_error("forward cache holds no partials");
    const LayerCache& last = layers.back();
    JacobianTensor J(last.A.rows(), inputs(), examples());
    for (Index j = 0; j < inputs(); ++j) J.slice(j) = last.Aprime[static_cast<std::size_t>(j)];
    return J;
}

namespace {

void check_shapes(const Architecture& arch, const Parameters& params, const Matrix& X) {
    arch.validate();
    if (!params.matches(arch)) {
        throw std::invalid_argument("forward: parameters do not match architecture");
    }
    if (X.rows() != arch.inputs()) {
        throw std::invalid_argument("forward: input has " + std::to_string(X.rows()) +
                                    " rows, network expects " + std::to_string(arch.inputs()));
    }
}

ForwardCache propagate(const Architecture& arch, const Parameters& params, const Matrix& X,
                       bool with_partials) {
    check_shapes(arch, params, X);
    const Index m = X.cols();
    const Index nx = X.rows();

    ForwardCache cache;
    cache.has_partials = with_partials;
    cache.layers.resize(params.layers() + 1);

    LayerCache& input = cache.layers.front();
    input.A = X;
    input.Z = X;
    if (with_partials) {
        input.Aprime.resize(static_cast<std::size_t>(nx));
        for (Index j = 0; j < nx; ++j) {
            Matrix seed = Matrix::Zero(nx, m);
            seed.row(j).setOnes();
            input.Aprime[static_cast<std::size_t>(j)] = std::move(seed);
        }
        input.Zprime = input.Aprime;
    }

    for (std::size_t l = 0; l < params.layers(); ++l) {
        const LayerCache& prev = cache.layers[l];
        LayerCache& cur = cache.layers[l + 1];
        const Matrix& W = params.W[l];

        cur.Z = (W * prev.A).colwise() + params.b[l];
        ActivationValues act = activation(arch.activation_of(l), cur.Z);
        cur.A = std::move(act.g);

        if (with_partials) {
            // z'_j = W a'_j (no bias), a'_j = g'(z) * z'_j
            cur.Zprime.resize(static_cast<std::size_t>(nx));
            cur.Aprime.resize(static_cast<std::size_t>(nx));
            for (std::size_t j = 0; j < static_cast<std::size_t>(nx); ++j) {
                cur.Zprime[j] = W * prev.Aprime[j];
                cur.Aprime[j] = act.dg.cwiseProduct(cur.Zprime[j]);
            }
        }
    }
    return cache;
}

}  // namespace

ForwardCache forward(const Architecture& arch, const Parameters& params, const Matrix& X) {
    return propagate(arch, params, X, false);
}

ForwardCache forward_with_partials(const Architecture& arch, const Parameters& params,
                                   const Matrix& X) {
    return propagate(arch, params, X, true);
}

RawPrediction predict(const Model& model, const Matrix& X_raw) {
    if (X_raw.rows() != model.architecture().inputs()) {
        throw std::invalid_argument("predict: input has " + std::to_string(X_raw.rows()) +
                                    " rows, model expects " +
                                    std::to_string(model.architecture().inputs()));
    }
    const Matrix X = normalize_inputs(X_raw, model.normalization());
    const ForwardCache cache = forward_with_partials(model.architecture(), model.parameters(), X);
    return denormalize_prediction(cache.output(), cache.output_jacobian(), model.normalization());
}

}  // namespace jenn
