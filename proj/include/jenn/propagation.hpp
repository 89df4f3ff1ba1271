#pragma once

#include <vector>

#include "jenn/core.hpp"

namespace jenn {

/// Activation value and its first two derivatives, elementwise over z.
struct ActivationValues {
    Matrix g;
    Matrix dg;
    Matrix d2g;
};

ActivationValues activation(Activation kind, const Matrix& z);

/// Values of one layer over all examples. `Aprime[j]` and `Zprime[j]` hold the
/// partials of that layer w.r.t. network input j, shape (layer size x examples).
struct LayerCache {
    Matrix A;
    Matrix Z;
    std::vector<Matrix> Aprime;
    std::vector<Matrix> Zprime;
};

/// Per-layer state retained for backprop. `layers[0]` is the input layer, whose Z
/// is unused and whose partials are the identity (dx_i/dx_j = delta_ij).
struct ForwardCache {
    std::vector<LayerCache> layers;
    bool has_partials = false;

    const Matrix& output() const { return layers.back().A; }
    Index examples() const { return layers.front().A.cols(); }
    Index inputs() const { return layers.front().A.rows(); }

    /// Output Jacobian assembled from the last layer's partials. Requires has_partials.
    JacobianTensor output_jacobian() const;
};

ForwardCache forward(const Architecture& arch, const Parameters& params, const Matrix& X);
ForwardCache forward_with_partials(const Architecture& arch, const Parameters& params,
                                   const Matrix& X);

/// Raw-unit values and Jacobian: normalize, propagate, denormalize.
RawPrediction predict(const Model& model, const Matrix& X_raw);

}  // namespace jenn
