#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace jenn {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Standard deviations below this value are clamped to it during normalization.
inline constexpr double kSigmaFloor = 1e-12;

/// Rank-3 array of partials d(out_k)/d(in_j) over examples, shape (outputs x inputs x examples).
///
/// Stored as one (outputs x examples) slice per input j, which is the layout the
/// forward and backward passes iterate over: one loop over inputs, vectorized over
/// examples.
class JacobianTensor {
public:
    JacobianTensor() = default;
    JacobianTensor(Index outputs, Index inputs, Index examples, double fill = 0.0);

    Index outputs() const noexcept { return outputs_; }
    Index inputs() const noexcept { return static_cast<Index>(slices_.size()); }
    Index examples() const noexcept { return examples_; }

    double& operator()(Index k, Index j, Index t) { return slices_[j](k, t); }
    double operator()(Index k, Index j, Index t) const { return slices_[j](k, t); }

    Matrix& slice(Index j) { return slices_[static_cast<std::size_t>(j)]; }
    const Matrix& slice(Index j) const { return slices_[static_cast<std::size_t>(j)]; }

    bool same_shape(const JacobianTensor& other) const noexcept;
    bool all_finite() const;
    bool slice_is_zero(Index j) const;

    /// Gathers the given example columns into a new tensor.
    JacobianTensor columns(const std::vector<Index>& cols) const;

    friend bool operator==(const JacobianTensor& a, const JacobianTensor& b);

private:
    Index outputs_ = 0;
    Index examples_ = 0;
    std::vector<Matrix> slices_;
};

/// Axis-aligned box [lower, upper] in input space.
struct Bounds {
    Vector lower;
    Vector upper;

    Index dims() const noexcept { return lower.size(); }
    bool contains(const Vector& x) const;
    void validate() const;
};

/// Training data in column-per-example layout, with per-entry loss weights.
///
/// A dataset without partials keeps `jacobian` empty and `gamma` zero, so the
/// Jacobian term of the loss vanishes identically.
struct Dataset {
    Matrix X;                              // inputs x examples
    Matrix Y;                              // outputs x examples
    std::optional<JacobianTensor> jacobian;  // outputs x inputs x examples
    Matrix beta;                           // same shape as Y
    JacobianTensor gamma;                  // same shape as jacobian

    Index inputs() const noexcept { return X.rows(); }
    Index outputs() const noexcept { return Y.rows(); }
    Index examples() const noexcept { return X.cols(); }
    bool has_partials() const noexcept { return jacobian.has_value(); }

    /// Throws std::invalid_argument when any dataset invariant is violated.
    void validate() const;

    /// Jacobian if present, otherwise a zero tensor of the right shape.
    JacobianTensor partials_or_zero() const;

    /// Subset of examples, weights included.
    Dataset columns(const std::vector<Index>& cols) const;
};

/// Values-only dataset: beta = 1, gamma = 0.
Dataset make_dataset(Matrix X, Matrix Y);
/// Gradient-enhanced dataset: beta = 1, gamma = 1.
Dataset make_dataset(Matrix X, Matrix Y, JacobianTensor J);

struct NormalizationStats {
    Vector mu_x;
    Vector sigma_x;
    Vector mu_y;
    Vector sigma_y;

    static NormalizationStats identity(Index inputs, Index outputs);
};

NormalizationStats compute_normalization(const Dataset& data);

Matrix normalize_inputs(const Matrix& X, const NormalizationStats& stats);
Dataset normalize_dataset(const Dataset& data, const NormalizationStats& stats);

struct RawPrediction {
    Matrix Y;
    JacobianTensor J;
};

RawPrediction denormalize_prediction(const Matrix& y_hat, const JacobianTensor& j_hat,
                                     const NormalizationStats& stats);

enum class Activation { Tanh, Linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct Architecture {
    std::vector<Index> layer_sizes;  // [inputs, hidden..., outputs]
    Activation hidden_activation = Activation::Tanh;
    Activation output_activation = Activation::Linear;

    Index inputs() const { return layer_sizes.front(); }
    Index outputs() const { return layer_sizes.back(); }
    Index num_layers() const noexcept { return static_cast<Index>(layer_sizes.size()); }

    /// Activation applied by weight layer `l` (0-based over the L-1 weight layers).
    Activation activation_of(std::size_t l) const;

    void validate() const;
};

/// Parses "2,16,16,1" into an Architecture with tanh hidden layers and a linear output.
Architecture parse_architecture(std::string_view spec);

/// Weights and biases of every non-input layer. Entry l maps layer l to layer l+1.
struct Parameters {
    std::vector<Matrix> W;
    std::vector<Vector> b;

    std::size_t layers() const noexcept { return W.size(); }
    Index size() const;
    bool all_finite() const;
    bool matches(const Architecture& arch) const;
};

/// Zero biases, weights uniform in +-sqrt(3/fan_in) so that Var(w) = 1/fan_in.
Parameters init_parameters(const Architecture& arch, std::uint64_t seed);

enum class OptimizerKind { GradientDescent, Adam };

struct TrainingConfig {
    double alpha = 0.05;
    double lambda = 0.0;
    Index epochs = 1000;
    std::optional<Index> batch_size;  // empty = full batch
    OptimizerKind optimizer = OptimizerKind::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double gamma_scale = 1.0;
    std::optional<JacobianTensor> gamma_weights;  // elementwise multiplier on Dataset::gamma

    void validate() const;
};

/// A trained surrogate. Predictions always pass through the stored normalization.
class Model {
public:
    Model(Architecture arch, Parameters params, NormalizationStats norm);

    const Architecture& architecture() const noexcept { return arch_; }
    const Parameters& parameters() const noexcept { return params_; }
    const NormalizationStats& normalization() const noexcept { return norm_; }

private:
    Architecture arch_;
    Parameters params_;
    NormalizationStats norm_;
};

}  // namespace jenn
