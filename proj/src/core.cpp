#include "jenn/core.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace jenn {

namespace {

std::string shape_str(Index r, Index c) {
    return "(" + std::to_string(r) + " x " + std::to_string(c) + ")";
}

void require_finite(const Matrix& M, std::string_view name) {
    for (Index c = 0; c < M.cols(); ++c) {
        for (Index r = 0; r < M.rows(); ++r) {
            if (!std::isfinite(M(r, c))) {
                std::ostringstream os;
                os << name << " has non-finite entry at row " << r << ", column " << c;
                throw std::invalid_argument(os.str());
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// JacobianTensor

JacobianTensor::JacobianTensor(Index outputs, Index inputs, Index examples, double fill)
    : outputs_(outputs), examples_(examples),
      slices_(static_cast<std::size_t>(inputs), Matrix::Constant(outputs, examples, fill)) {}

bool JacobianTensor::same_shape(const JacobianTensor& other) const noexcept {
    return outputs_ == other.outputs_ && examples_ == other.examples_ &&
           slices_.size() == other.slices_.size();
}

bool JacobianTensor::all_finite() const {
    for (const auto& s : slices_) {
        if (!s.allFinite()) return false;
    }
    return true;
}

bool JacobianTensor::slice_is_zero(Index j) const {
    return (slice(j).array() == 0.0).all();
}

JacobianTensor JacobianTensor::columns(const std::vector<Index>& cols) const {
    JacobianTensor out(outputs_, inputs(), static_cast<Index>(cols.size()));
    for (Index j = 0; j < inputs(); ++j) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            out.slice(j).col(static_cast<Index>(c)) = slice(j).col(cols[c]);
        }
    }
    return out;
}

bool operator==(const JacobianTensor& a, const JacobianTensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t j = 0; j < a.slices_.size(); ++j) {
        if (a.slices_[j] != b.slices_[j]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Bounds

bool Bounds::contains(const Vector& x) const {
    return x.size() == dims() && (x.array() >= lower.array()).all() &&
           (x.array() <= upper.array()).all();
}

void Bounds::validate() const {
    if (lower.size() == 0 || lower.size() != upper.size()) {
        throw std::invalid_argument("bounds: lower/upper must be non-empty and equally sized");
    }
    for (Index i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i))) {
            throw std::invalid_argument("bounds: degenerate interval in dimension " +
                                        std::to_string(i));
        }
    }
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
    const Index m = examples();
    if (m < 1 || inputs() < 1 || outputs() < 1) {
        throw std::invalid_argument("dataset: need at least one input, output and example");
    }
    if (Y.cols() != m) {
        throw std::invalid_argument("dataset: Y has " + std::to_string(Y.cols()) +
                                    " columns, expected " + std::to_string(m));
    }
    require_finite(X, "X");
    require_finite(Y, "Y");
    if (beta.rows() != Y.rows() || beta.cols() != m) {
        throw std::invalid_argument("dataset: beta shape " + shape_str(beta.rows(), beta.cols()) +
                                    " does not match Y " + shape_str(Y.rows(), m));
    }
    require_finite(beta, "beta");
    if ((beta.array() < 0.0).any()) throw std::invalid_argument("dataset: negative beta");

    if (gamma.outputs() != outputs() || gamma.inputs() != inputs() || gamma.examples() != m) {
        throw std::invalid_argument("dataset: gamma shape does not match (n_y x n_x x m)");
    }
    for (Index j = 0; j < inputs(); ++j) {
        require_finite(gamma.slice(j), "gamma");
        if ((gamma.slice(j).array() < 0.0).any()) {
            throw std::invalid_argument("dataset: negative gamma");
        }
    }
    if (jacobian) {
        if (!jacobian->same_shape(gamma)) {
            throw std::invalid_argument("dataset: Jacobian shape must be (n_y x n_x x m)");
        }
        for (Index j = 0; j < inputs(); ++j) {
            require_finite(jacobian->slice(j), "J[:, " + std::to_string(j) + ", :]");
        }
    }
}

JacobianTensor Dataset::partials_or_zero() const {
    if (jacobian) return *jacobian;
    return JacobianTensor(outputs(), inputs(), examples());
}

Dataset Dataset::columns(const std::vector<Index>& cols) const {
    Dataset out;
    out.X = X(Eigen::all, cols);
    out.Y = Y(Eigen::all, cols);
    out.beta = beta(Eigen::all, cols);
    out.gamma = gamma.columns(cols);
    if (jacobian) out.jacobian = jacobian->columns(cols);
    return out;
}

Dataset make_dataset(Matrix X, Matrix Y) {
    Dataset d;
    d.beta = Matrix::Ones(Y.rows(), Y.cols());
    d.gamma = JacobianTensor(Y.rows(), X.rows(), X.cols(), 0.0);
    d.X = std::move(X);
    d.Y = std::move(Y);
    d.validate();
    return d;
}

Dataset make_dataset(Matrix X, Matrix Y, JacobianTensor J) {
    Dataset d;
    d.beta = Matrix::Ones(Y.rows(), Y.cols());
    d.gamma = JacobianTensor(Y.rows(), X.rows(), X.cols(), 1.0);
    d.X = std::move(X);
    d.Y = std::move(Y);
    d.jacobian = std::move(J);
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Normalization

NormalizationStats NormalizationStats::identity(Index inputs, Index outputs) {
    return {Vector::Zero(inputs), Vector::Ones(inputs), Vector::Zero(outputs),
            Vector::Ones(outputs)};
}

namespace {

// Population statistics per row.
void row_stats(const Matrix& M, Vector& mu, Vector& sigma) {
    const double m = static_cast<double>(M.cols());
    mu = M.rowwise().sum() / m;
    sigma.resize(M.rows());
    for (Index r = 0; r < M.rows(); ++r) {
        const double var = (M.row(r).array() - mu(r)).square().sum() / m;
        sigma(r) = std::max(std::sqrt(var), kSigmaFloor);
    }
}

}  // namespace

NormalizationStats compute_normalization(const Dataset& data) {
    data.validate();
    NormalizationStats s;
    row_stats(data.X, s.mu_x, s.sigma_x);
    row_stats(data.Y, s.mu_y, s.sigma_y);
    return s;
}

Matrix normalize_inputs(const Matrix& X, const NormalizationStats& stats) {
    if (X.rows() != stats.mu_x.size()) {
        throw std::invalid_argument("normalize: input has " + std::to_string(X.rows()) +
                                    " rows, stats expect " + std::to_string(stats.mu_x.size()));
    }
    return (X.colwise() - stats.mu_x).array().colwise() / stats.sigma_x.array();
}

Dataset normalize_dataset(const Dataset& data, const NormalizationStats& stats) {
    if (data.inputs() != stats.mu_x.size() || data.outputs() != stats.mu_y.size()) {
        throw std::invalid_argument("normalize: dataset dimensions do not match stats");
    }
    Dataset out = data;
    out.X = normalize_inputs(data.X, stats);
    out.Y = (data.Y.colwise() - stats.mu_y).array().colwise() / stats.sigma_y.array();
    if (data.jacobian) {
        for (Index j = 0; j < data.inputs(); ++j) {
            // dy_k/dx_j * sigma_x[j] / sigma_y[k]
            out.jacobian->slice(j) =
                (data.jacobian->slice(j).array().colwise() / stats.sigma_y.array()) *
                stats.sigma_x(j);
        }
    }
    return out;
}

RawPrediction denormalize_prediction(const Matrix& y_hat, const JacobianTensor& j_hat,
                                     const NormalizationStats& stats) {
    const Index ny = stats.mu_y.size();
    const Index nx = stats.mu_x.size();
    if (y_hat.rows() != ny || j_hat.outputs() != ny || j_hat.inputs() != nx ||
        j_hat.examples() != y_hat.cols()) {
        throw std::invalid_argument("denormalize: prediction shape does not match stats");
    }
    RawPrediction out;
    out.Y = (y_hat.array().colwise() * stats.sigma_y.array()).colwise() + stats.mu_y.array();
    out.J = JacobianTensor(ny, nx, y_hat.cols());
    for (Index j = 0; j < nx; ++j) {
        out.J.slice(j) = (j_hat.slice(j).array().colwise() * stats.sigma_y.array()) /
                         stats.sigma_x(j);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Architecture

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Linear: return "linear";
    }
    throw std::invalid_argument("unknown activation");
}

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "linear") return Activation::Linear;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Activation Architecture::activation_of(std::size_t l) const {
    return l + 2 == layer_sizes.size() ? output_activation : hidden_activation;
}

void Architecture::validate() const {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("architecture: need at least input and output layers");
    }
    for (Index n : layer_sizes) {
        if (n < 1) throw std::invalid_argument("architecture: layer sizes must be >= 1");
    }
}

Architecture parse_architecture(std::string_view spec) {
    Architecture arch;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t comma = std::min(spec.find(',', pos), spec.size());
        auto token = spec.substr(pos, comma - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        long long value = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size() || value < 1) {
            throw std::invalid_argument("architecture: cannot parse '" + std::string(spec) +
                                        "' (expected comma-separated positive integers)");
        }
        arch.layer_sizes.push_back(static_cast<Index>(value));
        pos = comma + 1;
    }
    arch.validate();
    return arch;
}

// ---------------------------------------------------------------------------
// Parameters

Index Parameters::size() const {
    Index n = 0;
    for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
    return n;
}

bool Parameters::all_finite() const {
    for (std::size_t l = 0; l < W.size(); ++l) {
        if (!W[l].allFinite() || !b[l].allFinite()) return false;
    }
    return true;
}

bool Parameters::matches(const Architecture& arch) const {
    if (W.size() + 1 != arch.layer_sizes.size() || b.size() != W.size()) return false;
    for (std::size_t l = 0; l < W.size(); ++l) {
        if (W[l].rows() != arch.layer_sizes[l + 1] || W[l].cols() != arch.layer_sizes[l] ||
            b[l].size() != arch.layer_sizes[l + 1]) {
            return false;
        }
    }
    return true;
}

Parameters init_parameters(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    std::mt19937_64 rng(seed);
    Parameters p;
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const Index fan_in = arch.layer_sizes[l];
        const Index fan_out = arch.layer_sizes[l + 1];
        const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix W(fan_out, fan_in);
        for (Index c = 0; c < fan_in; ++c) {
            for (Index r = 0; r < fan_out; ++r) W(r, c) = dist(rng);
        }
        p.W.push_back(std::move(W));
        p.b.push_back(Vector::Zero(fan_out));
    }
    return p;
}

// ---------------------------------------------------------------------------
// TrainingConfig / Model

void TrainingConfig::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("training: alpha must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("training: lambda must be >= 0");
    if (epochs < 0) throw std::invalid_argument("training: epochs must be >= 0");
    if (batch_size && *batch_size < 1) {
        throw std::invalid_argument("training: batch size must be >= 1");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("training: ADAM betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("training: ADAM epsilon must be > 0");
    if (!(gamma_scale >= 0.0) || !std::isfinite(gamma_scale)) {
        throw std::invalid_argument("training: gamma scale must be finite and >= 0");
    }
}

Model::Model(Architecture arch, Parameters params, NormalizationStats norm)
    : arch_(std::move(arch)), params_(std::move(params)), norm_(std::move(norm)) {
    arch_.validate();
    if (!params_.matches(arch_)) {
        throw std::invalid_argument("model: parameter shapes do not match architecture");
    }
    if (norm_.mu_x.size() != arch_.inputs() || norm_.sigma_x.size() != arch_.inputs() ||
        norm_.mu_y.size() != arch_.outputs() || norm_.sigma_y.size() != arch_.outputs()) {
        throw std::invalid_argument("model: normalization stats do not match architecture");
    }
    if ((norm_.sigma_x.array() <= 0.0).any() || (norm_.sigma_y.array() <= 0.0).any()) {
        throw std::invalid_argument("model: normalization sigma must be positive");
    }
}

}  // namespace jenn
