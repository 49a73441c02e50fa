#pragma once

// Layered feedforward network with sigmoid units, trained by plain SGD on
// per-class sigmoid cross-entropy. Serves as a baseline classifier and as
// the weight source for MLP-embedded mesh seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mnn/binary_io.hpp"
#include "mnn/dataset.hpp"
#include "mnn/error.hpp"
#include "mnn/mesh.hpp"
#include "mnn/rng.hpp"

namespace mnn {

/// Hidden-layer sizes of the three baseline variants. Only the first sums to
/// a 240-neuron mesh and can be embedded.
inline const std::vector<std::vector<std::uint32_t>>& baseline_hidden_variants() {
    static const std::vector<std::vector<std::uint32_t>> v = {
        {128, 64, 32, 16}, {64, 32, 16, 10}, {256, 128, 64, 32, 10}};
    return v;
}

struct Mlp {
    std::vector<std::uint32_t> layer_sizes;  // input, hidden..., output
    std::vector<Matrix> weights;             // weights[l] : sizes[l+1] x sizes[l]
    std::vector<Vector> biases;              // biases[l]  : sizes[l+1]

    Mlp() = default;

    /// Zero-initialized network.
    explicit Mlp(std::vector<std::uint32_t> sizes) : layer_sizes(std::move(sizes)) {
        detail::require(layer_sizes.size() >= 2, "an MLP needs at least input and output layers");
        for (auto s : layer_sizes) detail::require(s >= 1, "layer sizes must be positive");
        for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
            weights.push_back(Matrix::Zero(layer_sizes[l + 1], layer_sizes[l]));
            biases.push_back(Vector::Zero(layer_sizes[l + 1]));
        }
    }

    std::size_t layer_count() const noexcept { return weights.size(); }
    std::uint32_t input_size() const { return layer_sizes.front(); }
    std::uint32_t output_size() const { return layer_sizes.back(); }

    bool operator==(const Mlp& o) const {
        if (layer_sizes != o.layer_sizes) return false;
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
        return true;
    }

    void validate() const {
        detail::require(layer_sizes.size() >= 2, "an MLP needs at least input and output layers");
        detail::require(weights.size() + 1 == layer_sizes.size() && biases.size() == weights.size(),
                        "MLP layer count mismatch");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            detail::require(weights[l].rows() == layer_sizes[l + 1] && weights[l].cols() == layer_sizes[l] &&
                                biases[l].size() == layer_sizes[l + 1],
                            "MLP layer " + std::to_string(l) + " has inconsistent shape");
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw NumericError("MLP holds a non-finite weight");
        }
    }
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline Mlp make_mlp(std::vector<std::uint32_t> sizes, Rng& rng) {
    Mlp mlp(std::move(sizes));
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(mlp.layer_sizes[l]));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < mlp.weights[l].size(); ++i) mlp.weights[l].data()[i] = u(rng);
        for (Eigen::Index i = 0; i < mlp.biases[l].size(); ++i) mlp.biases[l][i] = u(rng);
    }
    return mlp;
}

/// Per-layer activations for a batch: acts[0] = inputs, acts[l+1] = g(W_l acts[l] + b_l).
inline std::vector<Matrix> mlp_activations(const Mlp& mlp, const Matrix& xs) {
    if (xs.rows() != mlp.input_size())
        throw InvalidArgument("input length " + std::to_string(xs.rows()) + " does not match MLP input " +
                              std::to_string(mlp.input_size()));
    std::vector<Matrix> acts;
    acts.reserve(mlp.layer_count() + 1);
    acts.push_back(xs);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        Matrix pre = (mlp.weights[l] * acts.back()).colwise() + mlp.biases[l];
        detail::require_finite(pre, "MLP pre-activation");
        acts.push_back(sigmoid(pre));
    }
    return acts;
}

inline Vector mlp_forward(const Mlp& mlp, const Vector& x) {
    if (x.size() != mlp.input_size())
        throw InvalidArgument("input length " + std::to_string(x.size()) + " does not match MLP input " +
                              std::to_string(mlp.input_size()));
    Vector a = x;
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        Vector pre = mlp.weights[l] * a + mlp.biases[l];
        detail::require_finite(pre, "MLP pre-activation");
        a = sigmoid(pre);
    }
    return a;
}

inline Matrix mlp_forward_batch(const Mlp& mlp, const Matrix& xs) { return mlp_activations(mlp, xs).back(); }

inline Label mlp_predict(const Mlp& mlp, const Vector& x) { return label_from_scores(mlp_forward(mlp, x)); }

/// One-hot targets (classes x N) for labels -1/0/+1.
inline Matrix one_hot(const std::vector<Label>& labels, std::uint32_t classes = 3) {
    Matrix y = Matrix::Zero(classes, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto k = index_from_label(labels[i]);
        detail::require(k >= 0 && k < static_cast<Eigen::Index>(classes), "label outside class range");
        y(k, static_cast<Eigen::Index>(i)) = 1.0;
    }
    return y;
}

namespace detail {

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace detail

/// Mean over samples of the summed per-class binary cross-entropy.
inline double mlp_loss(const Mlp& mlp, const Matrix& xs, const Matrix& targets) {
    const auto acts = mlp_activations(mlp, xs);
    // Recompute the last pre-activation so the loss stays exact when outputs saturate.
    const Matrix pre = (mlp.weights.back() * acts[acts.size() - 2]).colwise() + mlp.biases.back();
    double total = 0;
    for (Eigen::Index j = 0; j < pre.cols(); ++j)
        for (Eigen::Index k = 0; k < pre.rows(); ++k) total += detail::softplus(pre(k, j)) - targets(k, j) * pre(k, j);
    return total / static_cast<double>(xs.cols());
}

struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

/// Analytic gradient of mlp_loss by backpropagation.
inline MlpGradients mlp_gradients(const Mlp& mlp, const Matrix& xs, const Matrix& targets) {
    detail::require(targets.rows() == mlp.output_size() && targets.cols() == xs.cols(), "target shape mismatch");
    const auto acts = mlp_activations(mlp, xs);
    const double inv_n = 1.0 / static_cast<double>(xs.cols());
    const std::size_t layers = mlp.layer_count();

    MlpGradients g;
    g.weights.resize(layers);
    g.biases.resize(layers);
    // Sigmoid + cross-entropy: dL/dz at the output is (p - y).
    Matrix delta = acts.back() - targets;
    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta * acts[l].transpose() * inv_n;
        g.biases[l] = delta.rowwise().sum() * inv_n;
        if (l > 0) {
            const Matrix& a = acts[l];
            delta = (mlp.weights[l].transpose() * delta).cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
        }
    }
    return g;
}

struct TrainSpec {
    std::uint32_t epochs = 200;
    double learning_rate = 0.5;
    std::uint32_t batch_size = 32;  // 0 = full batch
    std::uint64_t rng_seed = 1;
};

struct EpochStats {
    std::uint32_t epoch;
    double loss;
    double accuracy;
};

inline double mlp_accuracy(const Mlp& mlp, const Matrix& xs, const std::vector<Label>& labels) {
    const Matrix scores = mlp_forward_batch(mlp, xs);
    std::size_t hits = 0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j)
        if (label_from_scores(scores.col(j)) == labels[static_cast<std::size_t>(j)]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

/// Trains a fresh MLP with the given layer sizes. When `log` is non-null it
/// receives the full-training-set loss and accuracy after every epoch.
inline Mlp train_mlp(const Dataset& train, const TrainSpec& spec, std::vector<std::uint32_t> layer_sizes,
                     std::vector<EpochStats>* log = nullptr) {
    if (train.empty()) throw InvalidArgument("training set is empty");
    detail::require(spec.epochs >= 1, "epochs must be >= 1");
    detail::require(spec.learning_rate > 0 && std::isfinite(spec.learning_rate), "learning_rate must be > 0");
    detail::require(layer_sizes.size() >= 2, "layer_sizes needs input and output sizes");
    detail::require(layer_sizes.front() == train.dimension(),
                    "layer_sizes[0] = " + std::to_string(layer_sizes.front()) + " does not match data dimension " +
                        std::to_string(train.dimension()));
    detail::require(layer_sizes.back() == 3, "the output layer must have 3 classes");

    Rng rng(spec.rng_seed);
    Mlp mlp = make_mlp(std::move(layer_sizes), rng);
    const Matrix xs = train.inputs();
    const std::vector<Label> labels = train.labels();
    const Matrix ys = one_hot(labels);
    const auto n = static_cast<std::size_t>(xs.cols());
    const std::size_t batch = spec.batch_size == 0 ? n : std::min<std::size_t>(spec.batch_size, n);

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::uint32_t epoch = 1; epoch <= spec.epochs; ++epoch) {
        if (batch < n) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            Matrix bx(xs.rows(), static_cast<Eigen::Index>(end - start));
            Matrix by(ys.rows(), bx.cols());
            for (std::size_t k = start; k < end; ++k) {
                bx.col(static_cast<Eigen::Index>(k - start)) = xs.col(order[k]);
                by.col(static_cast<Eigen::Index>(k - start)) = ys.col(order[k]);
            }
            const MlpGradients g = mlp_gradients(mlp, bx, by);
            for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
                mlp.weights[l] -= spec.learning_rate * g.weights[l];
                mlp.biases[l] -= spec.learning_rate * g.biases[l];
            }
        }
        if (log) log->push_back({epoch, mlp_loss(mlp, xs, ys), mlp_accuracy(mlp, xs, labels)});
    }
    mlp.validate();
    return mlp;
}

// ---------------------------------------------------------------------------
// MLP1 container: "MLP1", u32 layer-size count L, L x u32 sizes, then for
// each layer the f64 row-major weight matrix followed by its bias vector.

inline binary::Bytes serialize(const Mlp& mlp) {
    mlp.validate();
    binary::Writer w;
    w.magic("MLP1");
    w.u32(static_cast<std::uint32_t>(mlp.layer_sizes.size()));
    for (auto s : mlp.layer_sizes) w.u32(s);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        w.matrix(mlp.weights[l]);
        w.matrix(mlp.biases[l]);
    }
    return w.take();
}

inline Mlp deserialize_mlp(std::span<const std::uint8_t> bytes) {
    binary::Reader r(bytes);
    r.expect_magic("MLP1");
    const std::uint32_t count = r.u32();
    if (count < 2 || count > 1024)
        throw FormatError(FormatError::Kind::InconsistentHeader, "MLP1 header declares an invalid layer count");
    std::vector<std::uint32_t> sizes(count);
    double expected = 0;
    for (auto& s : sizes) {
        s = r.u32();
        if (s == 0) throw FormatError(FormatError::Kind::InconsistentHeader, "MLP1 header declares an empty layer");
    }
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) expected += 8.0 * (double(sizes[l]) + 1.0) * sizes[l + 1];
    if (expected > static_cast<double>(r.remaining()) + 0.5)
        throw FormatError(FormatError::Kind::Truncated, "MLP1 stream truncated");
    if (expected < static_cast<double>(r.remaining()) - 0.5)
        throw FormatError(FormatError::Kind::InconsistentHeader, "MLP1 stream longer than its header declares");
    Mlp mlp(std::move(sizes));
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        r.matrix(mlp.weights[l]);
        r.matrix(mlp.biases[l]);
    }
    try {
        mlp.validate();
    } catch (const NumericError&) {
        throw FormatError(FormatError::Kind::InconsistentHeader, "MLP1 stream holds a non-finite weight");
    }
    return mlp;
}

inline void save_mlp(const Mlp& mlp, const std::string& path) { binary::write_file(path, serialize(mlp)); }
inline Mlp load_mlp(const std::string& path) { return deserialize_mlp(binary::read_file(path)); }

} // namespace mnn
