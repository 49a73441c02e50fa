#pragma once

// Mesh Neural Network: a recurrent classifier in which any mesh neuron may
// connect to any other. Five dense parameter blocks plus a fixed number of
// settle steps fully describe a network.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "mnn/binary_io.hpp"
#include "mnn/error.hpp"

namespace mnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Class index 0, 1, 2 maps to bias label -1, 0, +1.
using Label = int;

inline constexpr Label label_from_index(Eigen::Index i) { return static_cast<Label>(i) - 1; }
inline constexpr Eigen::Index index_from_label(Label l) { return l + 1; }
inline constexpr bool is_valid_label(Label l) { return l >= -1 && l <= 1; }

struct MeshDims {
    std::uint32_t input = 512;
    std::uint32_t mesh = 240;
    std::uint32_t classes = 3;
    std::uint32_t settle_steps = 4;

    bool operator==(const MeshDims&) const = default;
};

inline void validate(const MeshDims& d) {
    detail::require(d.input >= 1 && d.mesh >= 1 && d.classes >= 1, "mesh dimensions must be positive");
    detail::require(d.settle_steps >= 1, "settle_steps must be >= 1");
}

/// Identifies one of the five parameter blocks. Order matches the
/// serialized layout.
enum class Block : std::size_t { InConnect = 0, MeshConnect, MeshBias, OutConnect, OutBias };
inline constexpr std::size_t kBlockCount = 5;

struct MeshNetwork {
    Matrix in_connect;    // M x D
    Matrix mesh_connect;  // M x M, row = target neuron, column = source neuron
    Vector mesh_bias;     // M
    Matrix out_connect;   // C x M
    Vector out_bias;      // C
    std::uint32_t settle_steps = 4;

    MeshNetwork() = default;

    /// All-zero network of the given shape.
    explicit MeshNetwork(const MeshDims& d)
        : in_connect(Matrix::Zero(d.mesh, d.input)),
          mesh_connect(Matrix::Zero(d.mesh, d.mesh)),
          mesh_bias(Vector::Zero(d.mesh)),
          out_connect(Matrix::Zero(d.classes, d.mesh)),
          out_bias(Vector::Zero(d.classes)),
          settle_steps(d.settle_steps) {
        mnn::validate(d);
    }

    MeshDims dims() const {
        return {static_cast<std::uint32_t>(in_connect.cols()), static_cast<std::uint32_t>(in_connect.rows()),
                static_cast<std::uint32_t>(out_connect.rows()), settle_steps};
    }

    /// Flat views over the five blocks, in Block order. Storage is
    /// column-major; congruent masks share the same flat indexing.
    std::array<std::span<double>, kBlockCount> blocks() {
        return {span_of(in_connect), span_of(mesh_connect), span_of(mesh_bias), span_of(out_connect),
                span_of(out_bias)};
    }
    std::array<std::span<const double>, kBlockCount> blocks() const {
        return {span_of(in_connect), span_of(mesh_connect), span_of(mesh_bias), span_of(out_connect),
                span_of(out_bias)};
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (auto b : blocks()) n += b.size();
        return n;
    }

    bool operator==(const MeshNetwork& o) const {
        return settle_steps == o.settle_steps && dims() == o.dims() && in_connect == o.in_connect &&
               mesh_connect == o.mesh_connect && mesh_bias == o.mesh_bias && out_connect == o.out_connect &&
               out_bias == o.out_bias;
    }

    /// Throws InvalidArgument on inconsistent shapes, NumericError on
    /// non-finite weights.
    void validate() const {
        const auto m = in_connect.rows();
        detail::require(m >= 1 && in_connect.cols() >= 1 && out_connect.rows() >= 1, "empty mesh network");
        detail::require(mesh_connect.rows() == m && mesh_connect.cols() == m, "mesh_connect must be M x M");
        detail::require(mesh_bias.size() == m, "mesh_bias length must equal M");
        detail::require(out_connect.cols() == m, "out_connect columns must equal M");
        detail::require(out_bias.size() == out_connect.rows(), "out_bias length must equal C");
        detail::require(settle_steps >= 1, "settle_steps must be >= 1");
        for (auto b : blocks())
            for (double v : b)
                if (!std::isfinite(v)) throw NumericError("mesh network holds a non-finite weight");
    }

private:
    template <typename M>
    static std::span<double> span_of(M& m) {
        return {m.data(), static_cast<std::size_t>(m.size())};
    }
    template <typename M>
    static std::span<const double> span_of(const M& m) {
        return {m.data(), static_cast<std::size_t>(m.size())};
    }
};

/// Logistic sigmoid, written to stay finite for large |z|.
inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

/// Activations of the mesh neurons after settling.
struct HiddenState {
    Vector activations;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}

} // namespace detail

/// Runs h_{t+1} = g(mesh_connect h_t + in_connect x + mesh_bias) from
/// h_0 = 0 for `steps` iterations (defaults to the network's settle_steps).
inline HiddenState settle(const MeshNetwork& net, const Vector& x, std::uint32_t steps = 0) {
    if (x.size() != net.in_connect.cols())
        throw InvalidArgument("input length " + std::to_string(x.size()) + " does not match network input " +
                              std::to_string(net.in_connect.cols()));
    detail::require_finite(x, "input");
    if (steps == 0) steps = net.settle_steps;

    const Vector drive = net.in_connect * x + net.mesh_bias;
    detail::require_finite(drive, "input drive");
    Vector h = Vector::Zero(net.mesh_connect.rows());
    for (std::uint32_t t = 0; t < steps; ++t) {
        Vector pre = net.mesh_connect * h + drive;
        detail::require_finite(pre, "mesh pre-activation");
        h = sigmoid(pre);
    }
    return {std::move(h)};
}

/// Class scores g(out_connect h_T + out_bias), each in (0, 1).
inline Vector forward(const MeshNetwork& net, const Vector& x) {
    const HiddenState h = settle(net, x);
    Vector pre = net.out_connect * h.activations + net.out_bias;
    detail::require_finite(pre, "output pre-activation");
    return sigmoid(pre);
}

/// Column-wise forward over a D x N input matrix; returns C x N scores.
inline Matrix forward_batch(const MeshNetwork& net, const Matrix& xs) {
    if (xs.rows() != net.in_connect.cols())
        throw InvalidArgument("batch input rows do not match network input dimension");
    detail::require_finite(xs, "input");
    const Matrix drive = (net.in_connect * xs).colwise() + net.mesh_bias;
    detail::require_finite(drive, "input drive");
    Matrix h = Matrix::Zero(net.mesh_connect.rows(), xs.cols());
    for (std::uint32_t t = 0; t < net.settle_steps; ++t) {
        Matrix pre = net.mesh_connect * h + drive;
        detail::require_finite(pre, "mesh pre-activation");
        h = sigmoid(pre);
    }
    Matrix pre = (net.out_connect * h).colwise() + net.out_bias;
    detail::require_finite(pre, "output pre-activation");
    return sigmoid(pre);
}

/// Argmax with ties resolved toward the lowest index, mapped to a label.
inline Label label_from_scores(const Vector& scores) {
    detail::require(scores.size() == 3, "label mapping needs exactly 3 class scores");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return label_from_index(best);
}

inline Label predict(const MeshNetwork& net, const Vector& x) { return label_from_scores(forward(net, x)); }

// ---------------------------------------------------------------------------
// MNN1 container: "MNN1", u32 D, M, C, settle_steps, then f64 row-major
// in_connect, mesh_connect, mesh_bias, out_connect, out_bias.

inline constexpr std::size_t kMeshHeaderBytes = 4 + 4 * 4;

inline std::size_t serialized_size(const MeshDims& d) {
    const std::size_t m = d.mesh, n = d.input, c = d.classes;
    return kMeshHeaderBytes + 8 * (m * n + m * m + m + c * m + c);
}

inline binary::Bytes serialize(const MeshNetwork& net) {
    net.validate();
    binary::Writer w;
    const MeshDims d = net.dims();
    w.magic("MNN1");
    w.u32(d.input);
    w.u32(d.mesh);
    w.u32(d.classes);
    w.u32(d.settle_steps);
    w.matrix(net.in_connect);
    w.matrix(net.mesh_connect);
    w.matrix(net.mesh_bias);
    w.matrix(net.out_connect);
    w.matrix(net.out_bias);
    return w.take();
}

inline MeshNetwork deserialize_mesh(std::span<const std::uint8_t> bytes) {
    binary::Reader r(bytes);
    r.expect_magic("MNN1");
    MeshDims d;
    d.input = r.u32();
    d.mesh = r.u32();
    d.classes = r.u32();
    d.settle_steps = r.u32();
    if (d.input == 0 || d.mesh == 0 || d.classes == 0 || d.settle_steps == 0)
        throw FormatError(FormatError::Kind::InconsistentHeader, "zero dimension in MNN1 header");
    const double approx_body = 8.0 * (double(d.mesh) * d.input + double(d.mesh) * d.mesh + d.mesh +
                                      double(d.classes) * d.mesh + d.classes);
    if (approx_body > static_cast<double>(r.remaining()) + 8.0)
        throw FormatError(FormatError::Kind::Truncated, "MNN1 stream truncated");
    const std::size_t body = serialized_size(d) - kMeshHeaderBytes;
    if (r.remaining() < body) throw FormatError(FormatError::Kind::Truncated, "MNN1 stream truncated");
    if (r.remaining() > body)
        throw FormatError(FormatError::Kind::InconsistentHeader, "MNN1 stream longer than its header declares");

    MeshNetwork net(d);
    r.matrix(net.in_connect);
    r.matrix(net.mesh_connect);
    r.matrix(net.mesh_bias);
    r.matrix(net.out_connect);
    r.matrix(net.out_bias);
    for (auto b : std::as_const(net).blocks())
        for (double v : b)
            if (!std::isfinite(v))
                throw FormatError(FormatError::Kind::InconsistentHeader, "MNN1 stream holds a non-finite weight");
    return net;
}

inline void save_mesh(const MeshNetwork& net, const std::string& path) { binary::write_file(path, serialize(net)); }
inline MeshNetwork load_mesh(const std::string& path) { return deserialize_mesh(binary::read_file(path)); }

} // namespace mnn
