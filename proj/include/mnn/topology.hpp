#pragma once

// Seed-network construction: Bernoulli-polarity random meshes, MLP-embedded
// meshes, and four-layer C. elegans-style wirings, together with the
// structural masks that confine evolution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mnn/error.hpp"
#include "mnn/mesh.hpp"
#include "mnn/mlp.hpp"
#include "mnn/rng.hpp"

namespace mnn {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-block evolvability flags, congruent to a MeshNetwork. Shares the
/// column-major flat indexing of MeshNetwork::blocks().
struct StructureMask {
    std::array<BoolMatrix, kBlockCount> blocks;

    static StructureMask uniform(const MeshDims& d, bool value) {
        StructureMask m;
        m.blocks[0] = BoolMatrix::Constant(d.mesh, d.input, value);
        m.blocks[1] = BoolMatrix::Constant(d.mesh, d.mesh, value);
        m.blocks[2] = BoolMatrix::Constant(d.mesh, 1, value);
        m.blocks[3] = BoolMatrix::Constant(d.classes, d.mesh, value);
        m.blocks[4] = BoolMatrix::Constant(d.classes, 1, value);
        return m;
    }

    /// All-true mask: unconstrained evolution.
    static StructureMask all(const MeshDims& d) { return uniform(d, true); }

    /// True exactly where the network holds a nonzero weight.
    static StructureMask support_of(const MeshNetwork& net) {
        StructureMask m = uniform(net.dims(), false);
        const auto b = net.blocks();
        for (std::size_t k = 0; k < kBlockCount; ++k)
            for (std::size_t i = 0; i < b[k].size(); ++i) m.blocks[k].data()[i] = b[k][i] != 0.0;
        return m;
    }

    std::span<const bool> flat(std::size_t block) const {
        return {blocks[block].data(), static_cast<std::size_t>(blocks[block].size())};
    }

    bool congruent_to(const MeshNetwork& net) const {
        const auto b = net.blocks();
        for (std::size_t k = 0; k < kBlockCount; ++k)
            if (static_cast<std::size_t>(blocks[k].size()) != b[k].size()) return false;
        return blocks[0].rows() == net.in_connect.rows() && blocks[0].cols() == net.in_connect.cols() &&
               blocks[3].rows() == net.out_connect.rows();
    }

    std::size_t evolvable_count() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += static_cast<std::size_t>(b.count());
        return n;
    }

    bool all_true() const {
        for (const auto& b : blocks)
            if (!b.all()) return false;
        return true;
    }

    StructureMask operator|(const StructureMask& o) const {
        StructureMask r;
        for (std::size_t k = 0; k < kBlockCount; ++k) {
            detail::require(blocks[k].rows() == o.blocks[k].rows() && blocks[k].cols() == o.blocks[k].cols(),
                            "masks are not congruent");
            r.blocks[k] = blocks[k].array() || o.blocks[k].array();
        }
        return r;
    }

    bool operator==(const StructureMask& o) const {
        for (std::size_t k = 0; k < kBlockCount; ++k) {
            if (blocks[k].rows() != o.blocks[k].rows() || blocks[k].cols() != o.blocks[k].cols()) return false;
            if (blocks[k] != o.blocks[k]) return false;
        }
        return true;
    }
};

/// A network plus the mask that governs how the GA may change it.
struct Seed {
    MeshNetwork network;
    StructureMask mask;
};

/// The six network configurations. `Dnn` is the stand-alone backprop
/// baseline; the other five are GA seed strategies.
enum class NetworkKind { Dnn, RandomMesh, DnnSeeded, CElegansRigid, CElegansSeeded, CElegansDnnSeeded };

inline std::string to_string(NetworkKind k) {
    switch (k) {
        case NetworkKind::Dnn: return "dnn";
        case NetworkKind::RandomMesh: return "random";
        case NetworkKind::DnnSeeded: return "dnn_seeded";
        case NetworkKind::CElegansRigid: return "celegans_rigid";
        case NetworkKind::CElegansSeeded: return "celegans_seeded";
        case NetworkKind::CElegansDnnSeeded: return "celegans_dnn_seeded";
    }
    return "?";
}

inline std::optional<NetworkKind> parse_network_kind(const std::string& s) {
    for (auto k : {NetworkKind::Dnn, NetworkKind::RandomMesh, NetworkKind::DnnSeeded, NetworkKind::CElegansRigid,
                   NetworkKind::CElegansSeeded, NetworkKind::CElegansDnnSeeded})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// Random-mesh parameters: one polarity probability per block (P(+1)) and
/// the half-normal magnitude scale.
struct SeedSpec {
    NetworkKind kind = NetworkKind::RandomMesh;
    std::array<double, kBlockCount> polarity{0.5, 0.5, 0.5, 0.5, 0.5};
    double sigma_rand = 0.2;
    std::uint64_t rng_seed = 1;

    void validate() const {
        for (double p : polarity) detail::require(p >= 0 && p <= 1, "polarity probabilities must lie in [0, 1]");
        detail::require(sigma_rand > 0 && std::isfinite(sigma_rand), "sigma_rand must be > 0");
    }
};

namespace detail {

/// Draws s * |N(0, sigma)| with P(s = +1) = p_positive; never exactly zero.
class SignedHalfNormal {
public:
    SignedHalfNormal(double p_positive, double sigma) : p_positive_(p_positive), normal_(0.0, sigma) {}

    double operator()(Rng& rng) {
        double m = 0;
        while (m == 0.0) m = std::abs(normal_(rng));
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return u < p_positive_ ? m : -m;
    }

private:
    double p_positive_;
    std::normal_distribution<double> normal_;
};

} // namespace detail

/// Fills every entry of every block with a signed half-normal weight.
inline MeshNetwork random_mesh(const MeshDims& dims, const std::array<double, kBlockCount>& polarity,
                               double sigma_rand, Rng& rng) {
    for (double p : polarity) detail::require(p >= 0 && p <= 1, "polarity probabilities must lie in [0, 1]");
    detail::require(sigma_rand > 0 && std::isfinite(sigma_rand), "sigma_rand must be > 0");
    MeshNetwork net(dims);
    auto blocks = net.blocks();
    for (std::size_t k = 0; k < kBlockCount; ++k) {
        detail::SignedHalfNormal draw(polarity[k], sigma_rand);
        for (double& v : blocks[k]) v = draw(rng);
    }
    return net;
}

inline MeshNetwork random_mesh(const MeshDims& dims, const SeedSpec& spec) {
    spec.validate();
    Rng rng(spec.rng_seed);
    return random_mesh(dims, spec.polarity, spec.sigma_rand, rng);
}

/// Places a trained MLP inside a mesh: hidden layers occupy consecutive mesh
/// index ranges, layer 1 is driven by in_connect, each later layer reads the
/// previous one through a block of mesh_connect, and out_connect reads the
/// last hidden layer. With settle_steps >= hidden-layer count the mesh output
/// equals the MLP output. The returned mask is all-true.
inline Seed embed_mlp(const Mlp& mlp, const MeshDims& dims) {
    mlp.validate();
    validate(dims);
    const auto& sizes = mlp.layer_sizes;
    detail::require(sizes.size() >= 3, "embedding needs at least one hidden layer");
    detail::require(sizes.front() == dims.input, "MLP input size does not match mesh input dimension");
    detail::require(sizes.back() == dims.classes, "MLP output size does not match mesh class count");
    const std::uint64_t hidden_total = std::accumulate(sizes.begin() + 1, sizes.end() - 1, std::uint64_t{0});
    detail::require(hidden_total == dims.mesh, "MLP hidden sizes sum to " + std::to_string(hidden_total) +
                                                   ", mesh size is " + std::to_string(dims.mesh));

    const std::size_t hidden_layers = sizes.size() - 2;
    MeshDims d = dims;
    d.settle_steps = std::max<std::uint32_t>(dims.settle_steps, static_cast<std::uint32_t>(hidden_layers));
    Seed seed{MeshNetwork(d), StructureMask::all(d)};
    MeshNetwork& net = seed.network;

    Eigen::Index offset = 0;
    net.in_connect.block(0, 0, sizes[1], sizes[0]) = mlp.weights[0];
    net.mesh_bias.segment(0, sizes[1]) = mlp.biases[0];
    for (std::size_t l = 1; l < hidden_layers; ++l) {
        const Eigen::Index prev = sizes[l], cur = sizes[l + 1];
        net.mesh_connect.block(offset + prev, offset, cur, prev) = mlp.weights[l];
        net.mesh_bias.segment(offset + prev, cur) = mlp.biases[l];
        offset += prev;
    }
    const Eigen::Index last = sizes[hidden_layers];
    net.out_connect.block(0, offset, sizes.back(), last) = mlp.weights.back();
    net.out_bias = mlp.biases.back();
    return seed;
}

// ---------------------------------------------------------------------------
// C. elegans-style four-layer wiring

struct CElegansSpec {
    std::uint32_t sensory = 64;
    std::uint32_t inter = 64;
    std::uint32_t command = 48;
    std::uint32_t motor = 64;
    double p_fanout = 0.45;     // Binomial fan-out probability between consecutive layers
    double p_polarity = 0.5;    // P(excitatory)
    double p_fanin = 0.1;       // Binomial fan-in probability when covering orphan targets
    double p_recurrent = 0.45;  // Binomial fan-out probability among command neurons
    double sigma_rand = 0.2;
    std::uint64_t rng_seed = 1;

    std::uint32_t total() const { return sensory + inter + command + motor; }

    void validate(const MeshDims& dims) const {
        detail::require(sensory >= 1 && inter >= 1 && command >= 1 && motor >= 1,
                        "every C. elegans layer needs at least one neuron");
        detail::require(std::uint64_t{sensory} + inter + command + motor <= dims.mesh,
                        "C. elegans layers exceed the mesh size");
        for (double p : {p_fanout, p_polarity, p_fanin, p_recurrent})
            detail::require(p >= 0 && p <= 1, "C. elegans probabilities must lie in [0, 1]");
        detail::require(sigma_rand > 0 && std::isfinite(sigma_rand), "sigma_rand must be > 0");
    }
};

/// Contiguous mesh index ranges of the four layers.
struct LayerLayout {
    struct Range {
        std::uint32_t begin, size;
        std::uint32_t end() const { return begin + size; }
        bool contains(Eigen::Index i) const { return i >= begin && i < end(); }
    };
    Range sensory, inter, command, motor;

    explicit LayerLayout(const CElegansSpec& s)
        : sensory{0, s.sensory},
          inter{s.sensory, s.inter},
          command{s.sensory + s.inter, s.command},
          motor{s.sensory + s.inter + s.command, s.motor} {}

    /// Layer ordinal 0..3 of a mesh index, or -1 for unused neurons.
    int layer_of(Eigen::Index i) const {
        if (sensory.contains(i)) return 0;
        if (inter.contains(i)) return 1;
        if (command.contains(i)) return 2;
        if (motor.contains(i)) return 3;
        return -1;
    }
};

namespace detail {

inline std::vector<std::uint32_t> pick_distinct(std::uint32_t begin, std::uint32_t count, std::uint32_t k, Rng& rng) {
    std::vector<std::uint32_t> pool(count);
    std::iota(pool.begin(), pool.end(), begin);
    // Partial Fisher-Yates.
    for (std::uint32_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::uint32_t> u(i, count - 1);
        std::swap(pool[i], pool[u(rng)]);
    }
    pool.resize(k);
    return pool;
}

inline std::uint32_t binomial(std::uint32_t n, double p, Rng& rng) {
    if (n == 0 || p <= 0) return 0;
    if (p >= 1) return n;
    return std::binomial_distribution<std::uint32_t>(n, p)(rng);
}

} // namespace detail

/// Generates a four-layer wiring inside the mesh. Returns the network and
/// its rigid mask (true exactly on the generated support).
inline Seed gen_celegans(const CElegansSpec& spec, const MeshDims& dims) {
    validate(dims);
    spec.validate(dims);
    Rng rng(spec.rng_seed);
    MeshNetwork net(dims);
    const LayerLayout layout(spec);
    detail::SignedHalfNormal draw(spec.p_polarity, spec.sigma_rand);
    auto synapse = [&] { return draw(rng); };

    const std::array<std::pair<LayerLayout::Range, LayerLayout::Range>, 3> pairs = {
        {{layout.sensory, layout.inter}, {layout.inter, layout.command}, {layout.command, layout.motor}}};
    for (const auto& [src, dst] : pairs) {
        // Binomial fan-out to uniformly chosen distinct targets.
        for (std::uint32_t s = src.begin; s < src.end(); ++s) {
            const std::uint32_t n = detail::binomial(dst.size, spec.p_fanout, rng);
            for (auto t : detail::pick_distinct(dst.begin, dst.size, n, rng)) net.mesh_connect(t, s) = synapse();
        }
        // Every target left without input gets at least one synapse.
        for (std::uint32_t t = dst.begin; t < dst.end(); ++t) {
            bool covered = false;
            for (std::uint32_t s = src.begin; s < src.end() && !covered; ++s) covered = net.mesh_connect(t, s) != 0.0;
            if (covered) continue;
            const std::uint32_t m = std::max<std::uint32_t>(1, detail::binomial(src.size, spec.p_fanin, rng));
            for (auto s : detail::pick_distinct(src.begin, src.size, m, rng)) net.mesh_connect(t, s) = synapse();
        }
    }
    // Recurrence among command neurons.
    for (std::uint32_t s = layout.command.begin; s < layout.command.end(); ++s) {
        const std::uint32_t l = detail::binomial(layout.command.size, spec.p_recurrent, rng);
        for (auto t : detail::pick_distinct(layout.command.begin, layout.command.size, l, rng))
            net.mesh_connect(t, s) = synapse();
    }

    for (std::uint32_t r = layout.sensory.begin; r < layout.sensory.end(); ++r)
        for (std::uint32_t c = 0; c < dims.input; ++c) net.in_connect(r, c) = synapse();
    for (std::uint32_t i = 0; i < spec.total(); ++i) net.mesh_bias[i] = synapse();
    for (std::uint32_t k = 0; k < dims.classes; ++k) {
        for (std::uint32_t m = layout.motor.begin; m < layout.motor.end(); ++m) net.out_connect(k, m) = synapse();
        net.out_bias[k] = synapse();
    }

    StructureMask mask = StructureMask::support_of(net);
    return {std::move(net), std::move(mask)};
}

/// Number of mesh_connect synapses that are neither consecutive-layer
/// feedforward nor command-to-command recurrence.
inline std::size_t layer_order_violations(const MeshNetwork& net, const CElegansSpec& spec) {
    const LayerLayout layout(spec);
    std::size_t bad = 0;
    for (Eigen::Index t = 0; t < net.mesh_connect.rows(); ++t)
        for (Eigen::Index s = 0; s < net.mesh_connect.cols(); ++s) {
            if (net.mesh_connect(t, s) == 0.0) continue;
            const int ls = layout.layer_of(s), lt = layout.layer_of(t);
            const bool feedforward = ls >= 0 && lt == ls + 1;
            const bool recurrent = ls == 2 && lt == 2;
            if (!feedforward && !recurrent) ++bad;
        }
    return bad;
}

/// Inter, command, and motor neurons with no incoming synapse from the
/// preceding layer.
inline std::size_t orphan_targets(const MeshNetwork& net, const CElegansSpec& spec) {
    const LayerLayout layout(spec);
    const std::array<std::pair<LayerLayout::Range, LayerLayout::Range>, 3> pairs = {
        {{layout.sensory, layout.inter}, {layout.inter, layout.command}, {layout.command, layout.motor}}};
    std::size_t orphans = 0;
    for (const auto& [src, dst] : pairs)
        for (std::uint32_t t = dst.begin; t < dst.end(); ++t)
            if (net.mesh_connect.block(t, src.begin, 1, src.size).isZero(0.0)) ++orphans;
    return orphans;
}

inline double nonzero_fraction(const Matrix& m) {
    return static_cast<double>((m.array() != 0.0).count()) / static_cast<double>(m.size());
}

} // namespace mnn
