#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "mnn/dataset.hpp"
#include "mnn/rng.hpp"

namespace mnn {

struct BlobSpec {
    std::uint32_t samples = 300;
    std::uint32_t dimension = 512;
    double center_scale = 1.0;  // per-coordinate std of the class centers
    double noise = 1.0;         // per-coordinate std around a center
    std::uint64_t rng_seed = 1;
};

/// Three Gaussian blobs with labels -1, 0, +1 assigned round-robin, so the
/// classes are balanced to within one sample.
inline Dataset make_blobs(const BlobSpec& spec) {
    detail::require(spec.samples >= 1 && spec.dimension >= 1, "blob spec needs samples and dimension");
    Rng rng(spec.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix centers(spec.dimension, 3);
    for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = spec.center_scale * normal(rng);

    Dataset ds(spec.dimension);
    for (std::uint32_t i = 0; i < spec.samples; ++i) {
        Sample s;
        s.id = "blob-" + std::to_string(i);
        s.label = label_from_index(i % 3);
        s.embedding = centers.col(i % 3);
        for (Eigen::Index k = 0; k < s.embedding.size(); ++k) s.embedding[k] += spec.noise * normal(rng);
        ds.add(std::move(s));
    }
    return ds;
}

} // namespace mnn
