#pragma once

// Maps each GA network kind to its initial seeds and to the source of fresh
// random individuals.

#include <vector>

#include "mnn/evolution.hpp"
#include "mnn/mlp.hpp"
#include "mnn/topology.hpp"

namespace mnn {

struct RunPlan {
    std::vector<Seed> seeds;
    FreshSource fresh;
};

/// True for kinds whose seeds include an embedded MLP.
inline bool needs_mlp(NetworkKind kind) {
    return kind == NetworkKind::DnnSeeded || kind == NetworkKind::CElegansDnnSeeded;
}

inline bool uses_celegans(NetworkKind kind) {
    return kind == NetworkKind::CElegansRigid || kind == NetworkKind::CElegansSeeded ||
           kind == NetworkKind::CElegansDnnSeeded;
}

/// `mlp` must be non-null for kinds where needs_mlp() holds.
///  random              : no seeds, unconstrained fresh nets
///  dnn_seeded          : embedded MLP
///  celegans_rigid      : wiring with its support mask; fresh nets confined to it
///  celegans_seeded     : wiring with an all-true mask
///  celegans_dnn_seeded : wiring (all-true) plus embedded MLP
inline RunPlan plan_run(NetworkKind kind, const MeshDims& dims, const CElegansSpec& worm, const Mlp* mlp) {
    RunPlan plan{{}, FreshSource{dims, std::nullopt}};
    if (kind == NetworkKind::Dnn) throw InvalidArgument("the dnn kind is trained by backprop, not evolved");
    if (needs_mlp(kind) && mlp == nullptr) throw InvalidArgument(to_string(kind) + " needs a trained MLP");

    if (uses_celegans(kind)) {
        Seed wiring = gen_celegans(worm, dims);
        if (kind == NetworkKind::CElegansRigid)
            plan.fresh.confine = wiring.mask;
        else
            wiring.mask = StructureMask::all(dims);
        plan.seeds.push_back(std::move(wiring));
    }
    if (needs_mlp(kind)) {
        Seed embedded = embed_mlp(*mlp, dims);
        detail::require(embedded.network.settle_steps == dims.settle_steps,
                        "settle_steps is smaller than the MLP hidden-layer count");
        plan.seeds.push_back(std::move(embedded));
    }
    return plan;
}

} // namespace mnn
