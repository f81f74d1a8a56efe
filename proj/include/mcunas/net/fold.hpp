/*
 * Copyright 2026 The mcunas Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MCUNAS_NET_FOLD_HPP
#define MCUNAS_NET_FOLD_HPP

#include "forward.hpp"

namespace mcunas {
namespace net {

template <typename Scalar>
struct FoldedNet {
    ArchGraph graph;
    WeightStore<Scalar> store;
};

inline bool bn_foldable_into(LayerKind k)
{
    return k == LayerKind::Conv2D || k == LayerKind::DownsampledConv2D
           || k == LayerKind::SeparableConv2D || k == LayerKind::FullyConnected;
}

/// Fold inference-time batch-norm (running statistics) into the producing
/// layer's weights and biases, removing the BatchNorm nodes. BatchNorm nodes
/// whose producer is not a weighted layer are kept as-is.
template <typename Scalar>
FoldedNet<Scalar> fold_batchnorm(const ArchGraph& graph, const WeightStore<Scalar>& store)
{
    // decide which BN nodes fold into their producer
    std::vector<int> fold_into(static_cast<size_t>(graph.size()), -1);
    for (const GraphNode& n : graph.nodes()) {
        if (n.spec.kind != LayerKind::BatchNorm)
            continue;
        const int p = n.inputs[0];
        if (p == kGraphInput)
            continue;
        if (bn_foldable_into(graph.node(p).spec.kind) && graph.consumers(p).size() == 1)
            fold_into[static_cast<size_t>(n.id)] = p;
    }

    FoldedNet<Scalar> out;
    out.store.bits_per_value = store.bits_per_value;
    std::vector<int> remap(static_cast<size_t>(graph.size()), -1);
    for (const GraphNode& n : graph.nodes()) {
        if (fold_into[static_cast<size_t>(n.id)] >= 0) {
            // node disappears; consumers see its producer
            remap[static_cast<size_t>(n.id)] = remap[static_cast<size_t>(n.inputs[0])];
            continue;
        }
        std::vector<int> inputs;
        inputs.reserve(n.inputs.size());
        for (int in : n.inputs)
            inputs.push_back(in == kGraphInput ? kGraphInput : remap[static_cast<size_t>(in)]);
        const int id = out.graph.add_node(n.name, n.spec, std::move(inputs));
        remap[static_cast<size_t>(n.id)] = id;
        if (store.has(n.id))
            out.store.by_node[id] = store.at(n.id);
    }

    for (const GraphNode& n : graph.nodes()) {
        const int target = fold_into[static_cast<size_t>(n.id)];
        if (target < 0)
            continue;
        const NodeWeights<Scalar>& bn = store.at(n.id);
        const Tensor<Scalar>& gamma = bn.get("gamma");
        const Tensor<Scalar>& beta = bn.get("beta");
        const Tensor<Scalar>& rmean = bn.get("rmean");
        const Tensor<Scalar>& rvar = bn.get("rvar");
        NodeWeights<Scalar>& pw = out.store.at(remap[static_cast<size_t>(target)]);
        const LayerKind pk = graph.node(target).spec.kind;
        const std::string wname = pk == LayerKind::SeparableConv2D ? "pw" : "w";
        Tensor<Scalar>& w = pw.get(wname);
        Tensor<Scalar>& b = pw.get("b");
        const int oc = w.extent(0);
        const int64_t per_out = w.size() / oc;
        for (int c = 0; c < oc; ++c) {
            const Scalar scale =
                gamma(c) / std::sqrt(rvar(c) + static_cast<Scalar>(kBnEps));
            Scalar* row = w.data() + static_cast<int64_t>(c) * per_out;
            for (int64_t i = 0; i < per_out; ++i)
                row[i] *= scale;
            b(c) = b(c) * scale + beta(c) - rmean(c) * scale;
        }
    }
    return out;
}

} // namespace net
} // namespace mcunas

#endif
