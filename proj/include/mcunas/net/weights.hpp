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
#ifndef MCUNAS_NET_WEIGHTS_HPP
#define MCUNAS_NET_WEIGHTS_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "../common.hpp"
#include "../graph.hpp"
#include "../tensor.hpp"
#include "shapes.hpp"

namespace mcunas {
namespace net {

// Tensor naming per node:
//   Conv2D            w [oc,ic,k,k], b [oc]
//   DownsampledConv2D rw [mid,ic], rb [mid], w [oc,mid,k,k], b [oc]
//   SeparableConv2D   dw [ic,k,k], pw [oc,ic], b [oc]
//   FullyConnected    w [out,in], b [out]
//   BatchNorm         gamma [c], beta [c], rmean [c], rvar [c]   (r* = buffers)

inline bool is_buffer_tensor(const std::string& name)
{
    return name == "rmean" || name == "rvar";
}

/// Weight tensors that carry a variational posterior (biases and batch-norm
/// affine parameters stay deterministic).
inline bool is_sampled_tensor(const std::string& name)
{
    return name == "w" || name == "rw" || name == "dw" || name == "pw";
}

template <typename Scalar>
struct NodeWeights {
    std::vector<std::pair<std::string, Tensor<Scalar>>> tensors;

    Tensor<Scalar>& add(const std::string& name, Tensor<Scalar> t)
    {
        tensors.emplace_back(name, std::move(t));
        return tensors.back().second;
    }
    bool has(const std::string& name) const { return find(name) != nullptr; }
    const Tensor<Scalar>* find(const std::string& name) const
    {
        for (const auto& [n, t] : tensors)
            if (n == name)
                return &t;
        return nullptr;
    }
    Tensor<Scalar>* find(const std::string& name)
    {
        for (auto& [n, t] : tensors)
            if (n == name)
                return &t;
        return nullptr;
    }
    const Tensor<Scalar>& get(const std::string& name) const
    {
        const Tensor<Scalar>* t = find(name);
        if (!t)
            throw Error("missing weight tensor '" + name + "'");
        return *t;
    }
    Tensor<Scalar>& get(const std::string& name)
    {
        Tensor<Scalar>* t = find(name);
        if (!t)
            throw Error("missing weight tensor '" + name + "'");
        return *t;
    }

    /// nonzeros over parameters (buffers excluded)
    int64_t nonzeros() const
    {
        int64_t n = 0;
        for (const auto& [name, t] : tensors)
            if (!is_buffer_tensor(name))
                n += t.nonzeros();
        return n;
    }
};

template <typename Scalar>
struct WeightStore {
    std::map<int, NodeWeights<Scalar>> by_node;
    int bits_per_value = 32;

    NodeWeights<Scalar>& at(int id) { return by_node.at(id); }
    const NodeWeights<Scalar>& at(int id) const { return by_node.at(id); }
    bool has(int id) const { return by_node.count(id) != 0; }

    int64_t nonzeros() const
    {
        int64_t n = 0;
        for (const auto& [id, nw] : by_node)
            n += nw.nonzeros();
        return n;
    }

    template <typename Other>
    WeightStore<Other> cast() const
    {
        WeightStore<Other> out;
        out.bits_per_value = bits_per_value;
        for (const auto& [id, nw] : by_node) {
            NodeWeights<Other>& o = out.by_node[id];
            for (const auto& [name, t] : nw.tensors)
                o.add(name, t.template cast<Other>());
        }
        return out;
    }
};

/// Shapes of the weight tensors a node requires given its input shape.
inline std::vector<std::pair<std::string, Shape>> weight_shapes(const GraphNode& n,
                                                                const Shape& in_shape)
{
    const LayerSpec& sp = n.spec;
    switch (sp.kind) {
    case LayerKind::Conv2D:
        return {{"w", {sp.out_channels, in_shape[0], sp.kernel, sp.kernel}},
                {"b", {sp.out_channels}}};
    case LayerKind::DownsampledConv2D: {
        const int mid = downsampled_channels(sp.downsample_fraction, in_shape[0]);
        return {{"rw", {mid, in_shape[0]}},
                {"rb", {mid}},
                {"w", {sp.out_channels, mid, sp.kernel, sp.kernel}},
                {"b", {sp.out_channels}}};
    }
    case LayerKind::SeparableConv2D:
        return {{"dw", {in_shape[0], sp.kernel, sp.kernel}},
                {"pw", {sp.out_channels, in_shape[0]}},
                {"b", {sp.out_channels}}};
    case LayerKind::FullyConnected:
        return {{"w", {sp.out_channels, static_cast<int>(flat_features(in_shape))}},
                {"b", {sp.out_channels}}};
    case LayerKind::BatchNorm: {
        const int c = is_map(in_shape) ? in_shape[0] : in_shape.back();
        return {{"gamma", {c}}, {"beta", {c}}, {"rmean", {c}}, {"rvar", {c}}};
    }
    default:
        return {};
    }
}

inline int64_t tensor_fan_in(LayerKind kind, const std::string& name, const Shape& shape)
{
    switch (kind) {
    case LayerKind::Conv2D:
        return static_cast<int64_t>(shape[1]) * shape[2] * shape[3];
    case LayerKind::DownsampledConv2D:
        return name == "rw" ? shape[1] : static_cast<int64_t>(shape[1]) * shape[2] * shape[3];
    case LayerKind::SeparableConv2D:
        return name == "dw" ? static_cast<int64_t>(shape[1]) * shape[2] : shape[1];
    case LayerKind::FullyConnected:
        return shape[1];
    default:
        return 1;
    }
}

/// Fan-in-scaled uniform init for weight tensors, zeros for biases, identity
/// for batch-norm. Deterministic given the rng stream.
template <typename Scalar>
WeightStore<Scalar> init_weights(const ArchGraph& graph, const Shape& input_shape, Rng rng)
{
    const std::vector<Shape> shapes = infer_shapes(graph, input_shape);
    WeightStore<Scalar> store;
    for (const GraphNode& n : graph.nodes()) {
        if (!is_weighted(n.spec.kind))
            continue;
        const Shape in_shape =
            n.inputs[0] == kGraphInput ? input_shape : shapes[static_cast<size_t>(n.inputs[0])];
        NodeWeights<Scalar>& nw = store.by_node[n.id];
        Rng node_rng = rng.derive(n.name);
        for (const auto& [name, shape] : weight_shapes(n, in_shape)) {
            Tensor<Scalar> t(shape);
            if (name == "gamma" || name == "rvar") {
                t.array().setConstant(Scalar(1));
            } else if (is_sampled_tensor(name)) {
                const double a = std::sqrt(6.0 / static_cast<double>(
                                                     tensor_fan_in(n.spec.kind, name, shape)));
                for (int64_t i = 0; i < t.size(); ++i)
                    t.at(i) = static_cast<Scalar>(node_rng.uniform(-a, a));
            }
            // biases, beta, rmean stay zero
            nw.add(name, std::move(t));
        }
    }
    return store;
}

} // namespace net
} // namespace mcunas

#endif
