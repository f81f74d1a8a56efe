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
#ifndef MCUNAS_GRAPH_HPP
#define MCUNAS_GRAPH_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "common.hpp"

namespace mcunas {

enum class LayerKind {
    Conv2D,
    DownsampledConv2D,
    SeparableConv2D,
    FullyConnected,
    BatchNorm,
    ReLU,
    MaxPool,
    MergeSum,
    MergeConcat,
    InputDownsample,
};

inline const char* layer_kind_name(LayerKind k)
{
    switch (k) {
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::DownsampledConv2D: return "DownsampledConv2D";
    case LayerKind::SeparableConv2D: return "SeparableConv2D";
    case LayerKind::FullyConnected: return "FullyConnected";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::MaxPool: return "MaxPool";
    case LayerKind::MergeSum: return "MergeSum";
    case LayerKind::MergeConcat: return "MergeConcat";
    case LayerKind::InputDownsample: return "InputDownsample";
    }
    return "?";
}

enum class Padding { Same, Valid };

/// One typed layer node. Only the fields applicable to `kind` are meaningful:
/// kernel/out_channels/padding for the convolution kinds and FullyConnected
/// (out_channels doubles as the FC width), pool for MaxPool and the spatial
/// rate of InputDownsample, downsample_fraction for DownsampledConv2D,
/// depth_pool for InputDownsample.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    int kernel = 0;
    int out_channels = 0;
    Padding padding = Padding::Same;
    int pool = 0;
    double downsample_fraction = 0.0;
    bool depth_pool = false;
};

/// Input id of the external batch tensor.
constexpr int kGraphInput = -1;

struct GraphNode {
    int id = 0;
    std::string name;       // stable role name, e.g. "b1c2", "fc-left"
    LayerSpec spec;
    std::vector<int> inputs; // node ids, or kGraphInput
};

/// Directed acyclic layer graph. Node ids are required to be a topological
/// order (producers precede consumers), which fixes the execution order used
/// by both the runtime and the static memory model.
class ArchGraph {
public:
    int add_node(std::string name, LayerSpec spec, std::vector<int> inputs)
    {
        const int id = static_cast<int>(nodes_.size());
        for (int in : inputs) {
            if (in != kGraphInput && (in < 0 || in >= id))
                throw GraphError("node '" + name + "': input id " + std::to_string(in)
                                 + " is not an earlier node");
        }
        nodes_.push_back(GraphNode{id, std::move(name), spec, std::move(inputs)});
        return id;
    }

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const GraphNode& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
    GraphNode& node(int id) { return nodes_[static_cast<size_t>(id)]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    int output_node() const
    {
        check_structure();
        return output_;
    }

    /// node ids that consume node `id` (or the external input for kGraphInput)
    std::vector<int> consumers(int id) const
    {
        std::vector<int> out;
        for (const GraphNode& n : nodes_)
            for (int in : n.inputs)
                if (in == id)
                    out.push_back(n.id);
        return out;
    }

    const GraphNode* find(const std::string& name) const
    {
        for (const GraphNode& n : nodes_)
            if (n.name == name)
                return &n;
        return nullptr;
    }

    /// Structural validation: non-empty, single sink, every node reachable
    /// from the external input, every non-source node has inputs.
    void check_structure() const
    {
        if (nodes_.empty())
            throw GraphError("empty graph");
        std::vector<int> sink_count(nodes_.size(), 0);
        bool touches_input = false;
        for (const GraphNode& n : nodes_) {
            if (n.inputs.empty())
                throw GraphError("node '" + n.name + "' has no inputs");
            for (int in : n.inputs) {
                if (in == kGraphInput)
                    touches_input = true;
                else
                    sink_count[static_cast<size_t>(in)]++;
            }
        }
        if (!touches_input)
            throw GraphError("no node consumes the graph input");
        int sinks = 0;
        int sink_id = -1;
        for (const GraphNode& n : nodes_)
            if (sink_count[static_cast<size_t>(n.id)] == 0) {
                ++sinks;
                sink_id = n.id;
            }
        if (sinks != 1)
            throw GraphError("graph must have exactly one output node, found "
                             + std::to_string(sinks));
        // reachability from the external input
        std::vector<char> reach(nodes_.size(), 0);
        for (const GraphNode& n : nodes_) {
            bool r = false;
            for (int in : n.inputs)
                r = r || in == kGraphInput || reach[static_cast<size_t>(in)];
            reach[static_cast<size_t>(n.id)] = r ? 1 : 0;
        }
        for (const GraphNode& n : nodes_)
            if (!reach[static_cast<size_t>(n.id)])
                throw GraphError("node '" + n.name + "' unreachable from input");
        output_ = sink_id;
    }

    /// Stable structural hash over node kinds, parameters and wiring.
    uint64_t structure_hash() const
    {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const GraphNode& n : nodes_) {
            h = fnv1a(n.name, h);
            h = hash_combine(h, static_cast<uint64_t>(n.spec.kind));
            h = hash_combine(h, static_cast<uint64_t>(n.spec.kernel));
            h = hash_combine(h, static_cast<uint64_t>(n.spec.out_channels));
            h = hash_combine(h, static_cast<uint64_t>(n.spec.padding));
            h = hash_combine(h, static_cast<uint64_t>(n.spec.pool));
            h = hash_combine(h, static_cast<uint64_t>(n.spec.depth_pool));
            h = hash_combine(h, static_cast<uint64_t>(n.spec.downsample_fraction * 1e6));
            for (int in : n.inputs)
                h = hash_combine(h, static_cast<uint64_t>(in + 1));
        }
        return h;
    }

private:
    std::vector<GraphNode> nodes_;
    mutable int output_ = -1;
};

inline bool is_weighted(LayerKind k)
{
    switch (k) {
    case LayerKind::Conv2D:
    case LayerKind::DownsampledConv2D:
    case LayerKind::SeparableConv2D:
    case LayerKind::FullyConnected:
    case LayerKind::BatchNorm:
        return true;
    default:
        return false;
    }
}

/// Kinds whose weights take part in variational pruning.
inline bool is_prunable(LayerKind k)
{
    switch (k) {
    case LayerKind::Conv2D:
    case LayerKind::DownsampledConv2D:
    case LayerKind::SeparableConv2D:
    case LayerKind::FullyConnected:
        return true;
    default:
        return false;
    }
}

} // namespace mcunas

#endif
