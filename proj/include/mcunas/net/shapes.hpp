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
#ifndef MCUNAS_NET_SHAPES_HPP
#define MCUNAS_NET_SHAPES_HPP

#include <cmath>
#include <vector>

#include "../graph.hpp"
#include "../tensor.hpp"

namespace mcunas {
namespace net {

// Per-sample value shapes: {C,H,W} for feature maps, {F} for vectors.

inline bool is_map(const Shape& s) { return s.size() == 3; }

inline int64_t flat_features(const Shape& s) { return shape_size(s); }

inline int downsampled_channels(double fraction, int in_channels)
{
    const int c = static_cast<int>(std::ceil(fraction * in_channels));
    return std::max(1, c);
}

inline int conv_out_extent(int in, int kernel, Padding padding)
{
    if (padding == Padding::Same)
        return in;
    if (in < kernel)
        throw ShapeError("valid padding needs extent >= kernel, got "
                         + std::to_string(in) + " < " + std::to_string(kernel));
    return in - kernel + 1;
}

inline Shape infer_node_shape(const GraphNode& n, const std::vector<Shape>& ins)
{
    auto fail = [&](const std::string& why) {
        std::string msg = "node '" + n.name + "' (" + layer_kind_name(n.spec.kind) + "): " + why
                          + " [inputs:";
        for (const Shape& s : ins)
            msg += " " + shape_str(s);
        msg += "]";
        throw ShapeError(msg);
    };
    const LayerSpec& sp = n.spec;
    switch (sp.kind) {
    case LayerKind::Conv2D:
    case LayerKind::SeparableConv2D: {
        if (ins.size() != 1 || !is_map(ins[0]))
            fail("expects a single feature-map input");
        const Shape& x = ins[0];
        return {sp.out_channels, conv_out_extent(x[1], sp.kernel, sp.padding),
                conv_out_extent(x[2], sp.kernel, sp.padding)};
    }
    case LayerKind::DownsampledConv2D: {
        if (ins.size() != 1 || !is_map(ins[0]))
            fail("expects a single feature-map input");
        const Shape& x = ins[0];
        return {sp.out_channels, conv_out_extent(x[1], sp.kernel, sp.padding),
                conv_out_extent(x[2], sp.kernel, sp.padding)};
    }
    case LayerKind::FullyConnected:
        if (ins.size() != 1)
            fail("expects a single input");
        return {sp.out_channels};
    case LayerKind::BatchNorm:
    case LayerKind::ReLU:
        if (ins.size() != 1)
            fail("expects a single input");
        return ins[0];
    case LayerKind::MaxPool: {
        if (ins.size() != 1 || !is_map(ins[0]))
            fail("expects a single feature-map input");
        const Shape& x = ins[0];
        const int oh = x[1] / sp.pool;
        const int ow = x[2] / sp.pool;
        if (oh < 1 || ow < 1)
            fail("pool window " + std::to_string(sp.pool) + " collapses spatial extent");
        return {x[0], oh, ow};
    }
    case LayerKind::MergeSum:
    case LayerKind::MergeConcat: {
        if (ins.size() < 2)
            fail("merge needs at least two operands");
        bool all_maps = true;
        for (const Shape& s : ins)
            all_maps = all_maps && is_map(s);
        if (all_maps) {
            for (const Shape& s : ins)
                if (s[1] != ins[0][1] || s[2] != ins[0][2])
                    fail("operand spatial extents differ");
            int c = 0;
            for (const Shape& s : ins)
                c = sp.kind == LayerKind::MergeConcat ? c + s[0] : std::max(c, s[0]);
            return {c, ins[0][1], ins[0][2]};
        }
        // mixed or vector operands merge as flattened features
        int64_t f = 0;
        for (const Shape& s : ins) {
            const int64_t fs = flat_features(s);
            f = sp.kind == LayerKind::MergeConcat ? f + fs : std::max(f, fs);
        }
        return {static_cast<int>(f)};
    }
    case LayerKind::InputDownsample: {
        if (ins.size() != 1 || !is_map(ins[0]))
            fail("expects a single feature-map input");
        Shape x = ins[0];
        if (sp.depth_pool)
            x[0] = 1;
        if (sp.pool > 1) {
            x[1] /= sp.pool;
            x[2] /= sp.pool;
            if (x[1] < 1 || x[2] < 1)
                fail("input downsampling rate collapses spatial extent");
        }
        return x;
    }
    }
    fail("unknown layer kind");
    return {};
}

/// Per-sample output shape of every node; index = node id.
inline std::vector<Shape> infer_shapes(const ArchGraph& graph, const Shape& input_shape)
{
    if (input_shape.size() != 3)
        throw ShapeError("graph input must be a C,H,W feature map, got " + shape_str(input_shape));
    std::vector<Shape> out(static_cast<size_t>(graph.size()));
    for (const GraphNode& n : graph.nodes()) {
        std::vector<Shape> ins;
        ins.reserve(n.inputs.size());
        for (int in : n.inputs)
            ins.push_back(in == kGraphInput ? input_shape : out[static_cast<size_t>(in)]);
        out[static_cast<size_t>(n.id)] = infer_node_shape(n, ins);
    }
    return out;
}

} // namespace net
} // namespace mcunas

#endif
