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
#include <mcunas/mem/footprint.hpp>

#include <cmath>

namespace mcunas {
namespace mem {

namespace {

struct Dims {
    bool map = false;
    int64_t c = 0, h = 0, w = 0; // map extents
    int64_t f = 0;               // flat element count

    static Dims from_map(int64_t c, int64_t h, int64_t w)
    {
        return {true, c, h, w, c * h * w};
    }
    static Dims from_vec(int64_t f) { return {false, 0, 0, 0, f}; }
};

Dims node_dims(const GraphNode& n, const std::vector<Dims>& ins)
{
    const LayerSpec& sp = n.spec;
    auto conv_extent = [&](int64_t in) {
        return sp.padding == Padding::Same ? in : in - sp.kernel + 1;
    };
    switch (sp.kind) {
    case LayerKind::Conv2D:
    case LayerKind::DownsampledConv2D:
    case LayerKind::SeparableConv2D: {
        const Dims& x = ins[0];
        return Dims::from_map(sp.out_channels, conv_extent(x.h), conv_extent(x.w));
    }
    case LayerKind::FullyConnected:
        return Dims::from_vec(sp.out_channels);
    case LayerKind::BatchNorm:
    case LayerKind::ReLU:
        return ins[0];
    case LayerKind::MaxPool:
        return Dims::from_map(ins[0].c, ins[0].h / sp.pool, ins[0].w / sp.pool);
    case LayerKind::MergeSum:
    case LayerKind::MergeConcat: {
        bool all_maps = true;
        for (const Dims& d : ins)
            all_maps = all_maps && d.map;
        if (all_maps) {
            int64_t c = 0;
            for (const Dims& d : ins)
                c = sp.kind == LayerKind::MergeConcat ? c + d.c : std::max(c, d.c);
            return Dims::from_map(c, ins[0].h, ins[0].w);
        }
        int64_t f = 0;
        for (const Dims& d : ins)
            f = sp.kind == LayerKind::MergeConcat ? f + d.f : std::max(f, d.f);
        return Dims::from_vec(f);
    }
    case LayerKind::InputDownsample: {
        Dims d = ins[0];
        if (sp.depth_pool)
            d.c = 1;
        if (sp.pool > 1) {
            d.h /= sp.pool;
            d.w /= sp.pool;
        }
        d.f = d.c * d.h * d.w;
        return d;
    }
    }
    throw Error("unhandled layer kind in memory model");
}

std::vector<Dims> propagate(const ArchGraph& graph, const Shape& input_shape)
{
    const Dims input = Dims::from_map(input_shape[0], input_shape[1], input_shape[2]);
    std::vector<Dims> dims(static_cast<size_t>(graph.size()));
    for (const GraphNode& n : graph.nodes()) {
        std::vector<Dims> ins;
        ins.reserve(n.inputs.size());
        for (int in : n.inputs)
            ins.push_back(in == kGraphInput ? input : dims[static_cast<size_t>(in)]);
        dims[static_cast<size_t>(n.id)] = node_dims(n, ins);
    }
    return dims;
}

} // namespace

std::vector<int64_t> static_output_sizes(const ArchGraph& graph, const Shape& input_shape)
{
    std::vector<Dims> dims = propagate(graph, input_shape);
    std::vector<int64_t> out(dims.size());
    for (size_t i = 0; i < dims.size(); ++i)
        out[i] = dims[i].f;
    return out;
}

std::vector<LayerFootprint> footprints(const ArchGraph& graph, const Shape& input_shape,
                                       const std::vector<int64_t>& weight_nonzeros)
{
    graph.check_structure();
    const std::vector<int64_t> sizes = static_output_sizes(graph, input_shape);
    const int64_t input_size =
        static_cast<int64_t>(input_shape[0]) * input_shape[1] * input_shape[2];

    std::vector<int> last_use(static_cast<size_t>(graph.size()), -1);
    int input_last_use = -1;
    for (const GraphNode& n : graph.nodes())
        for (int in : n.inputs) {
            if (in == kGraphInput)
                input_last_use = std::max(input_last_use, n.id);
            else
                last_use[static_cast<size_t>(in)] =
                    std::max(last_use[static_cast<size_t>(in)], n.id);
        }

    std::vector<LayerFootprint> out;
    out.reserve(static_cast<size_t>(graph.size()));
    for (const GraphNode& n : graph.nodes()) {
        LayerFootprint fp;
        fp.node = n.id;
        fp.name = n.name;
        fp.y_count = sizes[static_cast<size_t>(n.id)];
        fp.w_nnz = weight_nonzeros[static_cast<size_t>(n.id)];
        int64_t x = input_last_use >= n.id ? input_size : 0;
        for (int t = 0; t < n.id; ++t)
            if (last_use[static_cast<size_t>(t)] >= n.id)
                x += sizes[static_cast<size_t>(t)];
        fp.x_count = x;
        out.push_back(fp);
    }
    return out;
}

} // namespace mem
} // namespace mcunas
