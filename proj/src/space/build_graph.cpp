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
#include <mcunas/space/build_graph.hpp>

#include <mcunas/net/shapes.hpp>

namespace mcunas {
namespace space {

namespace {

LayerKind conv_kind(const std::string& type)
{
    if (type == "Conv2D")
        return LayerKind::Conv2D;
    if (type == "DownsampledConv2D")
        return LayerKind::DownsampledConv2D;
    if (type == "SeparableConv2D")
        return LayerKind::SeparableConv2D;
    throw Error("unknown layer type '" + type + "'");
}

class Builder {
public:
    Builder(const Configuration& config, const Shape& input_shape)
        : config_(config), input_shape_(input_shape)
    {
    }

    Shape shape_of(int id) const
    {
        return id == kGraphInput ? input_shape_ : shapes_[static_cast<size_t>(id)];
    }

    int add(const std::string& name, LayerSpec spec, std::vector<int> inputs)
    {
        std::vector<Shape> ins;
        ins.reserve(inputs.size());
        for (int in : inputs)
            ins.push_back(shape_of(in));
        const int id = graph_.add_node(name, spec, std::move(inputs));
        GraphNode probe = graph_.node(id);
        shapes_.push_back(net::infer_node_shape(probe, ins));
        return id;
    }

    int fc_width(double fraction, int64_t budget, int64_t fan_in) const
    {
        const int64_t w = std::llround(fraction * static_cast<double>(budget)
                                       / static_cast<double>(fan_in));
        return static_cast<int>(std::max<int64_t>(1, w));
    }

    ArchGraph run(int num_classes)
    {
        const Configuration& c = config_;
        int cur = kGraphInput;

        const bool ds_depth = c.get_bool("downsample-input-in-depth");
        const bool ds_space = c.get_bool("downsample-input");
        if (ds_depth || ds_space) {
            LayerSpec sp{LayerKind::InputDownsample};
            sp.depth_pool = ds_depth;
            sp.pool = ds_space ? static_cast<int>(c.get_int("input-downsampling-rate")) : 0;
            cur = add("in-ds", sp, {cur});
        }
        const int pre_block1 = cur;

        const bool use_bn = c.get_bool("batch-norm");
        const bool residual = c.get_bool("residual-connections");
        const int blocks = static_cast<int>(c.get_int("num-conv-blocks"));
        int block1_out = -1;
        for (int k = 1; k <= blocks; ++k) {
            const int layers = static_cast<int>(c.get_int(block_param("num-conv-layers", k)));
            int pair_in = cur;
            for (int l = 1; l <= layers; ++l) {
                const std::string base = "b" + std::to_string(k) + "c" + std::to_string(l);
                if (l % 2 == 1)
                    pair_in = cur;
                LayerSpec sp;
                sp.kind = conv_kind(c.get_cat(layer_param("layer-type", k, l)));
                sp.kernel = static_cast<int>(c.get_int(layer_param("kernel-size", k, l)));
                sp.out_channels = static_cast<int>(c.get_int(layer_param("num-filters", k, l)));
                sp.padding = Padding::Same;
                if (sp.kind == LayerKind::DownsampledConv2D)
                    sp.downsample_fraction = c.get_real(layer_param("downsample", k, l));
                cur = add(base, sp, {cur});
                if (use_bn)
                    cur = add(base + "-bn", {LayerKind::BatchNorm}, {cur});
                cur = add(base + "-relu", {LayerKind::ReLU}, {cur});
                if (residual && l % 2 == 0) {
                    const std::string rname =
                        "b" + std::to_string(k) + "res" + std::to_string(l / 2);
                    cur = add(rname, {LayerKind::MergeSum}, {pair_in, cur});
                }
            }
            LayerSpec pool{LayerKind::MaxPool};
            pool.pool = static_cast<int>(c.get_int(block_param("pool-window", k)));
            cur = add("b" + std::to_string(k) + "-pool", pool, {cur});
            if (k == 1)
                block1_out = cur;
        }

        const int64_t budget =
            static_cast<int64_t>(std::llround(c.get_real("total-fc-layer-weights")));
        int main_tail = cur;
        if (c.get_int("num-fc-layers") == 1) {
            const int64_t fan_in = shape_size(shape_of(cur));
            LayerSpec fc{LayerKind::FullyConnected};
            fc.out_channels =
                fc_width(c.get_real("weight-fraction-main-branch"), budget, fan_in);
            main_tail = add("fc-main", fc, {cur});
            main_tail = add("fc-main-relu", {LayerKind::ReLU}, {main_tail});
        }

        std::vector<int> merge_in = {main_tail};
        if (c.get_bool("left-branch")) {
            const int64_t fan_in = shape_size(shape_of(block1_out));
            LayerSpec fc{LayerKind::FullyConnected};
            fc.out_channels =
                fc_width(c.get_real("weight-fraction-left-branch"), budget, fan_in);
            int b = add("fc-left", fc, {block1_out});
            b = add("fc-left-relu", {LayerKind::ReLU}, {b});
            merge_in.push_back(b);
        }
        if (c.get_bool("right-branch")) {
            const int64_t fan_in = shape_size(shape_of(pre_block1));
            LayerSpec fc{LayerKind::FullyConnected};
            fc.out_channels =
                fc_width(c.get_real("weight-fraction-right-branch"), budget, fan_in);
            int b = add("fc-right", fc, {pre_block1});
            b = add("fc-right-relu", {LayerKind::ReLU}, {b});
            merge_in.push_back(b);
        }
        if (merge_in.size() > 1) {
            const LayerKind mk = c.get_cat("merge-type") == "Sum" ? LayerKind::MergeSum
                                                                  : LayerKind::MergeConcat;
            cur = add("merge", {mk}, merge_in);
        } else {
            cur = main_tail;
        }

        LayerSpec out{LayerKind::FullyConnected};
        out.out_channels = num_classes;
        add("fc-out", out, {cur});
        graph_.check_structure();
        return graph_;
    }

private:
    const Configuration& config_;
    Shape input_shape_;
    ArchGraph graph_;
    std::vector<Shape> shapes_;
};

} // namespace

ArchGraph build_graph(const SearchSpaceDescriptor& space, const Configuration& config,
                      const Shape& input_shape, int num_classes)
{
    require_valid(space, config);
    if (num_classes < 2)
        throw Error("need at least two classes");
    try {
        return Builder(config, input_shape).run(num_classes);
    } catch (const ShapeError& e) {
        throw GraphError(std::string("configuration does not fit the input: ") + e.what());
    }
}

int64_t analytic_weight_count(const ArchGraph& graph, const Shape& input_shape,
                              bool include_biases, bool include_batchnorm)
{
    const std::vector<Shape> shapes = net::infer_shapes(graph, input_shape);
    int64_t total = 0;
    for (const GraphNode& n : graph.nodes()) {
        const Shape in = n.inputs[0] == kGraphInput ? input_shape
                                                    : shapes[static_cast<size_t>(n.inputs[0])];
        const int64_t ic = in.size() == 3 ? in[0] : 0;
        const int64_t flat = shape_size(in);
        const int64_t oc = n.spec.out_channels;
        const int64_t k2 = static_cast<int64_t>(n.spec.kernel) * n.spec.kernel;
        switch (n.spec.kind) {
        case LayerKind::Conv2D:
            total += oc * ic * k2 + (include_biases ? oc : 0);
            break;
        case LayerKind::DownsampledConv2D: {
            const int64_t mid =
                net::downsampled_channels(n.spec.downsample_fraction, static_cast<int>(ic));
            total += mid * ic + oc * mid * k2 + (include_biases ? mid + oc : 0);
            break;
        }
        case LayerKind::SeparableConv2D:
            total += ic * k2 + oc * ic + (include_biases ? oc : 0);
            break;
        case LayerKind::FullyConnected:
            total += oc * flat + (include_biases ? oc : 0);
            break;
        case LayerKind::BatchNorm:
            if (include_batchnorm)
                total += 2 * (in.size() == 3 ? in[0] : in.back());
            break;
        default:
            break;
        }
    }
    return total;
}

} // namespace space
} // namespace mcunas
