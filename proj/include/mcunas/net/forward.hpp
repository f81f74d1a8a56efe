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
#ifndef MCUNAS_NET_FORWARD_HPP
#define MCUNAS_NET_FORWARD_HPP

#include <map>
#include <vector>

#include "layers.hpp"
#include "weights.hpp"

namespace mcunas {
namespace net {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

template <typename Scalar>
struct ForwardCache {
    Tensor<Scalar> input;
    std::vector<Tensor<Scalar>> outputs;                     // per node id
    std::map<int, Tensor<Scalar>> aux;                       // composite intermediates
    std::map<int, std::pair<std::vector<Scalar>, std::vector<Scalar>>> bn_stats; // mean, var
    bool training = false;
};

/// Per-node element counts observed by an instrumented single-sample forward.
/// x_count follows the RAM-residency rule: every tensor produced before node l
/// that still has a consumer at or after l (the node's own operands included,
/// each counted once) is in memory while l executes.
struct NodeFootprint {
    int node = 0;
    int64_t x_count = 0;
    int64_t y_count = 0;
    int64_t w_nnz = 0;
};

struct FootprintTrace {
    std::vector<NodeFootprint> per_node;
};

namespace detail {

template <typename Scalar>
void bn_channel_stats(const Tensor<Scalar>& x, bool map_layout, std::vector<Scalar>& mean,
                      std::vector<Scalar>& var)
{
    const int n = x.extent(0);
    const int c = map_layout ? x.extent(1) : x.extent(1);
    const int64_t spatial = map_layout ? static_cast<int64_t>(x.extent(2)) * x.extent(3) : 1;
    const int64_t m = n * spatial;
    mean.assign(static_cast<size_t>(c), Scalar(0));
    var.assign(static_cast<size_t>(c), Scalar(0));
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar* p = x.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            for (int64_t i = 0; i < spatial; ++i)
                mean[static_cast<size_t>(ci)] += p[i];
        }
    for (int ci = 0; ci < c; ++ci)
        mean[static_cast<size_t>(ci)] /= static_cast<Scalar>(m);
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar* p = x.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            const Scalar mu = mean[static_cast<size_t>(ci)];
            for (int64_t i = 0; i < spatial; ++i)
                var[static_cast<size_t>(ci)] += (p[i] - mu) * (p[i] - mu);
        }
    for (int ci = 0; ci < c; ++ci)
        var[static_cast<size_t>(ci)] /= static_cast<Scalar>(m);
}

template <typename Scalar>
Tensor<Scalar> bn_apply(const Tensor<Scalar>& x, bool map_layout, const Scalar* mean,
                        const Scalar* var, const Tensor<Scalar>& gamma,
                        const Tensor<Scalar>& beta)
{
    const int n = x.extent(0);
    const int c = x.extent(1);
    const int64_t spatial = map_layout ? static_cast<int64_t>(x.extent(2)) * x.extent(3) : 1;
    Tensor<Scalar> y(x.shape());
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar inv = Scalar(1) / std::sqrt(var[ci] + static_cast<Scalar>(kBnEps));
            const Scalar g = gamma(ci), b = beta(ci), mu = mean[ci];
            const Scalar* px = x.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            Scalar* py = y.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            for (int64_t i = 0; i < spatial; ++i)
                py[i] = g * (px[i] - mu) * inv + b;
        }
    return y;
}

template <typename Scalar>
Tensor<Scalar> flatten_view(const Tensor<Scalar>& x)
{
    // copies into an [N, F] tensor; row-major layout makes this a reshape
    const int n = x.extent(0);
    Tensor<Scalar> out({n, static_cast<int>(x.size() / n)});
    out.array() = x.array();
    return out;
}

template <typename Scalar>
Tensor<Scalar> merge_forward(LayerKind kind, const std::vector<const Tensor<Scalar>*>& ins)
{
    bool all_maps = true;
    for (const Tensor<Scalar>* t : ins)
        all_maps = all_maps && t->rank() == 4;
    const int n = ins[0]->extent(0);
    if (all_maps) {
        const int h = ins[0]->extent(2), w = ins[0]->extent(3);
        for (const Tensor<Scalar>* t : ins)
            if (t->extent(2) != h || t->extent(3) != w)
                throw ShapeError("merge operands have different spatial extents");
        int c = 0;
        for (const Tensor<Scalar>* t : ins)
            c = kind == LayerKind::MergeConcat ? c + t->extent(1) : std::max(c, t->extent(1));
        Tensor<Scalar> y({n, c, h, w});
        int off = 0;
        for (const Tensor<Scalar>* t : ins) {
            const int tc = t->extent(1);
            for (int s = 0; s < n; ++s)
                for (int ci = 0; ci < tc; ++ci) {
                    const Scalar* src = t->data() + (static_cast<int64_t>(s) * tc + ci) * h * w;
                    Scalar* dst = y.data()
                                  + (static_cast<int64_t>(s) * c + off + ci) * h * w;
                    for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i)
                        dst[i] += src[i];
                }
            if (kind == LayerKind::MergeConcat)
                off += tc;
        }
        return y;
    }
    // flattened-feature merge; MergeSum zero-pads the shorter operands
    int64_t f = 0;
    for (const Tensor<Scalar>* t : ins) {
        const int64_t fs = t->size() / n;
        f = kind == LayerKind::MergeConcat ? f + fs : std::max(f, fs);
    }
    Tensor<Scalar> y({n, static_cast<int>(f)});
    int64_t off = 0;
    for (const Tensor<Scalar>* t : ins) {
        const int64_t fs = t->size() / n;
        for (int s = 0; s < n; ++s) {
            const Scalar* src = t->data() + static_cast<int64_t>(s) * fs;
            Scalar* dst = y.data() + static_cast<int64_t>(s) * f + off;
            for (int64_t i = 0; i < fs; ++i)
                dst[i] += src[i];
        }
        if (kind == LayerKind::MergeConcat)
            off += fs;
    }
    return y;
}

template <typename Scalar>
Tensor<Scalar> depth_max_forward(const Tensor<Scalar>& x)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    Tensor<Scalar> y({n, 1, h, w});
    for (int s = 0; s < n; ++s)
        for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
            Scalar m = x.data()[(static_cast<int64_t>(s) * c) * h * w + i];
            for (int ci = 1; ci < c; ++ci)
                m = std::max(m, x.data()[(static_cast<int64_t>(s) * c + ci) * h * w + i]);
            y.data()[static_cast<int64_t>(s) * h * w + i] = m;
        }
    return y;
}

} // namespace detail

/// Single-node forward. `aux` receives composite intermediates needed by the
/// backward pass; `cache` supplies batch-norm behaviour.
template <typename Scalar>
Tensor<Scalar> apply_node(const GraphNode& n, const NodeWeights<Scalar>* w,
                          const std::vector<const Tensor<Scalar>*>& ins,
                          ForwardCache<Scalar>* cache)
{
    const LayerSpec& sp = n.spec;
    switch (sp.kind) {
    case LayerKind::Conv2D:
        return conv2d_forward(*ins[0], w->get("w"), w->get("b"), sp.padding);
    case LayerKind::DownsampledConv2D: {
        Tensor<Scalar> mid = pointwise_forward(*ins[0], w->get("rw"), &w->get("rb"));
        if (cache)
            cache->aux[n.id] = mid;
        return conv2d_forward(mid, w->get("w"), w->get("b"), sp.padding);
    }
    case LayerKind::SeparableConv2D: {
        Tensor<Scalar> mid = depthwise_forward(*ins[0], w->get("dw"), sp.padding);
        if (cache)
            cache->aux[n.id] = mid;
        return pointwise_forward(mid, w->get("pw"), &w->get("b"));
    }
    case LayerKind::FullyConnected:
        // feature maps flatten implicitly (row-major data is already [N, F])
        return fully_connected_forward(*ins[0], w->get("w"), w->get("b"));
    case LayerKind::BatchNorm: {
        const bool map_layout = ins[0]->rank() == 4;
        const bool training = cache && cache->training;
        if (training) {
            std::vector<Scalar> mean, var;
            detail::bn_channel_stats(*ins[0], map_layout, mean, var);
            Tensor<Scalar> y = detail::bn_apply(*ins[0], map_layout, mean.data(), var.data(),
                                                w->get("gamma"), w->get("beta"));
            cache->bn_stats[n.id] = {std::move(mean), std::move(var)};
            return y;
        }
        return detail::bn_apply(*ins[0], map_layout, w->get("rmean").data(),
                                w->get("rvar").data(), w->get("gamma"), w->get("beta"));
    }
    case LayerKind::ReLU: {
        Tensor<Scalar> y(ins[0]->shape());
        y.array() = ins[0]->array().max(Scalar(0));
        return y;
    }
    case LayerKind::MaxPool:
        return maxpool_forward(*ins[0], sp.pool);
    case LayerKind::MergeSum:
    case LayerKind::MergeConcat:
        return detail::merge_forward(sp.kind, ins);
    case LayerKind::InputDownsample: {
        Tensor<Scalar> cur = *ins[0];
        if (sp.depth_pool) {
            cur = detail::depth_max_forward(cur);
            if (cache)
                cache->aux[n.id] = cur;
        }
        if (sp.pool > 1)
            cur = maxpool_forward(cur, sp.pool);
        return cur;
    }
    }
    throw Error("unhandled layer kind");
}

/// Spec-facing single-layer application (chains trivially, used by tests).
template <typename Scalar>
Tensor<Scalar> apply_layer(const LayerSpec& spec, const NodeWeights<Scalar>* weights,
                           const std::vector<const Tensor<Scalar>*>& inputs)
{
    GraphNode n;
    n.id = 0;
    n.name = "layer";
    n.spec = spec;
    return apply_node<Scalar>(n, weights, inputs, nullptr);
}

/// Full graph execution; returns the output node's tensor. `trace`, when
/// given, requires a batch of one and records the memory-model counts.
template <typename Scalar>
Tensor<Scalar> forward(const ArchGraph& graph, const WeightStore<Scalar>& store,
                       const Tensor<Scalar>& batch, ForwardCache<Scalar>* cache = nullptr,
                       FootprintTrace* trace = nullptr)
{
    graph.check_structure();
    if (trace && batch.extent(0) != 1)
        throw Error("footprint instrumentation requires a batch of one");
    std::vector<Tensor<Scalar>> outputs(static_cast<size_t>(graph.size()));
    if (cache) {
        cache->input = batch;
        cache->aux.clear();
        cache->bn_stats.clear();
    }

    // last node id using each tensor (graph input keyed separately)
    std::vector<int> last_use(static_cast<size_t>(graph.size()), -1);
    int input_last_use = -1;
    for (const GraphNode& n : graph.nodes())
        for (int in : n.inputs) {
            if (in == kGraphInput)
                input_last_use = std::max(input_last_use, n.id);
            else
                last_use[static_cast<size_t>(in)] = std::max(last_use[static_cast<size_t>(in)], n.id);
        }

    for (const GraphNode& n : graph.nodes()) {
        std::vector<const Tensor<Scalar>*> ins;
        ins.reserve(n.inputs.size());
        for (int in : n.inputs)
            ins.push_back(in == kGraphInput ? &batch : &outputs[static_cast<size_t>(in)]);
        const NodeWeights<Scalar>* w = store.has(n.id) ? &store.at(n.id) : nullptr;
        if (is_weighted(n.spec.kind) && !w)
            throw Error("node '" + n.name + "' has no weights in the store");
        Tensor<Scalar> out;
        try {
            out = apply_node(n, w, ins, cache);
        } catch (const ShapeError& e) {
            throw ShapeError("at node '" + n.name + "': " + e.what());
        }

        if (trace) {
            NodeFootprint fp;
            fp.node = n.id;
            fp.y_count = out.size();
            fp.w_nnz = w ? w->nonzeros() : 0;
            int64_t x = input_last_use >= n.id ? batch.size() : 0;
            for (int t = 0; t < n.id; ++t)
                if (last_use[static_cast<size_t>(t)] >= n.id)
                    x += outputs[static_cast<size_t>(t)].size();
            fp.x_count = x;
            trace->per_node.push_back(fp);
        }
        outputs[static_cast<size_t>(n.id)] = std::move(out);
    }
    Tensor<Scalar> result = outputs[static_cast<size_t>(graph.output_node())];
    if (cache)
        cache->outputs = std::move(outputs);
    return result;
}

/// Fold mini-batch statistics into the running estimates after a training step.
template <typename Scalar>
void update_bn_running(const ArchGraph& graph, WeightStore<Scalar>& store,
                       const ForwardCache<Scalar>& cache)
{
    for (const auto& [id, stats] : cache.bn_stats) {
        NodeWeights<Scalar>& nw = store.at(id);
        Tensor<Scalar>& rmean = nw.get("rmean");
        Tensor<Scalar>& rvar = nw.get("rvar");
        const auto& [mean, var] = stats;
        for (int64_t i = 0; i < rmean.size(); ++i) {
            rmean.at(i) = static_cast<Scalar>((1.0 - kBnMomentum) * rmean.at(i)
                                              + kBnMomentum * mean[static_cast<size_t>(i)]);
            rvar.at(i) = static_cast<Scalar>((1.0 - kBnMomentum) * rvar.at(i)
                                             + kBnMomentum * var[static_cast<size_t>(i)]);
        }
    }
}

} // namespace net
} // namespace mcunas

#endif
