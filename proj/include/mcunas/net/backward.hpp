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
#ifndef MCUNAS_NET_BACKWARD_HPP
#define MCUNAS_NET_BACKWARD_HPP

#include "forward.hpp"

namespace mcunas {
namespace net {

namespace detail {

template <typename Scalar>
void accumulate(Tensor<Scalar>& acc, const Tensor<Scalar>& g)
{
    if (acc.empty())
        acc = g;
    else
        acc.array() += g.array();
}

template <typename Scalar>
Tensor<Scalar> bn_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy,
                           const Tensor<Scalar>& gamma, const std::vector<Scalar>& mean,
                           const std::vector<Scalar>& var, Tensor<Scalar>& dgamma,
                           Tensor<Scalar>& dbeta)
{
    const int n = x.extent(0), c = x.extent(1);
    const int64_t spatial = x.rank() == 4 ? static_cast<int64_t>(x.extent(2)) * x.extent(3) : 1;
    const Scalar m = static_cast<Scalar>(n * spatial);
    Tensor<Scalar> dx(x.shape());
    for (int ci = 0; ci < c; ++ci) {
        const Scalar mu = mean[static_cast<size_t>(ci)];
        const Scalar inv = Scalar(1) / std::sqrt(var[static_cast<size_t>(ci)]
                                                 + static_cast<Scalar>(kBnEps));
        const Scalar g = gamma(ci);
        Scalar sum_dxhat = 0, sum_dxhat_xhat = 0, sum_dy = 0, sum_dy_xhat = 0;
        for (int s = 0; s < n; ++s) {
            const Scalar* px = x.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            const Scalar* pdy = dy.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            for (int64_t i = 0; i < spatial; ++i) {
                const Scalar xhat = (px[i] - mu) * inv;
                const Scalar dxhat = pdy[i] * g;
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
                sum_dy += pdy[i];
                sum_dy_xhat += pdy[i] * xhat;
            }
        }
        dgamma(ci) += sum_dy_xhat;
        dbeta(ci) += sum_dy;
        for (int s = 0; s < n; ++s) {
            const Scalar* px = x.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            const Scalar* pdy = dy.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            Scalar* pdx = dx.data() + (static_cast<int64_t>(s) * c + ci) * spatial;
            for (int64_t i = 0; i < spatial; ++i) {
                const Scalar xhat = (px[i] - mu) * inv;
                const Scalar dxhat = pdy[i] * g;
                pdx[i] = (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / m) * inv;
            }
        }
    }
    return dx;
}

/// slice dy back onto each merge operand; MergeSum pads never carry gradient
template <typename Scalar>
std::vector<Tensor<Scalar>> merge_backward(LayerKind kind,
                                           const std::vector<const Tensor<Scalar>*>& ins,
                                           const Tensor<Scalar>& dy)
{
    bool all_maps = true;
    for (const Tensor<Scalar>* t : ins)
        all_maps = all_maps && t->rank() == 4;
    const int n = ins[0]->extent(0);
    std::vector<Tensor<Scalar>> dxs;
    dxs.reserve(ins.size());
    if (all_maps) {
        const int h = ins[0]->extent(2), w = ins[0]->extent(3);
        const int yc = dy.extent(1);
        int off = 0;
        for (const Tensor<Scalar>* t : ins) {
            const int tc = t->extent(1);
            Tensor<Scalar> dx(t->shape());
            for (int s = 0; s < n; ++s)
                for (int ci = 0; ci < tc; ++ci) {
                    const Scalar* src = dy.data()
                                        + (static_cast<int64_t>(s) * yc + off + ci) * h * w;
                    Scalar* dst = dx.data() + (static_cast<int64_t>(s) * tc + ci) * h * w;
                    for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i)
                        dst[i] = src[i];
                }
            dxs.push_back(std::move(dx));
            if (kind == LayerKind::MergeConcat)
                off += tc;
        }
        return dxs;
    }
    const int64_t yf = dy.size() / n;
    int64_t off = 0;
    for (const Tensor<Scalar>* t : ins) {
        const int64_t fs = t->size() / n;
        Tensor<Scalar> dx(t->shape());
        for (int s = 0; s < n; ++s) {
            const Scalar* src = dy.data() + static_cast<int64_t>(s) * yf + off;
            Scalar* dst = dx.data() + static_cast<int64_t>(s) * fs;
            for (int64_t i = 0; i < fs; ++i)
                dst[i] = src[i];
        }
        dxs.push_back(std::move(dx));
        if (kind == LayerKind::MergeConcat)
            off += fs;
    }
    return dxs;
}

template <typename Scalar>
Tensor<Scalar> depth_max_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    Tensor<Scalar> dx(x.shape());
    for (int s = 0; s < n; ++s)
        for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
            int best = 0;
            Scalar m = x.data()[(static_cast<int64_t>(s) * c) * h * w + i];
            for (int ci = 1; ci < c; ++ci) {
                const Scalar v = x.data()[(static_cast<int64_t>(s) * c + ci) * h * w + i];
                if (v > m) {
                    m = v;
                    best = ci;
                }
            }
            dx.data()[(static_cast<int64_t>(s) * c + best) * h * w + i] +=
                dy.data()[static_cast<int64_t>(s) * h * w + i];
        }
    return dx;
}

} // namespace detail

/// Gradient store mirrors the weight store tensor names (buffers excluded).
template <typename Scalar>
WeightStore<Scalar> zero_grads(const WeightStore<Scalar>& store)
{
    WeightStore<Scalar> grads;
    for (const auto& [id, nw] : store.by_node) {
        NodeWeights<Scalar>& g = grads.by_node[id];
        for (const auto& [name, t] : nw.tensors)
            if (!is_buffer_tensor(name))
                g.add(name, Tensor<Scalar>(t.shape()));
    }
    return grads;
}

/// Reverse-mode pass over the graph given d(loss)/d(logits). Requires the
/// cache produced by the forward call on the same batch.
template <typename Scalar>
WeightStore<Scalar> backward(const ArchGraph& graph, const WeightStore<Scalar>& store,
                             const ForwardCache<Scalar>& cache, const Tensor<Scalar>& dlogits)
{
    WeightStore<Scalar> grads = zero_grads(store);
    std::vector<Tensor<Scalar>> douts(static_cast<size_t>(graph.size()));
    douts[static_cast<size_t>(graph.output_node())] = dlogits;

    for (int id = graph.size() - 1; id >= 0; --id) {
        const GraphNode& n = graph.node(id);
        Tensor<Scalar>& dy = douts[static_cast<size_t>(id)];
        if (dy.empty())
            continue;
        std::vector<const Tensor<Scalar>*> ins;
        ins.reserve(n.inputs.size());
        for (int in : n.inputs)
            ins.push_back(in == kGraphInput ? &cache.input
                                            : &cache.outputs[static_cast<size_t>(in)]);
        auto push = [&](size_t slot, Tensor<Scalar>&& dx) {
            const int in = n.inputs[slot];
            if (in != kGraphInput)
                detail::accumulate(douts[static_cast<size_t>(in)], dx);
        };

        switch (n.spec.kind) {
        case LayerKind::Conv2D: {
            NodeWeights<Scalar>& g = grads.at(id);
            Tensor<Scalar> dx;
            conv2d_backward(*ins[0], store.at(id).get("w"), dy, n.spec.padding, dx, g.get("w"),
                            g.get("b"));
            push(0, std::move(dx));
            break;
        }
        case LayerKind::DownsampledConv2D: {
            NodeWeights<Scalar>& g = grads.at(id);
            const Tensor<Scalar>& mid = cache.aux.at(id);
            Tensor<Scalar> dmid, dx;
            conv2d_backward(mid, store.at(id).get("w"), dy, n.spec.padding, dmid, g.get("w"),
                            g.get("b"));
            pointwise_backward(*ins[0], store.at(id).get("rw"), dmid, dx, g.get("rw"),
                               &g.get("rb"));
            push(0, std::move(dx));
            break;
        }
        case LayerKind::SeparableConv2D: {
            NodeWeights<Scalar>& g = grads.at(id);
            const Tensor<Scalar>& mid = cache.aux.at(id);
            Tensor<Scalar> dmid, dx;
            pointwise_backward(mid, store.at(id).get("pw"), dy, dmid, g.get("pw"), &g.get("b"));
            depthwise_backward(*ins[0], store.at(id).get("dw"), dmid, n.spec.padding, dx,
                               g.get("dw"));
            push(0, std::move(dx));
            break;
        }
        case LayerKind::FullyConnected: {
            NodeWeights<Scalar>& g = grads.at(id);
            Tensor<Scalar> dx;
            fully_connected_backward(*ins[0], store.at(id).get("w"), dy, dx, g.get("w"),
                                     g.get("b"));
            push(0, std::move(dx));
            break;
        }
        case LayerKind::BatchNorm: {
            NodeWeights<Scalar>& g = grads.at(id);
            const auto& [mean, var] = cache.bn_stats.at(id);
            Tensor<Scalar> dx = detail::bn_backward(*ins[0], dy, store.at(id).get("gamma"), mean,
                                                    var, g.get("gamma"), g.get("beta"));
            push(0, std::move(dx));
            break;
        }
        case LayerKind::ReLU: {
            Tensor<Scalar> dx(ins[0]->shape());
            dx.array() = (ins[0]->array() > Scalar(0)).select(dy.array(), Scalar(0));
            push(0, std::move(dx));
            break;
        }
        case LayerKind::MaxPool:
            push(0, maxpool_backward(*ins[0], dy, n.spec.pool));
            break;
        case LayerKind::MergeSum:
        case LayerKind::MergeConcat: {
            std::vector<Tensor<Scalar>> dxs = detail::merge_backward(n.spec.kind, ins, dy);
            for (size_t i = 0; i < dxs.size(); ++i)
                push(i, std::move(dxs[i]));
            break;
        }
        case LayerKind::InputDownsample: {
            if (n.inputs[0] == kGraphInput)
                break; // nothing upstream to receive a gradient
            Tensor<Scalar> cur = dy;
            const Tensor<Scalar>& pre_pool =
                n.spec.depth_pool ? cache.aux.at(id) : *ins[0];
            if (n.spec.pool > 1)
                cur = maxpool_backward(pre_pool, cur, n.spec.pool);
            if (n.spec.depth_pool)
                cur = detail::depth_max_backward(*ins[0], cur);
            push(0, std::move(cur));
            break;
        }
        }
    }
    return grads;
}

} // namespace net
} // namespace mcunas

#endif
