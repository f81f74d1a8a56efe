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
#ifndef MCUNAS_PRUNE_POSTERIOR_HPP
#define MCUNAS_PRUNE_POSTERIOR_HPP

#include "../net/forward.hpp"

namespace mcunas {
namespace prune {

enum class Method { SpVD, BC };

/// log(beta) for freshly initialized weights: low dropout so new weights are
/// not immediately prunable.
constexpr double kFreshLogBeta = -6.0;

/// Group structure for structured pruning: output feature maps for the
/// convolution kinds, input neurons for fully connected layers.
template <typename Scalar>
int group_count(const GraphNode& n, const net::NodeWeights<Scalar>& mu)
{
    switch (n.spec.kind) {
    case LayerKind::Conv2D:
    case LayerKind::DownsampledConv2D:
    case LayerKind::SeparableConv2D:
        return n.spec.out_channels;
    case LayerKind::FullyConnected:
        return mu.get("w").extent(1);
    default:
        return 0;
    }
}

/// Variational posterior q(w) = N(mu, beta mu^2) per sampled weight, plus
/// per-group scale posteriors for structured pruning. Deterministic
/// parameters (biases, batch-norm) live in `mu` only.
template <typename Scalar>
struct NodePosterior {
    net::NodeWeights<Scalar> mu;
    net::NodeWeights<Scalar> logbeta; // sampled tensors only
    Tensor<Scalar> gate_mu;           // BC group scales (empty otherwise)
    Tensor<Scalar> gate_logbeta;
};

template <typename Scalar>
struct Posterior {
    std::map<int, NodePosterior<Scalar>> by_node;
    Method method = Method::SpVD;
    uint64_t graph_hash = 0;

    bool has(int id) const { return by_node.count(id) != 0; }
    NodePosterior<Scalar>& at(int id) { return by_node.at(id); }
    const NodePosterior<Scalar>& at(int id) const { return by_node.at(id); }
};

template <typename Scalar>
Posterior<Scalar> init_posterior(const ArchGraph& graph, const Shape& input_shape, Method method,
                                 Rng rng)
{
    Posterior<Scalar> phi;
    phi.method = method;
    phi.graph_hash = graph.structure_hash();
    net::WeightStore<Scalar> mu0 = net::init_weights<Scalar>(graph, input_shape, rng);
    for (const GraphNode& n : graph.nodes()) {
        if (!mu0.has(n.id))
            continue;
        NodePosterior<Scalar>& np = phi.by_node[n.id];
        np.mu = mu0.at(n.id);
        for (const auto& [name, t] : np.mu.tensors)
            if (net::is_sampled_tensor(name))
                np.logbeta.add(name,
                               Tensor<Scalar>(t.shape(), static_cast<Scalar>(kFreshLogBeta)));
        if (method == Method::BC && is_prunable(n.spec.kind)) {
            const int groups = group_count(n, np.mu);
            np.gate_mu = Tensor<Scalar>({groups}, Scalar(1));
            np.gate_logbeta =
                Tensor<Scalar>({groups}, static_cast<Scalar>(kFreshLogBeta));
        }
    }
    return phi;
}

/// Mean-field point estimate: the weight store of posterior means with group
/// scales folded in (used for pre-prune evaluation and as the fine-tune seed).
template <typename Scalar>
net::WeightStore<Scalar> mean_weights(const ArchGraph& graph, const Posterior<Scalar>& phi);

/// Per-batch reparameterization noise; one draw per sampled weight and group.
template <typename Scalar>
struct SampleNoise {
    std::map<int, net::NodeWeights<Scalar>> eps;
    std::map<int, Tensor<Scalar>> gate_eps;
};

template <typename Scalar>
SampleNoise<Scalar> draw_noise(const Posterior<Scalar>& phi, Rng& rng)
{
    SampleNoise<Scalar> noise;
    for (const auto& [id, np] : phi.by_node) {
        for (const auto& [name, t] : np.logbeta.tensors) {
            Tensor<Scalar> e(t.shape());
            for (int64_t i = 0; i < e.size(); ++i)
                e.at(i) = static_cast<Scalar>(rng.normal());
            noise.eps[id].add(name, std::move(e));
        }
        if (!np.gate_mu.empty()) {
            Tensor<Scalar> e(np.gate_mu.shape());
            for (int64_t i = 0; i < e.size(); ++i)
                e.at(i) = static_cast<Scalar>(rng.normal());
            noise.gate_eps[id] = std::move(e);
        }
    }
    return noise;
}

namespace detail {

/// w = mu (1 + sqrt(beta) eps); eps == nullptr gives the mean
template <typename Scalar>
Tensor<Scalar> reparam(const Tensor<Scalar>& mu, const Tensor<Scalar>& logbeta,
                       const Tensor<Scalar>* eps)
{
    Tensor<Scalar> w(mu.shape());
    if (!eps) {
        w.array() = mu.array();
        return w;
    }
    w.array() = mu.array()
                * (Scalar(1) + (logbeta.array() * Scalar(0.5)).exp() * eps->array());
    return w;
}

/// fold a per-group scale vector into a node's effective tensors
template <typename Scalar>
void apply_gates(const GraphNode& n, const Tensor<Scalar>& gate,
                 net::NodeWeights<Scalar>& w)
{
    if (gate.empty())
        return;
    if (n.spec.kind == LayerKind::FullyConnected) {
        Tensor<Scalar>& m = w.get("w");
        const int out = m.extent(0), in = m.extent(1);
        for (int o = 0; o < out; ++o)
            for (int j = 0; j < in; ++j)
                m(o, j) *= gate(j);
        return;
    }
    // convolution kinds: scale the whole output channel including its bias
    const std::string wname = n.spec.kind == LayerKind::SeparableConv2D ? "pw" : "w";
    Tensor<Scalar>& m = w.get(wname);
    Tensor<Scalar>& b = w.get("b");
    const int oc = m.extent(0);
    const int64_t per_out = m.size() / oc;
    for (int c = 0; c < oc; ++c) {
        Scalar* row = m.data() + static_cast<int64_t>(c) * per_out;
        for (int64_t i = 0; i < per_out; ++i)
            row[i] *= gate(c);
        b(c) *= gate(c);
    }
}

} // namespace detail

/// Effective weights for one forward pass. With noise == nullptr this is the
/// deterministic mean network.
template <typename Scalar>
net::WeightStore<Scalar> effective_weights(const ArchGraph& graph, const Posterior<Scalar>& phi,
                                           const SampleNoise<Scalar>* noise)
{
    net::WeightStore<Scalar> store;
    for (const auto& [id, np] : phi.by_node) {
        net::NodeWeights<Scalar>& nw = store.by_node[id];
        for (const auto& [name, t] : np.mu.tensors) {
            if (const Tensor<Scalar>* lb = np.logbeta.find(name)) {
                const Tensor<Scalar>* e =
                    noise ? noise->eps.at(id).find(name) : nullptr;
                nw.add(name, detail::reparam(t, *lb, e));
            } else {
                nw.add(name, t);
            }
        }
        if (!np.gate_mu.empty()) {
            const Tensor<Scalar>* ge =
                noise && noise->gate_eps.count(id) ? &noise->gate_eps.at(id) : nullptr;
            Tensor<Scalar> gate = detail::reparam(np.gate_mu, np.gate_logbeta, ge);
            detail::apply_gates(graph.node(id), gate, nw);
        }
    }
    return store;
}

template <typename Scalar>
net::WeightStore<Scalar> mean_weights(const ArchGraph& graph, const Posterior<Scalar>& phi)
{
    return effective_weights<Scalar>(graph, phi, nullptr);
}

} // namespace prune
} // namespace mcunas

#endif
