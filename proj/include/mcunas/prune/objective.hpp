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
#ifndef MCUNAS_PRUNE_OBJECTIVE_HPP
#define MCUNAS_PRUNE_OBJECTIVE_HPP

#include "../net/backward.hpp"
#include "../net/train.hpp"
#include "kl.hpp"
#include "posterior.hpp"

namespace mcunas {
namespace prune {

template <typename Scalar>
struct PosteriorGrads {
    std::map<int, net::NodeWeights<Scalar>> mu;      // parameter tensors only
    std::map<int, net::NodeWeights<Scalar>> logbeta;
    std::map<int, Tensor<Scalar>> gate_mu;
    std::map<int, Tensor<Scalar>> gate_logbeta;
};

template <typename Scalar>
PosteriorGrads<Scalar> zero_grads_like(const Posterior<Scalar>& phi)
{
    PosteriorGrads<Scalar> g;
    for (const auto& [id, np] : phi.by_node) {
        for (const auto& [name, t] : np.mu.tensors)
            if (!net::is_buffer_tensor(name))
                g.mu[id].add(name, Tensor<Scalar>(t.shape()));
        for (const auto& [name, t] : np.logbeta.tensors)
            g.logbeta[id].add(name, Tensor<Scalar>(t.shape()));
        if (!np.gate_mu.empty()) {
            g.gate_mu[id] = Tensor<Scalar>(np.gate_mu.shape());
            g.gate_logbeta[id] = Tensor<Scalar>(np.gate_logbeta.shape());
        }
    }
    return g;
}

/// KL between the posterior and the sparsity prior; depends only on the
/// relative variances (per weight, plus per group for structured pruning).
template <typename Scalar>
double kl_divergence(const Posterior<Scalar>& phi)
{
    double total = 0;
    for (const auto& [id, np] : phi.by_node) {
        for (const auto& [name, t] : np.logbeta.tensors)
            for (int64_t i = 0; i < t.size(); ++i)
                total += kl_normal_jeffreys(static_cast<double>(t.at(i)));
        for (int64_t i = 0; i < np.gate_logbeta.size(); ++i)
            total += kl_normal_jeffreys(static_cast<double>(np.gate_logbeta.at(i)));
    }
    return total;
}

namespace detail {

/// the tensor carrying the gated dimension for a node kind
inline const char* gated_tensor(LayerKind k)
{
    return k == LayerKind::SeparableConv2D ? "pw" : "w";
}

/// Map d(loss)/d(effective weights) back onto the posterior parameters of one
/// node. `gate` holds the sampled per-group factors (empty when ungated).
template <typename Scalar>
void map_node_grads(const GraphNode& node, const NodePosterior<Scalar>& np,
                    const net::NodeWeights<Scalar>* eps, const Tensor<Scalar>& gate,
                    const Tensor<Scalar>* gate_eps, const net::NodeWeights<Scalar>& dW,
                    net::NodeWeights<Scalar>& dmu, net::NodeWeights<Scalar>* dlogbeta,
                    Tensor<Scalar>* dgate_mu, Tensor<Scalar>* dgate_logbeta)
{
    const bool gated = !gate.empty();
    Tensor<Scalar> dgate;
    if (gated)
        dgate = Tensor<Scalar>(gate.shape());

    const std::string gname = gated ? gated_tensor(node.spec.kind) : "";
    const bool fc = node.spec.kind == LayerKind::FullyConnected;

    for (const auto& [name, dw] : dW.tensors) {
        const Tensor<Scalar>& mu = np.mu.get(name);
        const Tensor<Scalar>* lb = np.logbeta.find(name);
        Tensor<Scalar>& gmu = dmu.get(name);

        // per-index gate factor lookup
        auto gate_at = [&](int64_t flat) -> Scalar {
            if (!gated)
                return Scalar(1);
            if (name == gname) {
                if (fc) {
                    const int in = mu.extent(1);
                    return gate(static_cast<int>(flat % in));
                }
                const int64_t per_out = mu.size() / mu.extent(0);
                return gate(static_cast<int>(flat / per_out));
            }
            if (!fc && name == "b")
                return gate(static_cast<int>(flat));
            return Scalar(1);
        };
        auto gate_slot = [&](int64_t flat) -> int {
            if (name == gname) {
                if (fc)
                    return static_cast<int>(flat % mu.extent(1));
                return static_cast<int>(flat / (mu.size() / mu.extent(0)));
            }
            if (!fc && name == "b")
                return static_cast<int>(flat);
            return -1;
        };

        if (!lb) {
            // deterministic parameter: mu is the weight (possibly gated bias)
            for (int64_t i = 0; i < dw.size(); ++i) {
                const Scalar g = gate_at(i);
                gmu.at(i) += dw.at(i) * g;
                if (gated) {
                    const int slot = gate_slot(i);
                    if (slot >= 0)
                        dgate(slot) += dw.at(i) * mu.at(i);
                }
            }
            continue;
        }

        const Tensor<Scalar>* e = eps ? &eps->get(name) : nullptr;
        Tensor<Scalar>& glb = dlogbeta->get(name);
        for (int64_t i = 0; i < dw.size(); ++i) {
            const Scalar g = gate_at(i);
            const Scalar sb = std::exp(lb->at(i) * Scalar(0.5));
            const Scalar ei = e ? e->at(i) : Scalar(0);
            const Scalar v = mu.at(i) * (Scalar(1) + sb * ei);
            const Scalar dv = dw.at(i) * g;
            gmu.at(i) += dv * (Scalar(1) + sb * ei);
            glb.at(i) += dv * mu.at(i) * Scalar(0.5) * sb * ei;
            if (gated) {
                const int slot = gate_slot(i);
                if (slot >= 0)
                    dgate(slot) += dw.at(i) * v;
            }
        }
    }

    if (gated) {
        for (int64_t c = 0; c < dgate.size(); ++c) {
            const Scalar sb = std::exp(np.gate_logbeta.at(c) * Scalar(0.5));
            const Scalar ec = gate_eps ? gate_eps->at(c) : Scalar(0);
            dgate_mu->at(c) += dgate.at(c) * (Scalar(1) + sb * ec);
            dgate_logbeta->at(c) +=
                dgate.at(c) * np.gate_mu.at(c) * Scalar(0.5) * sb * ec;
        }
    }
}

} // namespace detail

template <typename Scalar>
struct ObjectiveResult {
    Scalar loss = 0;
    Scalar cross_entropy = 0;
    double kl = 0;
    PosteriorGrads<Scalar> grads;
    net::ForwardCache<Scalar> cache;
};

/// Variational loss for one batch with reparameterized sampling:
///   loss = CE(batch; w~q_phi) + gamma * kl_scale * KL(q_phi || prior).
/// `kl_scale` is 1 for the bare objective; training scales by 1/N_train so the
/// per-batch regularizer matches the per-datapoint evidence bound.
template <typename Scalar>
ObjectiveResult<Scalar> variational_objective(const ArchGraph& graph,
                                              const Posterior<Scalar>& phi,
                                              const SampleNoise<Scalar>* noise,
                                              const Tensor<Scalar>& x,
                                              const std::vector<int>& labels, double gamma,
                                              double kl_scale = 1.0, bool want_grads = true)
{
    ObjectiveResult<Scalar> res;
    net::WeightStore<Scalar> eff = effective_weights(graph, phi, noise);
    res.cache.training = true;
    Tensor<Scalar> logits = net::forward(graph, eff, x, &res.cache);
    Tensor<Scalar> dlogits;
    res.cross_entropy =
        net::softmax_cross_entropy(logits, labels, want_grads ? &dlogits : nullptr);
    res.kl = kl_divergence(phi);
    res.loss = res.cross_entropy + static_cast<Scalar>(gamma * kl_scale * res.kl);
    if (!want_grads)
        return res;

    net::WeightStore<Scalar> dW = net::backward(graph, eff, res.cache, dlogits);
    res.grads = zero_grads_like(phi);
    for (const auto& [id, np] : phi.by_node) {
        const Tensor<Scalar> gate =
            np.gate_mu.empty()
                ? Tensor<Scalar>()
                : detail::reparam(np.gate_mu, np.gate_logbeta,
                                  noise && noise->gate_eps.count(id)
                                      ? &noise->gate_eps.at(id)
                                      : nullptr);
        detail::map_node_grads(graph.node(id), np,
                               noise && noise->eps.count(id) ? &noise->eps.at(id) : nullptr,
                               gate,
                               noise && noise->gate_eps.count(id) ? &noise->gate_eps.at(id)
                                                                  : nullptr,
                               dW.at(id), res.grads.mu[id],
                               res.grads.logbeta.count(id) ? &res.grads.logbeta[id] : nullptr,
                               res.grads.gate_mu.count(id) ? &res.grads.gate_mu[id] : nullptr,
                               res.grads.gate_logbeta.count(id)
                                   ? &res.grads.gate_logbeta[id]
                                   : nullptr);
    }
    // KL term: d/d logbeta only
    const Scalar kcoef = static_cast<Scalar>(gamma * kl_scale);
    if (kcoef != Scalar(0))
        for (auto& [id, nw] : res.grads.logbeta) {
            const NodePosterior<Scalar>& np = phi.at(id);
            for (auto& [name, g] : nw.tensors) {
                const Tensor<Scalar>& lb = np.logbeta.get(name);
                for (int64_t i = 0; i < g.size(); ++i)
                    g.at(i) += kcoef * kl_normal_jeffreys_grad(lb.at(i));
            }
            if (res.grads.gate_logbeta.count(id)) {
                Tensor<Scalar>& gg = res.grads.gate_logbeta[id];
                for (int64_t i = 0; i < gg.size(); ++i)
                    gg.at(i) += kcoef * kl_normal_jeffreys_grad(np.gate_logbeta.at(i));
            }
        }
    return res;
}

} // namespace prune
} // namespace mcunas

#endif
