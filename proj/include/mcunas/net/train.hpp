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
#ifndef MCUNAS_NET_TRAIN_HPP
#define MCUNAS_NET_TRAIN_HPP

#include <numeric>

#include "../data.hpp"
#include "backward.hpp"

namespace mcunas {
namespace net {

struct TrainHyperparams {
    int epochs = 24;
    int batch_size = 32;
    double learning_rate = 0.01;
    std::string optimizer = "adam"; // adam | sgd
    uint64_t seed = 0;

    void check() const
    {
        if (epochs < 0 || batch_size <= 0 || learning_rate <= 0)
            throw Error("training hyperparameters must be positive");
        if (optimizer != "adam" && optimizer != "sgd")
            throw Error("unknown optimizer '" + optimizer + "'");
    }
};

/// mean cross-entropy over the batch; fills dlogits with d(loss)/d(logits)
template <typename Scalar>
Scalar softmax_cross_entropy(const Tensor<Scalar>& logits, const std::vector<int>& labels,
                             Tensor<Scalar>* dlogits = nullptr)
{
    const int n = logits.extent(0), k = logits.extent(1);
    if (dlogits)
        *dlogits = Tensor<Scalar>(logits.shape());
    Scalar loss = 0;
    for (int s = 0; s < n; ++s) {
        const Scalar* row = logits.data() + static_cast<int64_t>(s) * k;
        Scalar mx = row[0];
        for (int j = 1; j < k; ++j)
            mx = std::max(mx, row[j]);
        Scalar z = 0;
        for (int j = 0; j < k; ++j)
            z += std::exp(row[j] - mx);
        const Scalar logz = std::log(z) + mx;
        loss += logz - row[labels[static_cast<size_t>(s)]];
        if (dlogits) {
            Scalar* drow = dlogits->data() + static_cast<int64_t>(s) * k;
            for (int j = 0; j < k; ++j) {
                const Scalar p = std::exp(row[j] - logz);
                drow[j] = (p - (j == labels[static_cast<size_t>(s)] ? Scalar(1) : Scalar(0)))
                          / static_cast<Scalar>(n);
            }
        }
    }
    return loss / static_cast<Scalar>(n);
}

template <typename Scalar>
int argmax_row(const Tensor<Scalar>& logits, int row)
{
    const int k = logits.extent(1);
    const Scalar* p = logits.data() + static_cast<int64_t>(row) * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
        if (p[j] > p[best])
            best = j;
    return best;
}

template <typename Scalar>
double evaluate_accuracy(const ArchGraph& graph, const WeightStore<Scalar>& store,
                         const LabeledData& data, int batch_size = 256)
{
    if (data.count() == 0)
        return 0.0;
    int correct = 0;
    std::vector<int> idx(static_cast<size_t>(data.count()));
    std::iota(idx.begin(), idx.end(), 0);
    for (int start = 0; start < data.count(); start += batch_size) {
        const int end = std::min(data.count(), start + batch_size);
        std::vector<int> sel(idx.begin() + start, idx.begin() + end);
        LabeledData b = gather(data, sel);
        Tensor<Scalar> xb = b.x.template cast<Scalar>();
        Tensor<Scalar> logits = forward(graph, store, xb);
        for (int s = 0; s < end - start; ++s)
            correct += argmax_row(logits, s) == b.labels[static_cast<size_t>(s)] ? 1 : 0;
    }
    return static_cast<double>(correct) / data.count();
}

template <typename Scalar>
struct AdamState {
    WeightStore<Scalar> m;
    WeightStore<Scalar> v;
    int64_t t = 0;
};

template <typename Scalar>
AdamState<Scalar> make_adam(const WeightStore<Scalar>& store)
{
    return {zero_grads(store), zero_grads(store), 0};
}

/// One optimizer step; grads must mirror the store's parameter tensors.
template <typename Scalar>
void optimizer_step(WeightStore<Scalar>& store, const WeightStore<Scalar>& grads,
                    AdamState<Scalar>* adam, const TrainHyperparams& hp)
{
    const Scalar lr = static_cast<Scalar>(hp.learning_rate);
    if (hp.optimizer == "sgd") {
        for (const auto& [id, g] : grads.by_node)
            for (const auto& [name, gt] : g.tensors)
                store.at(id).get(name).array() -= lr * gt.array();
        return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    adam->t += 1;
    const Scalar c1 = static_cast<Scalar>(1.0 / (1.0 - std::pow(b1, adam->t)));
    const Scalar c2 = static_cast<Scalar>(1.0 / (1.0 - std::pow(b2, adam->t)));
    for (const auto& [id, g] : grads.by_node)
        for (const auto& [name, gt] : g.tensors) {
            auto& m = adam->m.at(id).get(name).array();
            auto& v = adam->v.at(id).get(name).array();
            m = static_cast<Scalar>(b1) * m + static_cast<Scalar>(1 - b1) * gt.array();
            v = static_cast<Scalar>(b2) * v + static_cast<Scalar>(1 - b2) * gt.array().square();
            store.at(id).get(name).array() -=
                lr * (m * c1) / ((v * c2).sqrt() + static_cast<Scalar>(eps));
        }
}

struct TrainResult {
    bool ok = true;                // false on divergence (non-finite loss)
    double val_accuracy = 0.0;
    double final_loss = 0.0;
};

/// Plain mini-batch training. Deterministic for a fixed seed (single thread,
/// fixed shuffle and batch order). epochs == 0 returns the weights untouched.
template <typename Scalar>
TrainResult train(const ArchGraph& graph, WeightStore<Scalar>& store,
                  const LabeledData& train_data, const LabeledData& val_data,
                  const TrainHyperparams& hp, const WeightStore<Scalar>* grad_mask = nullptr)
{
    hp.check();
    Rng rng = Rng(hp.seed).derive("train-shuffle");
    AdamState<Scalar> adam = make_adam(store);
    TrainResult res;
    std::vector<int> order(static_cast<size_t>(train_data.count()));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (int start = 0; start < train_data.count(); start += hp.batch_size) {
            const int end = std::min(train_data.count(), start + hp.batch_size);
            std::vector<int> sel(order.begin() + start, order.begin() + end);
            LabeledData b = gather(train_data, sel);
            Tensor<Scalar> xb = b.x.template cast<Scalar>();

            ForwardCache<Scalar> cache;
            cache.training = true;
            Tensor<Scalar> logits = forward(graph, store, xb, &cache);
            Tensor<Scalar> dlogits;
            const Scalar loss = softmax_cross_entropy(logits, b.labels, &dlogits);
            if (!std::isfinite(static_cast<double>(loss))) {
                res.ok = false;
                res.final_loss = static_cast<double>(loss);
                return res;
            }
            res.final_loss = static_cast<double>(loss);
            WeightStore<Scalar> grads = backward(graph, store, cache, dlogits);
            if (grad_mask)
                for (auto& [id, g] : grads.by_node)
                    for (auto& [name, gt] : g.tensors)
                        if (const Tensor<Scalar>* m = grad_mask->at(id).find(name))
                            gt.array() *= m->array();
            update_bn_running(graph, store, cache);
            optimizer_step(store, grads, &adam, hp);
        }
    }
    res.val_accuracy = evaluate_accuracy(graph, store, val_data);
    return res;
}

} // namespace net
} // namespace mcunas

#endif
