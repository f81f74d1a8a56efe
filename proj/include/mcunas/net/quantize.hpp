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
#ifndef MCUNAS_NET_QUANTIZE_HPP
#define MCUNAS_NET_QUANTIZE_HPP

#include <cstdint>

#include "weights.hpp"

namespace mcunas {
namespace net {

/// Symmetric per-tensor 8-bit quantization: value = scale * q, q in [-127,127].
struct QuantizedTensor {
    Shape shape;
    std::vector<int8_t> values;
    double scale = 1.0;

    int64_t nonzeros() const
    {
        int64_t n = 0;
        for (int8_t v : values)
            n += v != 0;
        return n;
    }
};

template <typename Scalar>
QuantizedTensor quantize(const Tensor<Scalar>& t)
{
    QuantizedTensor q;
    q.shape = t.shape();
    q.values.resize(static_cast<size_t>(t.size()));
    double amax = 0;
    for (int64_t i = 0; i < t.size(); ++i) {
        const double v = static_cast<double>(t.at(i));
        if (!std::isfinite(v))
            throw Error("cannot quantize non-finite value");
        amax = std::max(amax, std::abs(v));
    }
    q.scale = amax > 0 ? amax / 127.0 : 1.0;
    for (int64_t i = 0; i < t.size(); ++i) {
        const double r = std::nearbyint(static_cast<double>(t.at(i)) / q.scale);
        q.values[static_cast<size_t>(i)] =
            static_cast<int8_t>(std::min(127.0, std::max(-127.0, r)));
    }
    return q;
}

template <typename Scalar>
Tensor<Scalar> dequantize(const QuantizedTensor& q)
{
    Tensor<Scalar> t(q.shape);
    for (int64_t i = 0; i < t.size(); ++i)
        t.at(i) = static_cast<Scalar>(q.values[static_cast<size_t>(i)] * q.scale);
    return t;
}

struct QuantizedStore {
    std::map<int, std::vector<std::pair<std::string, QuantizedTensor>>> by_node;
    int bits_per_value = 8;

    int64_t nonzeros() const
    {
        int64_t n = 0;
        for (const auto& [id, ts] : by_node)
            for (const auto& [name, t] : ts)
                n += t.nonzeros();
        return n;
    }
};

/// Quantize every parameter tensor of the store (buffers skipped).
template <typename Scalar>
QuantizedStore quantize_store(const WeightStore<Scalar>& store)
{
    QuantizedStore out;
    for (const auto& [id, nw] : store.by_node)
        for (const auto& [name, t] : nw.tensors)
            if (!is_buffer_tensor(name))
                out.by_node[id].emplace_back(name, quantize(t));
    return out;
}

/// Round weights onto the 8-bit grid in place; exact zeros stay zero.
template <typename Scalar>
WeightStore<Scalar> apply_quantization(const WeightStore<Scalar>& store)
{
    WeightStore<Scalar> out = store;
    out.bits_per_value = 8;
    for (auto& [id, nw] : out.by_node)
        for (auto& [name, t] : nw.tensors)
            if (!is_buffer_tensor(name))
                t = dequantize<Scalar>(quantize(t));
    return out;
}

} // namespace net
} // namespace mcunas

#endif
