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
#ifndef MCUNAS_MEM_FOOTPRINT_HPP
#define MCUNAS_MEM_FOOTPRINT_HPP

#include <string>
#include <vector>

#include "../graph.hpp"
#include "../net/quantize.hpp"
#include "../net/weights.hpp"
#include "../tensor.hpp"

namespace mcunas {
namespace mem {

/// Structural element counts for one layer. x_count uses the RAM-residency
/// rule: a tensor produced before layer l that still has a consumer at or
/// after l occupies memory while l runs (so operands count once, and tensors
/// carried across skip connections count at every layer they span).
struct LayerFootprint {
    int node = 0;
    std::string name;
    int64_t x_count = 0;
    int64_t y_count = 0;
    int64_t w_nnz = 0;
};

/// Static per-layer output element counts, computed from the graph alone.
/// This is the memory model's own arithmetic; the runtime never feeds it.
std::vector<int64_t> static_output_sizes(const ArchGraph& graph, const Shape& input_shape);

/// Static footprints given per-node weight nonzero counts.
std::vector<LayerFootprint> footprints(const ArchGraph& graph, const Shape& input_shape,
                                       const std::vector<int64_t>& weight_nonzeros);

/// x_l of a merge node is the concatenation of its operands.
inline int64_t merge_input_count(const std::vector<int64_t>& operand_counts)
{
    int64_t total = 0;
    for (int64_t c : operand_counts)
        total += c;
    return total;
}

template <typename Scalar>
std::vector<int64_t> weight_nonzeros(const ArchGraph& graph,
                                     const net::WeightStore<Scalar>& store)
{
    std::vector<int64_t> out(static_cast<size_t>(graph.size()), 0);
    for (const auto& [id, nw] : store.by_node)
        out[static_cast<size_t>(id)] = nw.nonzeros();
    return out;
}

inline std::vector<int64_t> weight_nonzeros(const ArchGraph& graph,
                                            const net::QuantizedStore& store)
{
    std::vector<int64_t> out(static_cast<size_t>(graph.size()), 0);
    for (const auto& [id, ts] : store.by_node)
        for (const auto& [name, t] : ts)
            out[static_cast<size_t>(id)] += t.nonzeros();
    return out;
}

template <typename Store>
std::vector<LayerFootprint> footprints(const ArchGraph& graph, const Shape& input_shape,
                                       const Store& store)
{
    return footprints(graph, input_shape, weight_nonzeros(graph, store));
}

} // namespace mem
} // namespace mcunas

#endif
