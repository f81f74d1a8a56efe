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
#ifndef MCUNAS_MEM_REPORT_HPP
#define MCUNAS_MEM_REPORT_HPP

#include "footprint.hpp"

namespace mcunas {
namespace mem {

/// bits -> KB (1 KB = 1024 bytes)
inline double bits_to_kb(int64_t bits) { return static_cast<double>(bits) / 8192.0; }

/// Flash cost: nonzero parameters times the storage width.
inline int64_t model_size_bits(int64_t total_weight_nonzeros, int bits_per_weight)
{
    return total_weight_nonzeros * bits_per_weight;
}

struct WorkingMemory {
    std::vector<int64_t> per_layer_bits;
    int64_t max_bits = 0;
    int binding_layer = -1; // first layer attaining the max
};

/// RAM usage model 1: inputs and weights resident per layer.
WorkingMemory working_memory_v1(const std::vector<LayerFootprint>& fps, int bits_per_element);

/// RAM usage model 2: inputs and outputs resident per layer.
WorkingMemory working_memory_v2(const std::vector<LayerFootprint>& fps, int bits_per_element);

struct MemoryReport {
    std::vector<LayerFootprint> layers;
    int bits_per_element = 8;
    int64_t model_size = 0; // bits
    WorkingMemory wm1;
    WorkingMemory wm2;
};

MemoryReport make_report(const ArchGraph& graph, const Shape& input_shape,
                         const std::vector<int64_t>& weight_nonzeros, int bits_per_element);

template <typename Store>
MemoryReport make_report(const ArchGraph& graph, const Shape& input_shape, const Store& store,
                         int bits_per_element)
{
    return make_report(graph, input_shape, weight_nonzeros(graph, store), bits_per_element);
}

/// Per-layer JSON rows with [pre, post]-pruning value pairs per node, plus the
/// aggregate MS/WM lines. `pre` and `post` must describe the same graph.
std::string report_json(const MemoryReport& pre, const MemoryReport& post, int indent = 2);

} // namespace mem
} // namespace mcunas

#endif
