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
#ifndef MCUNAS_SPACE_BUILD_GRAPH_HPP
#define MCUNAS_SPACE_BUILD_GRAPH_HPP

#include "../graph.hpp"
#include "../tensor.hpp"
#include "ops.hpp"

namespace mcunas {
namespace space {

/// Materialize a valid configuration into a layer graph for the given input
/// and class count. Throws GraphError when the topology cannot fit the input
/// (e.g. pooling collapses the spatial extent).
ArchGraph build_graph(const SearchSpaceDescriptor& space, const Configuration& config,
                      const Shape& input_shape, int num_classes);

/// Analytic per-layer weight formulas summed over the graph. `edges` counts
/// scalar connections only (biases and batch-norm parameters excluded).
int64_t analytic_weight_count(const ArchGraph& graph, const Shape& input_shape,
                              bool include_biases, bool include_batchnorm);

inline int64_t edge_count(const ArchGraph& graph, const Shape& input_shape)
{
    return analytic_weight_count(graph, input_shape, false, false);
}

} // namespace space
} // namespace mcunas

#endif
