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
#include <mcunas/mem/report.hpp>

#include <json.hpp>

namespace mcunas {
namespace mem {

namespace {

WorkingMemory reduce_max(std::vector<int64_t> per_layer)
{
    WorkingMemory wm;
    wm.per_layer_bits = std::move(per_layer);
    for (size_t i = 0; i < wm.per_layer_bits.size(); ++i)
        if (wm.per_layer_bits[i] > wm.max_bits) {
            wm.max_bits = wm.per_layer_bits[i];
            wm.binding_layer = static_cast<int>(i);
        }
    return wm;
}

} // namespace

WorkingMemory working_memory_v1(const std::vector<LayerFootprint>& fps, int bits_per_element)
{
    std::vector<int64_t> per_layer(fps.size());
    for (size_t i = 0; i < fps.size(); ++i)
        per_layer[i] = (fps[i].x_count + fps[i].w_nnz) * bits_per_element;
    return reduce_max(std::move(per_layer));
}

WorkingMemory working_memory_v2(const std::vector<LayerFootprint>& fps, int bits_per_element)
{
    std::vector<int64_t> per_layer(fps.size());
    for (size_t i = 0; i < fps.size(); ++i)
        per_layer[i] = (fps[i].x_count + fps[i].y_count) * bits_per_element;
    return reduce_max(std::move(per_layer));
}

MemoryReport make_report(const ArchGraph& graph, const Shape& input_shape,
                         const std::vector<int64_t>& weight_nonzeros, int bits_per_element)
{
    MemoryReport r;
    r.bits_per_element = bits_per_element;
    r.layers = footprints(graph, input_shape, weight_nonzeros);
    int64_t nnz = 0;
    for (const LayerFootprint& fp : r.layers)
        nnz += fp.w_nnz;
    r.model_size = model_size_bits(nnz, bits_per_element);
    r.wm1 = working_memory_v1(r.layers, bits_per_element);
    r.wm2 = working_memory_v2(r.layers, bits_per_element);
    return r;
}

std::string report_json(const MemoryReport& pre, const MemoryReport& post, int indent)
{
    using json = nlohmann::ordered_json;
    if (pre.layers.size() != post.layers.size())
        throw Error("pre/post reports describe different graphs");
    json rows = json::array();
    for (size_t i = 0; i < pre.layers.size(); ++i) {
        const LayerFootprint& a = pre.layers[i];
        const LayerFootprint& b = post.layers[i];
        json row;
        row["node"] = a.name;
        row["ms-kb"] = {bits_to_kb(a.w_nnz * pre.bits_per_element),
                        bits_to_kb(b.w_nnz * post.bits_per_element)};
        row["wm1-kb"] = {bits_to_kb(pre.wm1.per_layer_bits[i]),
                         bits_to_kb(post.wm1.per_layer_bits[i])};
        row["wm2-kb"] = {bits_to_kb(pre.wm2.per_layer_bits[i]),
                         bits_to_kb(post.wm2.per_layer_bits[i])};
        row["x"] = {a.x_count, b.x_count};
        row["y"] = {a.y_count, b.y_count};
        row["w-nnz"] = {a.w_nnz, b.w_nnz};
        rows.push_back(row);
    }
    json j;
    j["bits-per-element"] = post.bits_per_element;
    j["layers"] = rows;
    j["ms-kb"] = {bits_to_kb(pre.model_size), bits_to_kb(post.model_size)};
    j["wm1-kb"] = {bits_to_kb(pre.wm1.max_bits), bits_to_kb(post.wm1.max_bits)};
    j["wm2-kb"] = {bits_to_kb(pre.wm2.max_bits), bits_to_kb(post.wm2.max_bits)};
    j["wm1-binding-layer"] = post.wm1.binding_layer;
    j["wm2-binding-layer"] = post.wm2.binding_layer;
    return j.dump(indent);
}

} // namespace mem
} // namespace mcunas
