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
#include <mcunas/space/descriptor.hpp>

#include <json.hpp>
#include <sstream>

namespace mcunas {
namespace space {

using json = nlohmann::ordered_json;

std::string param_value_str(const ParamValue& v)
{
    std::ostringstream os;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>)
                os << (x ? "true" : "false");
            else
                os << x;
        },
        v);
    return os.str();
}

bool param_value_eq(const ParamValue& a, const ParamValue& b)
{
    if (a.index() != b.index()) {
        // integer-valued grids may surface as either int or double
        const double* da = std::get_if<double>(&a);
        const int64_t* ia = std::get_if<int64_t>(&a);
        const double* db = std::get_if<double>(&b);
        const int64_t* ib = std::get_if<int64_t>(&b);
        if (da && ib)
            return *da == static_cast<double>(*ib);
        if (ia && db)
            return static_cast<double>(*ia) == *db;
        return false;
    }
    return a == b;
}

std::string block_param(const std::string& stem, int block)
{
    return stem + "-block-" + std::to_string(block);
}

std::string layer_param(const std::string& stem, int block, int layer)
{
    return stem + "-block-" + std::to_string(block) + "-layer-" + std::to_string(layer);
}

void SearchSpaceDescriptor::add(ParamSpec spec)
{
    for (const auto& group : spec.when.groups)
        for (const Requirement& r : group)
            if (!has(r.param))
                throw Error("parameter '" + spec.name + "' conditions on unknown parent '"
                            + r.param + "'");
    index_[spec.name] = params_.size();
    params_.push_back(std::move(spec));
}

namespace {

ParamSpec boolean(std::string name, std::string desc, Condition when = {})
{
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Bool;
    p.description = std::move(desc);
    p.when = std::move(when);
    return p;
}

ParamSpec integer(std::string name, int lo, int hi, std::string desc, Condition when = {})
{
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Int;
    p.lo = lo;
    p.hi = hi;
    p.inc = 1;
    p.description = std::move(desc);
    p.when = std::move(when);
    return p;
}

ParamSpec grid(std::string name, double lo, double inc, double hi, std::string desc,
               Condition when = {})
{
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Grid;
    p.lo = lo;
    p.hi = hi;
    p.inc = inc;
    p.description = std::move(desc);
    p.when = std::move(when);
    return p;
}

ParamSpec real(std::string name, double lo, double hi, bool lo_open, std::string desc,
               Condition when = {})
{
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Real;
    p.lo = lo;
    p.hi = hi;
    p.lo_open = lo_open;
    p.description = std::move(desc);
    p.when = std::move(when);
    return p;
}

ParamSpec categorical(std::string name, std::vector<std::string> values, std::string desc,
                      Condition when = {})
{
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Categorical;
    p.values = std::move(values);
    p.description = std::move(desc);
    p.when = std::move(when);
    return p;
}

Condition iff(std::string parent, ParamValue value)
{
    return Condition{{{Requirement{std::move(parent), {std::move(value)}}}}};
}

Condition block_active(int k)
{
    if (k == 1)
        return {};
    std::vector<ParamValue> vals;
    for (int b = k; b <= kMaxBlocks; ++b)
        vals.push_back(static_cast<int64_t>(b));
    return Condition{{{Requirement{"num-conv-blocks", vals}}}};
}

Condition layer_active(int k, int l)
{
    Condition c = block_active(k);
    if (l > 1) {
        std::vector<ParamValue> vals;
        for (int x = l; x <= kMaxConvLayersPerBlock; ++x)
            vals.push_back(static_cast<int64_t>(x));
        c.groups.push_back({Requirement{block_param("num-conv-layers", k), vals}});
    }
    return c;
}

} // namespace

SearchSpaceDescriptor SearchSpaceDescriptor::standard()
{
    SearchSpaceDescriptor d;
    d.add(boolean("downsample-input-in-depth",
                  "If True, max pool the input across the 3rd dimension"));
    d.add(boolean("downsample-input", "If True, max pool the input in spatial dimensions"));
    d.add(integer("input-downsampling-rate", 2, 4,
                  "The amount by which to downsample the input",
                  iff("downsample-input", true)));
    d.add(boolean("pretraining", "If True, pretrain the CNN before pruning"));
    d.add(integer("zero-regularization-epochs", 5, 30,
                  "Epochs of VI before the sparsity prior takes effect",
                  iff("pretraining", true)));
    d.add(integer("annealing-epochs", 15, 25,
                  "Epochs over which the VI regularization coefficient ramps to its final "
                  "value"));
    d.add(grid("alpha", 0.01, 0.01, 1.0,
               "Final value for the coefficient of the regularization term in the VI "
               "objective"));
    d.add(boolean("batch-norm",
                  "If True, apply batch-normalization to the output of each layer"));
    d.add(boolean("residual-connections",
                  "If True, each pair of consecutive convolutions gets a skip connection"));
    d.add(integer("num-conv-blocks", 1, 2, "Number of convolution blocks in the CNN"));

    for (int k = 1; k <= kMaxBlocks; ++k) {
        d.add(integer(block_param("num-conv-layers", k), 1, 3,
                      "Number of convolutional layers in block " + std::to_string(k),
                      block_active(k)));
        d.add(integer(block_param("pool-window", k), 2, 3,
                      "Max-pooling window applied to the block output", block_active(k)));
        for (int l = 1; l <= kMaxConvLayersPerBlock; ++l) {
            d.add(categorical(layer_param("layer-type", k, l),
                              {"Conv2D", "DownsampledConv2D", "SeparableConv2D"},
                              "Layer type", layer_active(k, l)));
            d.add(integer(layer_param("kernel-size", k, l), 2, 5, "Convolutional kernel size",
                          layer_active(k, l)));
            d.add(integer(layer_param("num-filters", k, l), 1, 100,
                          "Number of output feature maps", layer_active(k, l)));
            {
                Condition c = layer_active(k, l);
                c.groups.push_back(
                    {Requirement{layer_param("layer-type", k, l), {std::string("DownsampledConv2D")}}});
                d.add(real(layer_param("downsample", k, l), 0.0, 0.5, true,
                           "Channel fraction of the 1x1 depth-reducing convolution",
                           std::move(c)));
            }
            d.add(grid(layer_param("pruning-thresholds", k, l), -6.0, 0.1, 3.0,
                       "Threshold for pruning weights in this layer", layer_active(k, l)));
        }
    }

    d.add(integer("num-fc-layers", 0, 1,
                  "Number of FC layers in the main branch after the convolution blocks"));
    d.add(grid("total-fc-layer-weights", 1e3, 1e3, 800e3,
               "Weight budget shared by the main, left and right branch FC layers"));
    d.add(real("weight-fraction-main-branch", 0.0, 1.0, false,
               "Fraction of total-fc-layer-weights assigned to the main-branch FC layer",
               iff("num-fc-layers", static_cast<int64_t>(1))));
    d.add(boolean("left-branch",
                  "If True, route the first block's output through an FC layer into the "
                  "merge"));
    d.add(boolean("right-branch",
                  "If True, route the first block's input through an FC layer into the "
                  "merge"));
    d.add(real("weight-fraction-left-branch", 0.01, 1.0, false,
               "Fraction of total-fc-layer-weights assigned to the left branch",
               iff("left-branch", true)));
    d.add(real("weight-fraction-right-branch", 0.01, 1.0, false,
               "Fraction of total-fc-layer-weights assigned to the right branch",
               iff("right-branch", true)));
    d.add(categorical("merge-type", {"Sum", "Concatenate"},
                      "How the main, left and right branches are combined",
                      Condition{{{Requirement{"left-branch", {true}},
                                  Requirement{"right-branch", {true}}}}}));
    d.add(grid("pruning-threshold-fc", -6.0, 0.1, 3.0,
               "Shared pruning threshold for all fully connected layers"));
    return d;
}

std::string SearchSpaceDescriptor::to_json_string(int indent) const
{
    json out = json::array();
    for (const ParamSpec& p : params_) {
        json jp;
        jp["name"] = p.name;
        switch (p.kind) {
        case ParamKind::Bool:
            jp["kind"] = "boolean";
            break;
        case ParamKind::Int:
            jp["kind"] = "integer";
            jp["range"] = {p.lo, p.inc, p.hi};
            break;
        case ParamKind::Grid:
            jp["kind"] = "grid";
            jp["range"] = {p.lo, p.inc, p.hi};
            break;
        case ParamKind::Real:
            jp["kind"] = "real";
            jp["range"] = {p.lo, p.hi};
            jp["lo-open"] = p.lo_open;
            break;
        case ParamKind::Categorical:
            jp["kind"] = "categorical";
            jp["values"] = p.values;
            break;
        }
        if (!p.when.always()) {
            json groups = json::array();
            for (const auto& group : p.when.groups) {
                json any = json::array();
                for (const Requirement& r : group) {
                    json vals = json::array();
                    for (const ParamValue& v : r.any_of)
                        std::visit([&](const auto& x) { vals.push_back(x); }, v);
                    any.push_back({{"param", r.param}, {"any-of", vals}});
                }
                groups.push_back(any);
            }
            jp["active-when"] = groups;
        }
        jp["description"] = p.description;
        out.push_back(jp);
    }
    return out.dump(indent);
}

} // namespace space
} // namespace mcunas
