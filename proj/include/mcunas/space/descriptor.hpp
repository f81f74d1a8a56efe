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
#ifndef MCUNAS_SPACE_DESCRIPTOR_HPP
#define MCUNAS_SPACE_DESCRIPTOR_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "../common.hpp"

namespace mcunas {
namespace space {

constexpr int kMaxBlocks = 2;
constexpr int kMaxConvLayersPerBlock = 3;

enum class ParamKind { Bool, Int, Grid, Real, Categorical };

using ParamValue = std::variant<bool, int64_t, double, std::string>;

/// one atomic activation requirement: named parameter is active and its value
/// is one of `any_of`
struct Requirement {
    std::string param;
    std::vector<ParamValue> any_of;
};

/// AND over groups; OR within a group. Empty means always active.
struct Condition {
    std::vector<std::vector<Requirement>> groups;
    bool always() const { return groups.empty(); }
};

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::Bool;
    double lo = 0, hi = 0, inc = 0;      // Int | Grid | Real
    bool lo_open = false;                // Real with an open lower bound
    std::vector<std::string> values;     // Categorical
    Condition when;
    std::string description;

    int64_t grid_count() const
    {
        return static_cast<int64_t>(std::llround((hi - lo) / inc)) + 1;
    }
};

/// The searchable parameter catalog: per-parameter kind, range and
/// hierarchical activation condition. Parameters are stored parents-first.
class SearchSpaceDescriptor {
public:
    static SearchSpaceDescriptor standard();

    const std::vector<ParamSpec>& params() const { return params_; }
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    const ParamSpec& param(const std::string& name) const
    {
        auto it = index_.find(name);
        if (it == index_.end())
            throw Error("unknown search-space parameter '" + name + "'");
        return params_[it->second];
    }

    std::string to_json_string(int indent = 2) const;

    void add(ParamSpec spec);

private:
    std::vector<ParamSpec> params_;
    std::map<std::string, size_t> index_;
};

std::string param_value_str(const ParamValue& v);
bool param_value_eq(const ParamValue& a, const ParamValue& b);

/// per-block / per-layer parameter names as printed in the catalog
std::string block_param(const std::string& stem, int block);
std::string layer_param(const std::string& stem, int block, int layer);

} // namespace space
} // namespace mcunas

#endif
