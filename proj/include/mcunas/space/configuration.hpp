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
#ifndef MCUNAS_SPACE_CONFIGURATION_HPP
#define MCUNAS_SPACE_CONFIGURATION_HPP

#include "descriptor.hpp"

namespace mcunas {
namespace space {

/// One applied modification; values serialized as display strings.
struct MorphRecord {
    std::string kind;
    std::string target;
    std::string old_value;
    std::string new_value;
};

struct Lineage {
    std::string type = "random"; // "random" | "morph"
    int64_t reference_id = -1;
    std::vector<MorphRecord> morphs;

    bool is_morph() const { return type == "morph"; }
};

/// Assignment of a value to every active parameter.
struct Configuration {
    std::map<std::string, ParamValue> values;
    Lineage lineage;
    uint64_t seed = 0;

    bool has(const std::string& name) const { return values.count(name) != 0; }

    const ParamValue& raw(const std::string& name) const
    {
        auto it = values.find(name);
        if (it == values.end())
            throw Error("configuration has no value for '" + name + "'");
        return it->second;
    }

    bool get_bool(const std::string& name) const
    {
        return std::get<bool>(raw(name));
    }
    int64_t get_int(const std::string& name) const
    {
        const ParamValue& v = raw(name);
        if (const int64_t* i = std::get_if<int64_t>(&v))
            return *i;
        if (const double* d = std::get_if<double>(&v))
            return std::llround(*d);
        throw Error("parameter '" + name + "' is not numeric");
    }
    double get_real(const std::string& name) const
    {
        const ParamValue& v = raw(name);
        if (const double* d = std::get_if<double>(&v))
            return *d;
        if (const int64_t* i = std::get_if<int64_t>(&v))
            return static_cast<double>(*i);
        throw Error("parameter '" + name + "' is not numeric");
    }
    const std::string& get_cat(const std::string& name) const
    {
        return std::get<std::string>(raw(name));
    }

    std::string to_json_string(int indent = -1) const;
    static Configuration from_json_string(const std::string& text,
                                          const SearchSpaceDescriptor& space);

    /// hash over the parameter assignment (lineage and seed excluded)
    uint64_t value_hash() const;
};

bool same_values(const Configuration& a, const Configuration& b);

} // namespace space
} // namespace mcunas

#endif
