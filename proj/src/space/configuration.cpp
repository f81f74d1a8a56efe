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
#include <mcunas/space/configuration.hpp>

#include <json.hpp>

namespace mcunas {
namespace space {

using json = nlohmann::ordered_json;

namespace {

json value_to_json(const ParamValue& v)
{
    json j;
    std::visit([&](const auto& x) { j = x; }, v);
    return j;
}

json lineage_to_json(const Lineage& l)
{
    json j;
    j["type"] = l.type;
    if (l.is_morph()) {
        j["reference-id"] = l.reference_id;
        json morphs = json::array();
        for (const MorphRecord& m : l.morphs)
            morphs.push_back({{"kind", m.kind},
                              {"target", m.target},
                              {"old", m.old_value},
                              {"new", m.new_value}});
        j["morphs"] = morphs;
    }
    return j;
}

Lineage lineage_from_json(const json& j)
{
    Lineage l;
    l.type = j.at("type").get<std::string>();
    if (l.is_morph()) {
        l.reference_id = j.at("reference-id").get<int64_t>();
        for (const json& m : j.at("morphs"))
            l.morphs.push_back(MorphRecord{m.at("kind").get<std::string>(),
                                           m.at("target").get<std::string>(),
                                           m.at("old").get<std::string>(),
                                           m.at("new").get<std::string>()});
    }
    return l;
}

} // namespace

std::string Configuration::to_json_string(int indent) const
{
    json j;
    j["seed"] = seed;
    j["lineage"] = lineage_to_json(lineage);
    json params = json::object();
    for (const auto& [name, value] : values)
        params[name] = value_to_json(value);
    j["params"] = params;
    return indent < 0 ? j.dump() : j.dump(indent);
}

Configuration Configuration::from_json_string(const std::string& text,
                                              const SearchSpaceDescriptor& space)
{
    json j = json::parse(text);
    Configuration c;
    if (j.contains("seed"))
        c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("lineage"))
        c.lineage = lineage_from_json(j.at("lineage"));
    const json& params = j.contains("params") ? j.at("params") : j;
    for (auto it = params.begin(); it != params.end(); ++it) {
        const std::string& name = it.key();
        if (!space.has(name))
            throw Error("unknown parameter '" + name + "' in configuration");
        const ParamSpec& spec = space.param(name);
        switch (spec.kind) {
        case ParamKind::Bool:
            c.values[name] = it.value().get<bool>();
            break;
        case ParamKind::Int:
            c.values[name] = it.value().get<int64_t>();
            break;
        case ParamKind::Grid:
        case ParamKind::Real:
            c.values[name] = it.value().get<double>();
            break;
        case ParamKind::Categorical:
            c.values[name] = it.value().get<std::string>();
            break;
        }
    }
    return c;
}

uint64_t Configuration::value_hash() const
{
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, value] : values) {
        h = fnv1a(name, h);
        h = fnv1a(param_value_str(value), h);
    }
    return h;
}

bool same_values(const Configuration& a, const Configuration& b)
{
    if (a.values.size() != b.values.size())
        return false;
    auto ia = a.values.begin();
    auto ib = b.values.begin();
    for (; ia != a.values.end(); ++ia, ++ib)
        if (ia->first != ib->first || !param_value_eq(ia->second, ib->second))
            return false;
    return true;
}

} // namespace space
} // namespace mcunas
