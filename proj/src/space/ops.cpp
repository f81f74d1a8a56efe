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
#include <mcunas/space/ops.hpp>

#include <cmath>
#include <sstream>

namespace mcunas {
namespace space {

bool condition_holds(const Condition& cond, const Configuration& config)
{
    for (const auto& group : cond.groups) {
        bool any = false;
        for (const Requirement& r : group) {
            if (!config.has(r.param))
                continue; // inactive parent cannot satisfy a requirement
            for (const ParamValue& v : r.any_of)
                any = any || param_value_eq(config.raw(r.param), v);
        }
        if (!any)
            return false;
    }
    return true;
}

ParamValue sample_value(const ParamSpec& spec, Rng& rng)
{
    switch (spec.kind) {
    case ParamKind::Bool:
        return rng.bernoulli();
    case ParamKind::Int:
        return rng.uniform_int(static_cast<int64_t>(spec.lo), static_cast<int64_t>(spec.hi));
    case ParamKind::Grid: {
        const int64_t idx = rng.uniform_int(0, spec.grid_count() - 1);
        return spec.lo + static_cast<double>(idx) * spec.inc;
    }
    case ParamKind::Real: {
        double v = rng.uniform(spec.lo, spec.hi);
        if (spec.lo_open)
            while (v <= spec.lo)
                v = rng.uniform(spec.lo, spec.hi);
        return v;
    }
    case ParamKind::Categorical:
        return spec.values[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(spec.values.size()) - 1))];
    }
    throw Error("unhandled parameter kind");
}

Configuration sample_random(const SearchSpaceDescriptor& space, Rng& rng)
{
    Configuration c;
    c.lineage.type = "random";
    for (const ParamSpec& spec : space.params())
        if (condition_holds(spec.when, c))
            c.values[spec.name] = sample_value(spec, rng);
    return c;
}

bool value_in_range(const ParamSpec& spec, const ParamValue& value)
{
    switch (spec.kind) {
    case ParamKind::Bool:
        return std::holds_alternative<bool>(value);
    case ParamKind::Int: {
        if (!std::holds_alternative<int64_t>(value)
            && !std::holds_alternative<double>(value))
            return false;
        const double v = std::holds_alternative<int64_t>(value)
                             ? static_cast<double>(std::get<int64_t>(value))
                             : std::get<double>(value);
        return v == std::floor(v) && v >= spec.lo && v <= spec.hi;
    }
    case ParamKind::Grid: {
        if (!std::holds_alternative<double>(value) && !std::holds_alternative<int64_t>(value))
            return false;
        const double v = std::holds_alternative<int64_t>(value)
                             ? static_cast<double>(std::get<int64_t>(value))
                             : std::get<double>(value);
        if (v < spec.lo - 1e-9 || v > spec.hi + 1e-9)
            return false;
        const double steps = (v - spec.lo) / spec.inc;
        return std::abs(steps - std::llround(steps)) < 1e-6;
    }
    case ParamKind::Real: {
        if (!std::holds_alternative<double>(value))
            return false;
        const double v = std::get<double>(value);
        if (spec.lo_open ? v <= spec.lo : v < spec.lo)
            return false;
        return v <= spec.hi;
    }
    case ParamKind::Categorical: {
        if (!std::holds_alternative<std::string>(value))
            return false;
        const std::string& s = std::get<std::string>(value);
        for (const std::string& v : spec.values)
            if (v == s)
                return true;
        return false;
    }
    }
    return false;
}

std::vector<Violation> validate(const SearchSpaceDescriptor& space, const Configuration& config)
{
    std::vector<Violation> out;
    // activity is recomputed against the descriptor, not trusted from the map
    Configuration active_view; // values of parameters established as active
    for (const ParamSpec& spec : space.params()) {
        const bool should = condition_holds(spec.when, active_view);
        const bool present = config.has(spec.name);
        if (should && !present) {
            out.push_back({spec.name, "missing value for active parameter"});
            continue;
        }
        if (!should && present) {
            out.push_back({spec.name, "value present but parameter is inactive"});
            continue;
        }
        if (!present)
            continue;
        const ParamValue& v = config.raw(spec.name);
        if (!value_in_range(spec, v)) {
            std::ostringstream os;
            os << "value " << param_value_str(v) << " outside range";
            if (spec.kind == ParamKind::Int || spec.kind == ParamKind::Grid
                || spec.kind == ParamKind::Real)
                os << " [" << spec.lo << ", " << spec.hi << "]";
            out.push_back({spec.name, os.str()});
            continue;
        }
        active_view.values[spec.name] = v;
    }
    for (const auto& [name, value] : config.values)
        if (!space.has(name))
            out.push_back({name, "not a search-space parameter"});
    return out;
}

void require_valid(const SearchSpaceDescriptor& space, const Configuration& config)
{
    const std::vector<Violation> v = validate(space, config);
    if (v.empty())
        return;
    std::string msg = "invalid configuration:";
    for (const Violation& x : v)
        msg += "\n  " + x.param + ": " + x.message;
    throw Error(msg);
}

std::set<std::string> active_parameters(const SearchSpaceDescriptor& space,
                                        const Configuration& config)
{
    std::set<std::string> out;
    Configuration view;
    for (const ParamSpec& spec : space.params())
        if (condition_holds(spec.when, view)) {
            out.insert(spec.name);
            if (config.has(spec.name))
                view.values[spec.name] = config.raw(spec.name);
        }
    return out;
}

} // namespace space
} // namespace mcunas
