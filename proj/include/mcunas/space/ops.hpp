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
#ifndef MCUNAS_SPACE_OPS_HPP
#define MCUNAS_SPACE_OPS_HPP

#include <set>

#include "configuration.hpp"

namespace mcunas {
namespace space {

struct Violation {
    std::string param;
    std::string message;
};

/// True when the activation condition holds given the values assigned so far.
bool condition_holds(const Condition& cond, const Configuration& config);

/// Uniform draw of every active parameter, parents before children.
Configuration sample_random(const SearchSpaceDescriptor& space, Rng& rng);

/// Uniform draw of a single parameter's value.
ParamValue sample_value(const ParamSpec& spec, Rng& rng);

/// Every range violation, missing active parameter and present-but-inactive
/// parameter. Empty result means the configuration is valid.
std::vector<Violation> validate(const SearchSpaceDescriptor& space, const Configuration& config);

inline bool is_valid(const SearchSpaceDescriptor& space, const Configuration& config)
{
    return validate(space, config).empty();
}

void require_valid(const SearchSpaceDescriptor& space, const Configuration& config);

/// Names of exactly the parameters whose activation conditions hold.
std::set<std::string> active_parameters(const SearchSpaceDescriptor& space,
                                        const Configuration& config);

/// True when the value lies in the parameter's range (grid points included).
bool value_in_range(const ParamSpec& spec, const ParamValue& value);

} // namespace space
} // namespace mcunas

#endif
