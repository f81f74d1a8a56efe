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
#ifndef MCUNAS_SPACE_LABELS_HPP
#define MCUNAS_SPACE_LABELS_HPP

#include <set>

#include "../data.hpp"

namespace mcunas {
namespace space {

/// Relabel into two classes: group0 -> 0, group1 -> 1. The groups must be
/// disjoint, non-empty, and together cover every class id of the dataset.
LabeledData binarize_labels(const LabeledData& data, const std::set<int>& group0,
                            const std::set<int>& group1);

DatasetBundle binarize_labels(const DatasetBundle& bundle, const std::set<int>& group0,
                              const std::set<int>& group1);

} // namespace space
} // namespace mcunas

#endif
