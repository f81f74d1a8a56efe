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
#include <mcunas/space/labels.hpp>

namespace mcunas {
namespace space {

LabeledData binarize_labels(const LabeledData& data, const std::set<int>& group0,
                            const std::set<int>& group1)
{
    if (group0.empty() || group1.empty())
        throw Error("class partition has an empty side");
    for (int c : group0)
        if (group1.count(c))
            throw Error("class partition sides overlap on class " + std::to_string(c));
    for (int c = 0; c < data.num_classes; ++c)
        if (!group0.count(c) && !group1.count(c))
            throw Error("class partition misses class " + std::to_string(c));
    for (int c : group0)
        if (c < 0 || c >= data.num_classes)
            throw Error("class partition names unknown class " + std::to_string(c));
    for (int c : group1)
        if (c < 0 || c >= data.num_classes)
            throw Error("class partition names unknown class " + std::to_string(c));

    LabeledData out;
    out.x = data.x;
    out.num_classes = 2;
    out.labels.resize(data.labels.size());
    for (size_t i = 0; i < data.labels.size(); ++i)
        out.labels[i] = group0.count(data.labels[i]) ? 0 : 1;
    return out;
}

DatasetBundle binarize_labels(const DatasetBundle& bundle, const std::set<int>& group0,
                              const std::set<int>& group1)
{
    DatasetBundle out;
    out.train = binarize_labels(bundle.train, group0, group1);
    out.val = binarize_labels(bundle.val, group0, group1);
    out.test = binarize_labels(bundle.test, group0, group1);
    out.norm = bundle.norm;
    return out;
}

} // namespace space
} // namespace mcunas
