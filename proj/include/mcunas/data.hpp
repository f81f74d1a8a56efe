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
#ifndef MCUNAS_DATA_HPP
#define MCUNAS_DATA_HPP

#include <vector>

#include "tensor.hpp"

namespace mcunas {

/// Images as [N, C, H, W] float tensors with integer class labels.
struct LabeledData {
    Tensor<float> x;
    std::vector<int> labels;
    int num_classes = 0;

    int count() const { return x.empty() ? 0 : x.extent(0); }
    Shape sample_shape() const
    {
        return {x.extent(1), x.extent(2), x.extent(3)};
    }
};

/// Per-channel normalization statistics, computed on the training split only.
struct NormStats {
    std::vector<float> mean;
    std::vector<float> stddev;
};

struct DatasetBundle {
    LabeledData train;
    LabeledData val;
    LabeledData test;
    NormStats norm;
};

inline LabeledData gather(const LabeledData& d, const std::vector<int>& idx)
{
    const int c = d.x.extent(1), h = d.x.extent(2), w = d.x.extent(3);
    LabeledData out;
    out.num_classes = d.num_classes;
    out.x = Tensor<float>({static_cast<int>(idx.size()), c, h, w});
    out.labels.resize(idx.size());
    const int64_t stride = static_cast<int64_t>(c) * h * w;
    for (size_t i = 0; i < idx.size(); ++i) {
        const float* src = d.x.data() + idx[i] * stride;
        float* dst = out.x.data() + static_cast<int64_t>(i) * stride;
        std::copy(src, src + stride, dst);
        out.labels[i] = d.labels[static_cast<size_t>(idx[i])];
    }
    return out;
}

} // namespace mcunas

#endif
