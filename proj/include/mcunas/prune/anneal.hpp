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
#ifndef MCUNAS_PRUNE_ANNEAL_HPP
#define MCUNAS_PRUNE_ANNEAL_HPP

#include "../common.hpp"

namespace mcunas {
namespace prune {

/// Regularizer ramp: gamma stays 0 for the pretraining epochs, then rises
/// linearly to gamma_final over the annealing epochs.
struct AnnealSchedule {
    bool pretraining = true;
    int pretrain_epochs = 10;  // N1, only honoured when pretraining is set
    int anneal_epochs = 20;    // N2
    double gamma_final = 0.5;  // gamma_N2

    int effective_pretrain() const { return pretraining ? pretrain_epochs : 0; }

    void check() const
    {
        if (pretrain_epochs < 0 || anneal_epochs <= 0)
            throw Error("annealing schedule lengths must be positive");
        if (gamma_final < 0)
            throw Error("final regularizer weight must be non-negative");
    }
};

inline double anneal_gamma(int epoch, const AnnealSchedule& s)
{
    s.check();
    const int n1 = s.effective_pretrain();
    if (epoch < n1)
        return 0.0;
    if (epoch >= n1 + s.anneal_epochs)
        return s.gamma_final;
    return s.gamma_final * static_cast<double>(epoch - n1)
           / static_cast<double>(s.anneal_epochs);
}

} // namespace prune
} // namespace mcunas

#endif
