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
#ifndef MCUNAS_PRUNE_KL_HPP
#define MCUNAS_PRUNE_KL_HPP

#include <cmath>

namespace mcunas {
namespace prune {

// Polynomial/sigmoid fit of the normal/log-uniform KL as a function of the
// relative variance beta (a.k.a. the dropout rate alpha), normalized so that
// KL -> 0 as beta -> inf. The fit is validated against numerical quadrature
// in the test suite before anything trusts it.
constexpr double kKl1 = 0.63576;
constexpr double kKl2 = 1.87320;
constexpr double kKl3 = 1.48695;

template <typename Scalar>
Scalar sigmoid(Scalar x)
{
    return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x))
                  : std::exp(x) / (Scalar(1) + std::exp(x));
}

/// KL(N(mu, beta mu^2) || log-uniform), as a function of t = log(beta).
template <typename Scalar>
Scalar kl_normal_jeffreys(Scalar t)
{
    const Scalar k1 = static_cast<Scalar>(kKl1);
    const Scalar k2 = static_cast<Scalar>(kKl2);
    const Scalar k3 = static_cast<Scalar>(kKl3);
    // log(1 + e^-t), stable for both signs
    const Scalar softminus = t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    return k1 - k1 * sigmoid(k2 + k3 * t) + Scalar(0.5) * softminus;
}

/// d/dt of kl_normal_jeffreys
template <typename Scalar>
Scalar kl_normal_jeffreys_grad(Scalar t)
{
    const Scalar k1 = static_cast<Scalar>(kKl1);
    const Scalar k2 = static_cast<Scalar>(kKl2);
    const Scalar k3 = static_cast<Scalar>(kKl3);
    const Scalar s = sigmoid(k2 + k3 * t);
    return -k1 * k3 * s * (Scalar(1) - s) - Scalar(0.5) * sigmoid(-t);
}

} // namespace prune
} // namespace mcunas

#endif
