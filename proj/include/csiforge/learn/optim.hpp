// SPDX-License-Identifier: Apache-2.0
//
// csiforge: deterministic ray-traced MIMO-OFDM channels and spatial CSI learning
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "csiforge/errors.hpp"
#include "csiforge/learn/params.hpp"

namespace csiforge {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    void validate() const {
        if (lr < 0.0)
            throw ValidationError("learning rate must be >= 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ValidationError("adamw betas must lie in [0, 1)");
        if (!(eps > 0.0))
            throw ValidationError("adamw eps must be > 0");
        if (weight_decay < 0.0)
            throw ValidationError("weight decay must be >= 0");
    }
};

/// AdamW with decoupled weight decay and bias-corrected moments:
/// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class AdamW {
  public:
    AdamW(const ModelParams &params, AdamWConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        m_ = params.like();
        v_ = params.like();
    }

    std::uint64_t step_count() const { return t_; }
    const AdamWConfig &config() const { return cfg_; }

    void step(ModelParams &params, const ModelParams &grads) {
        if (grads.tensors.size() != params.tensors.size())
            throw InternalError("adamw: gradient tensor count mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t ti = 0; ti < params.tensors.size(); ++ti) {
            auto &p = params.tensors[ti].value;
            const auto &g = grads.tensors[ti].value;
            if (g.size() != p.size())
                throw InternalError("adamw: gradient shape mismatch for \"" +
                                    params.tensors[ti].name + "\"");
            auto &m = m_.tensors[ti].value;
            auto &v = v_.tensors[ti].value;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!std::isfinite(g[i]))
                    throw TrainError("non-finite gradient in parameter \"" +
                                     params.tensors[ti].name + "\"");
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                p[i] -= cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) +
                                   cfg_.weight_decay * p[i]);
            }
        }
    }

  private:
    AdamWConfig cfg_;
    ModelParams m_;
    ModelParams v_;
    std::uint64_t t_ = 0;
};

} // namespace csiforge
