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
//
// Training loss and evaluation metric.

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "csiforge/errors.hpp"

namespace csiforge {

namespace detail {

inline double squared_norm(const std::vector<double> &pred, const std::vector<double> &gt,
                           const char *op) {
    if (pred.size() != gt.size())
        throw ValidationError(std::string(op) + ": prediction length " +
                              std::to_string(pred.size()) + " != ground-truth length " +
                              std::to_string(gt.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        s += d * d;
    }
    return s;
}

} // namespace detail

/// Smooth L1 on the squared Frobenius norm of the difference vector:
/// 0.5*s if s < 1 else s - 0.5, with s = ||pred - gt||^2. Both branches are
/// quadratic in the entries; they meet at s = 1 with value 0.5.
inline double smooth_l1(const std::vector<double> &pred, const std::vector<double> &gt) {
    const double s = detail::squared_norm(pred, gt, "smooth_l1");
    return s < 1.0 ? 0.5 * s : s - 0.5;
}

/// Gradient w.r.t. pred: d on the inner branch (0.5 * 2d), 2d on the outer.
/// The boundary s == 1 uses the inner-branch value.
inline std::vector<double> smooth_l1_grad(const std::vector<double> &pred,
                                          const std::vector<double> &gt) {
    const double s = detail::squared_norm(pred, gt, "smooth_l1_grad");
    const double scale = s <= 1.0 ? 1.0 : 2.0;
    std::vector<double> g(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        g[i] = scale * (pred[i] - gt[i]);
    return g;
}

enum class NmseMode {
    MeanOfRatios, // mean over samples of ||err||^2 / ||gt||^2
    RatioOfSums   // sum ||err||^2 over the set / sum ||gt||^2 over the set
};

/// Per-sample normalized squared Frobenius error on complex CSI.
inline double nmse_sample(const std::vector<std::complex<double>> &pred,
                          const std::vector<std::complex<double>> &gt) {
    if (pred.size() != gt.size())
        throw ValidationError("nmse: prediction length " + std::to_string(pred.size()) +
                              " != ground-truth length " + std::to_string(gt.size()));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        num += std::norm(pred[i] - gt[i]);
        den += std::norm(gt[i]);
    }
    if (!(den > 0.0))
        throw ValidationError("nmse: ground-truth sample is all-zero, ratio undefined");
    return num / den;
}

inline double nmse(const std::vector<std::vector<std::complex<double>>> &pred,
                   const std::vector<std::vector<std::complex<double>>> &gt,
                   NmseMode mode = NmseMode::MeanOfRatios) {
    if (pred.size() != gt.size())
        throw ValidationError("nmse: batch sizes differ, " + std::to_string(pred.size()) +
                              " vs " + std::to_string(gt.size()));
    if (pred.empty())
        throw ValidationError("nmse: empty batch");
    if (mode == NmseMode::MeanOfRatios) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            acc += nmse_sample(pred[i], gt[i]);
        return acc / static_cast<double>(pred.size());
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != gt[i].size())
            throw ValidationError("nmse: sample " + std::to_string(i) + " shape mismatch");
        for (std::size_t j = 0; j < pred[i].size(); ++j) {
            num += std::norm(pred[i][j] - gt[i][j]);
            den += std::norm(gt[i][j]);
        }
    }
    if (!(den > 0.0))
        throw ValidationError("nmse: ground truth is all-zero, ratio undefined");
    return num / den;
}

} // namespace csiforge
