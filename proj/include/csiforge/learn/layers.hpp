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
// Layer primitives with hand-derived backward passes. Convention: backward
// functions ACCUMULATE (+=) into parameter gradients and ASSIGN input
// gradients, so minibatch loops sum parameter gradients naturally.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csiforge/errors.hpp"

namespace csiforge {

namespace detail {

inline void check_dim(const char *layer, const char *what, std::size_t got,
                      std::size_t expected) {
    if (got != expected)
        throw InternalError(std::string(layer) + ": " + what + " has size " +
                            std::to_string(got) + ", expected " + std::to_string(expected));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dense: y = W x + b, W row-major [out_dim][in_dim]
// ---------------------------------------------------------------------------

inline void dense_forward(const std::vector<double> &w, const std::vector<double> &b,
                          const std::vector<double> &x, std::vector<double> &y, int out_dim,
                          int in_dim) {
    const auto od = static_cast<std::size_t>(out_dim);
    const auto id = static_cast<std::size_t>(in_dim);
    detail::check_dim("dense", "weight", w.size(), od * id);
    detail::check_dim("dense", "bias", b.size(), od);
    detail::check_dim("dense", "input", x.size(), id);
    y.assign(od, 0.0);
    for (std::size_t o = 0; o < od; ++o) {
        double acc = b[o];
        const double *row = w.data() + o * id;
        for (std::size_t i = 0; i < id; ++i)
            acc += row[i] * x[i];
        y[o] = acc;
    }
}

inline void dense_backward(const std::vector<double> &w, const std::vector<double> &x,
                           const std::vector<double> &gy, std::vector<double> &gw,
                           std::vector<double> &gb, std::vector<double> &gx, int out_dim,
                           int in_dim) {
    const auto od = static_cast<std::size_t>(out_dim);
    const auto id = static_cast<std::size_t>(in_dim);
    detail::check_dim("dense", "weight", w.size(), od * id);
    detail::check_dim("dense", "input", x.size(), id);
    detail::check_dim("dense", "upstream gradient", gy.size(), od);
    detail::check_dim("dense", "weight gradient", gw.size(), od * id);
    detail::check_dim("dense", "bias gradient", gb.size(), od);
    gx.assign(id, 0.0);
    for (std::size_t o = 0; o < od; ++o) {
        const double g = gy[o];
        gb[o] += g;
        const double *row = w.data() + o * id;
        double *grow = gw.data() + o * id;
        for (std::size_t i = 0; i < id; ++i) {
            grow[i] += g * x[i];
            gx[i] += g * row[i];
        }
    }
}

// ---------------------------------------------------------------------------
// Elementwise activations
// ---------------------------------------------------------------------------

inline void relu_forward(const std::vector<double> &x, std::vector<double> &y) {
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

inline void relu_backward(const std::vector<double> &x, const std::vector<double> &gy,
                          std::vector<double> &gx) {
    detail::check_dim("relu", "upstream gradient", gy.size(), x.size());
    gx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
}

inline double softplus(double x) {
    // max(x,0) + log1p(exp(-|x|)) avoids overflow on either tail
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void softplus_forward(const std::vector<double> &x, std::vector<double> &y) {
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = softplus(x[i]);
}

inline void softplus_backward(const std::vector<double> &x, const std::vector<double> &gy,
                              std::vector<double> &gx) {
    detail::check_dim("softplus", "upstream gradient", gy.size(), x.size());
    gx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        gx[i] = gy[i] * sigmoid(x[i]);
}

// ---------------------------------------------------------------------------
// Conv2d: stride 1, zero same-padding, odd square kernels.
// Tensors are channel-major: x [c_in][h][w], kernels [c_out][c_in][k][k].
// ---------------------------------------------------------------------------

inline void conv2d_forward(const std::vector<double> &kernels, const std::vector<double> &bias,
                           const std::vector<double> &x, std::vector<double> &y, int c_in,
                           int h, int w, int c_out, int ksize) {
    if (ksize <= 0 || ksize % 2 == 0)
        throw InternalError("conv2d: kernel size must be a positive odd integer, got " +
                            std::to_string(ksize));
    const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    const auto kk = static_cast<std::size_t>(ksize) * static_cast<std::size_t>(ksize);
    detail::check_dim("conv2d", "kernels", kernels.size(),
                      static_cast<std::size_t>(c_out) * static_cast<std::size_t>(c_in) * kk);
    detail::check_dim("conv2d", "bias", bias.size(), static_cast<std::size_t>(c_out));
    detail::check_dim("conv2d", "input", x.size(), static_cast<std::size_t>(c_in) * plane);
    y.assign(static_cast<std::size_t>(c_out) * plane, 0.0);
    const int pad = ksize / 2;
    for (int o = 0; o < c_out; ++o) {
        double *yp = y.data() + static_cast<std::size_t>(o) * plane;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = bias[static_cast<std::size_t>(o)];
                for (int c = 0; c < c_in; ++c) {
                    const double *xp = x.data() + static_cast<std::size_t>(c) * plane;
                    const double *kp = kernels.data() +
                                       (static_cast<std::size_t>(o) * static_cast<std::size_t>(c_in) +
                                        static_cast<std::size_t>(c)) *
                                           kk;
                    for (int u = 0; u < ksize; ++u) {
                        const int ii = i + u - pad;
                        if (ii < 0 || ii >= h)
                            continue;
                        for (int v = 0; v < ksize; ++v) {
                            const int jj = j + v - pad;
                            if (jj < 0 || jj >= w)
                                continue;
                            acc += kp[u * ksize + v] * xp[ii * w + jj];
                        }
                    }
                }
                yp[i * w + j] = acc;
            }
    }
}

inline void conv2d_backward(const std::vector<double> &kernels, const std::vector<double> &x,
                            const std::vector<double> &gy, std::vector<double> &gk,
                            std::vector<double> &gb, std::vector<double> &gx, int c_in, int h,
                            int w, int c_out, int ksize) {
    const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    const auto kk = static_cast<std::size_t>(ksize) * static_cast<std::size_t>(ksize);
    detail::check_dim("conv2d", "kernels", kernels.size(),
                      static_cast<std::size_t>(c_out) * static_cast<std::size_t>(c_in) * kk);
    detail::check_dim("conv2d", "input", x.size(), static_cast<std::size_t>(c_in) * plane);
    detail::check_dim("conv2d", "upstream gradient", gy.size(),
                      static_cast<std::size_t>(c_out) * plane);
    detail::check_dim("conv2d", "kernel gradient", gk.size(), kernels.size());
    detail::check_dim("conv2d", "bias gradient", gb.size(), static_cast<std::size_t>(c_out));
    gx.assign(x.size(), 0.0);
    const int pad = ksize / 2;
    for (int o = 0; o < c_out; ++o) {
        const double *gyp = gy.data() + static_cast<std::size_t>(o) * plane;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const double g = gyp[i * w + j];
                if (g == 0.0)
                    continue;
                gb[static_cast<std::size_t>(o)] += g;
                for (int c = 0; c < c_in; ++c) {
                    const double *xp = x.data() + static_cast<std::size_t>(c) * plane;
                    double *gxp = gx.data() + static_cast<std::size_t>(c) * plane;
                    const std::size_t koff =
                        (static_cast<std::size_t>(o) * static_cast<std::size_t>(c_in) +
                         static_cast<std::size_t>(c)) *
                        kk;
                    const double *kp = kernels.data() + koff;
                    double *gkp = gk.data() + koff;
                    for (int u = 0; u < ksize; ++u) {
                        const int ii = i + u - pad;
                        if (ii < 0 || ii >= h)
                            continue;
                        for (int v = 0; v < ksize; ++v) {
                            const int jj = j + v - pad;
                            if (jj < 0 || jj >= w)
                                continue;
                            gkp[u * ksize + v] += g * xp[ii * w + jj];
                            gxp[ii * w + jj] += g * kp[u * ksize + v];
                        }
                    }
                }
            }
    }
}

// ---------------------------------------------------------------------------
// Max pooling 2x2, stride 2, trailing odd row/column dropped. Ties resolve to
// the lowest flat input index. argmax records winner indices for backward.
// ---------------------------------------------------------------------------

inline void maxpool2_forward(const std::vector<double> &x, std::vector<double> &y,
                             std::vector<std::size_t> &argmax, int c, int h, int w) {
    const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    detail::check_dim("maxpool", "input", x.size(), static_cast<std::size_t>(c) * plane);
    if (h < 2 || w < 2)
        throw InternalError("maxpool: input plane " + std::to_string(h) + "x" +
                            std::to_string(w) + " is smaller than the 2x2 window");
    const int oh = h / 2;
    const int ow = w / 2;
    const auto oplane = static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow);
    y.resize(static_cast<std::size_t>(c) * oplane);
    argmax.resize(y.size());
    for (int ch = 0; ch < c; ++ch) {
        const std::size_t base = static_cast<std::size_t>(ch) * plane;
        const std::size_t obase = static_cast<std::size_t>(ch) * oplane;
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                std::size_t best = base + static_cast<std::size_t>(2 * i) * w + 2 * j;
                double best_v = x[best];
                const std::size_t cand[3] = {best + 1, best + static_cast<std::size_t>(w),
                                             best + static_cast<std::size_t>(w) + 1};
                for (std::size_t idx : cand)
                    if (x[idx] > best_v) {
                        best_v = x[idx];
                        best = idx;
                    }
                y[obase + static_cast<std::size_t>(i) * ow + j] = best_v;
                argmax[obase + static_cast<std::size_t>(i) * ow + j] = best;
            }
    }
}

inline void maxpool2_backward(const std::vector<double> &gy,
                              const std::vector<std::size_t> &argmax, std::vector<double> &gx,
                              int c, int h, int w) {
    detail::check_dim("maxpool", "upstream gradient", gy.size(), argmax.size());
    gx.assign(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
                  static_cast<std::size_t>(w),
              0.0);
    for (std::size_t i = 0; i < gy.size(); ++i)
        gx[argmax[i]] += gy[i];
}

} // namespace csiforge
