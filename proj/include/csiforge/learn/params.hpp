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

#include <cstddef>
#include <string>
#include <vector>

#include "csiforge/errors.hpp"

namespace csiforge {

struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> value;

    std::size_t size() const { return value.size(); }
};

/// Named parameter tensors in declaration order. The flat layout (used by
/// checkpoints and the optimizer) is the concatenation in that order.
struct ModelParams {
    std::vector<ParamTensor> tensors;

    ParamTensor &add(std::string name, std::vector<std::size_t> shape) {
        std::size_t n = 1;
        for (std::size_t d : shape)
            n *= d;
        tensors.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
        return tensors.back();
    }

    std::size_t index_of(const std::string &name) const {
        for (std::size_t i = 0; i < tensors.size(); ++i)
            if (tensors[i].name == name)
                return i;
        throw InternalError("no parameter tensor named \"" + name + "\"");
    }

    const std::vector<double> &at(const std::string &name) const {
        return tensors[index_of(name)].value;
    }
    std::vector<double> &at(const std::string &name) { return tensors[index_of(name)].value; }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto &t : tensors)
            n += t.size();
        return n;
    }

    void zero() {
        for (auto &t : tensors)
            std::fill(t.value.begin(), t.value.end(), 0.0);
    }

    void scale(double s) {
        for (auto &t : tensors)
            for (double &v : t.value)
                v *= s;
    }

    std::vector<double> flat() const {
        std::vector<double> out;
        out.reserve(total_size());
        for (const auto &t : tensors)
            out.insert(out.end(), t.value.begin(), t.value.end());
        return out;
    }

    void load_flat(const std::vector<double> &flat_values) {
        if (flat_values.size() != total_size())
            throw ValidationError("flat parameter array has " +
                                  std::to_string(flat_values.size()) + " values, model needs " +
                                  std::to_string(total_size()));
        std::size_t off = 0;
        for (auto &t : tensors) {
            std::copy(flat_values.begin() + static_cast<std::ptrdiff_t>(off),
                      flat_values.begin() + static_cast<std::ptrdiff_t>(off + t.size()),
                      t.value.begin());
            off += t.size();
        }
    }

    /// Zero-valued copy with identical names/shapes, for gradient buffers.
    ModelParams like() const {
        ModelParams g;
        g.tensors.reserve(tensors.size());
        for (const auto &t : tensors)
            g.tensors.push_back({t.name, t.shape, std::vector<double>(t.size(), 0.0)});
        return g;
    }
};

} // namespace csiforge
