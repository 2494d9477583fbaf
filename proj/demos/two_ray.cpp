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
// Two-ray demo: one lossless wall acts as a ground plane, so each subcarrier
// sees the direct ray interfering with its mirror image. Prints the magnitude
// profile across the band together with a crude sparkline of the fading.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <csiforge/csiforge.hpp>

using namespace csiforge;

int main() {
    const EnvironmentMap map({-100.0, -50.0, 200.0, 50.0}, {{1, "mirror", 0.0}},
                             {{{-80.0, 0.0}, {180.0, 0.0}, 10.0, 1}});

    TraceConfig tcfg;
    tcfg.max_reflection_order = 1;
    const auto paths = trace_paths(map, {0.0, 5.0}, {10.0, 5.0}, tcfg);

    std::printf("paths:\n%s\n", path_dump_csv(paths).c_str());

    ArrayConfig array;
    OfdmConfig ofdm;
    ofdm.num_subcarriers = 64;
    ofdm.subcarrier_spacing_hz = 480e3; // wide band so the fade sweeps a full cycle
    const CsiSample csi = synthesize_csi(paths, array, ofdm, {10.0, 5.0, 0.0});

    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < csi.n_k; ++k) {
        const double m = std::abs(csi.at(0, k));
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }

    static const char ramp[] = " .:-=+*#%@";
    std::printf("antenna 0, %d subcarriers at %.0f kHz spacing:\n  |", csi.n_k,
                ofdm.subcarrier_spacing_hz / 1e3);
    for (int k = 0; k < csi.n_k; ++k) {
        const double m = std::abs(csi.at(0, k));
        const int idx =
            static_cast<int>(std::round((m - lo) / (hi - lo) * (sizeof(ramp) - 2)));
        std::putchar(ramp[idx]);
    }
    std::printf("|\n  magnitude range [%.3e, %.3e], fade depth %.1f dB\n", lo, hi,
                20.0 * std::log10(hi / lo));
    return 0;
}
