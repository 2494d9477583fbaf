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
// Coverage demo: loads a scene, sweeps a UE grid across the map, and renders
// received power (sum of squared path amplitudes) as an ASCII heat map.
//
//   demo_coverage_grid [scene.json [bs_x bs_y bs_z]]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <csiforge/csiforge.hpp>

using namespace csiforge;

int main(int argc, char **argv) {
    const char *scene = argc > 1 ? argv[1] : "scenes/courtyard.json";
    Vec3 bs{1.3, 1.4, 3.0};
    if (argc == 5) {
        bs = {std::atof(argv[2]), std::atof(argv[3]), std::atof(argv[4])};
    }

    const EnvironmentMap map = load_environment(scene);
    const Rect &b = map.bounds();

    TraceConfig tcfg;
    tcfg.max_reflection_order = 2;
    tcfg.tx_height_m = bs.z;
    tcfg.rx_height_m = 1.5;
    const PathTracer tracer(map, bs.xy(), tcfg);

    constexpr int kCols = 61;
    constexpr int kRows = 31;
    std::vector<double> power(static_cast<std::size_t>(kCols) * kRows, 0.0);
    double lo = 1e300, hi = 0.0;
    for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < kCols; ++c) {
            const Vec2 rx{b.xmin + (b.xmax - b.xmin) * (c + 0.5) / kCols,
                          b.ymax - (b.ymax - b.ymin) * (r + 0.5) / kRows};
            if (distance(rx, bs.xy()) < 1e-9)
                continue;
            double p = 0.0;
            for (const auto &path : tracer.trace(rx))
                p += std::norm(path.gain);
            power[static_cast<std::size_t>(r) * kCols + c] = p;
            if (p > 0.0) {
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
        }
    }

    std::printf("scene %s, BS at (%.1f, %.1f, %.1f), %zu walls\n", scene, bs.x, bs.y, bs.z,
                map.walls().size());
    if (hi <= 0.0) {
        std::printf("no propagation anywhere on the grid\n");
        return 1;
    }
    const double lo_db = 10.0 * std::log10(lo);
    const double hi_db = 10.0 * std::log10(hi);
    static const char ramp[] = " .:-=+*#%@";
    for (int r = 0; r < kRows; ++r) {
        std::putchar(' ');
        for (int c = 0; c < kCols; ++c) {
            const double p = power[static_cast<std::size_t>(r) * kCols + c];
            if (p <= 0.0) {
                std::putchar(' ');
                continue;
            }
            const double u = (10.0 * std::log10(p) - lo_db) / std::max(1e-12, hi_db - lo_db);
            std::putchar(ramp[static_cast<int>(std::round(u * (sizeof(ramp) - 2)))]);
        }
        std::putchar('\n');
    }
    std::printf("power range [%.1f, %.1f] dB\n", lo_db, hi_db);
    return 0;
}
