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
// Shared helpers for the test binaries: random scene generation for the
// tracer-vs-oracle equivalence checks, the path comparison itself, and
// unique scratch directories for filesystem round-trips.

#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <csiforge/geometry.hpp>
#include <csiforge/raytrace.hpp>

#include "oracles.hpp"

namespace testsupport {

using csiforge::EnvironmentMap;
using csiforge::PathKind;
using csiforge::PropagationPath;
using csiforge::Rect;
using csiforge::Vec2;
using csiforge::Wall;

// Wall soup inside fixed bounds; two materials so material-dependent code
// paths get exercised. Heights 2..6 m against ground-level endpoints keep
// every wall active.
inline EnvironmentMap random_map(std::mt19937_64 &gen, int max_walls) {
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> height(2.0, 6.0);
    std::uniform_int_distribution<int> count(1, max_walls);
    std::uniform_int_distribution<int> mat(1, 2);

    const int n = count(gen);
    std::vector<Wall> walls;
    while (static_cast<int>(walls.size()) < n) {
        const Vec2 a{coord(gen), coord(gen)};
        const Vec2 b{coord(gen), coord(gen)};
        if (csiforge::distance(a, b) < 1.0)
            continue;
        walls.push_back({a, b, height(gen), mat(gen)});
    }
    return EnvironmentMap({-15.0, -15.0, 15.0, 15.0},
                          {{1, "brick", 3.0}, {2, "concrete", 6.0}}, std::move(walls));
}

inline std::pair<Vec2, Vec2> random_endpoints(std::mt19937_64 &gen) {
    std::uniform_real_distribution<double> coord(-12.0, 12.0);
    for (;;) {
        const Vec2 tx{coord(gen), coord(gen)};
        const Vec2 rx{coord(gen), coord(gen)};
        if (csiforge::distance(tx, rx) >= 1.0)
            return {tx, rx};
    }
}

// Compare a traced path list against the enumerate-and-solve reference.
// Empty string on match, human-readable mismatch otherwise. The caller must
// already have rejected Marginal oracle outcomes.
inline std::string diff_paths(const std::vector<PropagationPath> &got,
                              const oracle::TraceOutcome &want, double tol) {
    std::ostringstream oss;

    bool got_los = false;
    std::vector<const PropagationPath *> refl;
    for (const PropagationPath &p : got) {
        if (p.kind == PathKind::Los)
            got_los = true;
        else
            refl.push_back(&p);
    }
    if (got_los != want.los) {
        oss << "los mismatch: traced " << got_los << ", reference " << want.los;
        return oss.str();
    }
    if (refl.size() != want.paths.size()) {
        oss << "reflection count mismatch: traced " << refl.size() << ", reference "
            << want.paths.size();
        return oss.str();
    }

    std::sort(refl.begin(), refl.end(),
              [](const PropagationPath *a, const PropagationPath *b) {
                  return a->wall_ids < b->wall_ids;
              });
    for (std::size_t i = 0; i < refl.size(); ++i) {
        const PropagationPath &g = *refl[i];
        const oracle::OraclePath &w = want.paths[i];
        if (g.wall_ids != w.walls) {
            oss << "wall sequence mismatch at sorted slot " << i;
            return oss.str();
        }
        if (g.vertices.size() != w.vertices.size()) {
            oss << "vertex count mismatch on sequence slot " << i;
            return oss.str();
        }
        for (std::size_t v = 0; v < g.vertices.size(); ++v) {
            const double dev = csiforge::distance(g.vertices[v], w.vertices[v]);
            if (dev > tol) {
                oss << "vertex " << v << " off by " << dev << " m on sequence slot " << i;
                return oss.str();
            }
        }
        if (std::abs(g.length - w.length) > tol) {
            oss << "length off by " << std::abs(g.length - w.length) << " m on slot " << i;
            return oss.str();
        }
    }
    return {};
}

inline std::filesystem::path unique_temp_dir(const std::string &tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("csiforge-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testsupport
