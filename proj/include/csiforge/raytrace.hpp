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
// Deterministic multipath computation by the image method: LOS visibility
// plus specular reflections up to a configured order. Free-space amplitude
// per unit antenna gain, fixed per-material magnitude loss per reflection,
// delay carried as negative phase exp(-j 2 pi f L / c).

#pragma once

#include <complex>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "csiforge/errors.hpp"
#include "csiforge/geometry.hpp"

namespace csiforge {

enum class PathKind { Los = 0, Reflection = 1 };

struct PropagationPath {
    PathKind kind = PathKind::Los;
    int order = 0;              // reflection count, 0 for LOS
    std::vector<Vec2> vertices; // TX, reflection points..., RX
    double length = 0.0;        // meters, sum over legs
    double delay = 0.0;         // seconds, length / c
    std::complex<double> gain;  // linear amplitude at carrier frequency
    double aod = 0.0;           // departure bearing at TX
    double aoa = 0.0;           // arrival bearing at RX
    std::vector<int> wall_ids;  // reflecting walls in TX-to-RX order
};

struct TraceConfig {
    int max_reflection_order = 2; // hard cap 3: image-method cost grows as walls^order
    double carrier_frequency_hz = 2.4e9;
    double min_path_gain = 0.0; // cull paths with |gain| below this linear amplitude
    double tx_height_m = 0.0;   // a wall participates only when both endpoints
    double rx_height_m = 0.0;   // sit below its top edge

    void validate() const {
        if (max_reflection_order < 0 || max_reflection_order > 3)
            throw ValidationError("max_reflection_order must be in [0, 3], got " +
                                  std::to_string(max_reflection_order));
        if (!(carrier_frequency_hz > 0.0))
            throw ValidationError("carrier_frequency_hz must be > 0");
        if (min_path_gain < 0.0)
            throw ValidationError("min_path_gain must be >= 0");
        if (tx_height_m < 0.0 || rx_height_m < 0.0)
            throw ValidationError("antenna heights must be >= 0");
    }
};

/// True iff the open segment (a, b) properly crosses the wall segment.
/// Shared endpoints and grazing touches within kGeomTol meters do not occlude;
/// parallel (including collinear) walls never occlude.
inline bool segment_occludes(Vec2 a, Vec2 b, const Wall &wall) {
    const Vec2 d1 = b - a;
    const Vec2 d2 = wall.p1 - wall.p0;
    const double denom = cross(d1, d2);
    const double len1 = d1.norm();
    const double len2 = d2.norm();
    if (std::abs(denom) <= kGeomTol * len1 * len2)
        return false;
    const Vec2 r = wall.p0 - a;
    const double s = cross(r, d2) / denom; // parameter along (a, b)
    const double t = cross(r, d1) / denom; // parameter along the wall
    return s * len1 > kGeomTol && (1.0 - s) * len1 > kGeomTol && t * len2 > kGeomTol &&
           (1.0 - t) * len2 > kGeomTol;
}

/// Reflection of p across the infinite line through the wall.
inline Vec2 mirror_point(Vec2 p, const Wall &wall) {
    const Vec2 d = wall.p1 - wall.p0;
    const double len2 = dot(d, d);
    const Vec2 r = p - wall.p0;
    const double t = dot(r, d) / len2;
    const Vec2 foot = wall.p0 + d * t;
    return foot + (foot - p);
}

/// Complex path gain at frequency f for a TX->...->RX vertex chain:
/// (lambda / (4 pi L)) * prod 10^(-loss_dB/20) * exp(-j 2 pi f L / c).
inline std::complex<double> path_gain(const std::vector<Vec2> &vertices,
                                      const std::vector<int> &wall_ids, const EnvironmentMap &map,
                                      double f) {
    double length = 0.0;
    for (std::size_t i = 1; i < vertices.size(); ++i)
        length += distance(vertices[i - 1], vertices[i]);
    const double lambda = kSpeedOfLight / f;
    double amp = lambda / (4.0 * std::numbers::pi * length);
    for (int id : wall_ids) {
        const Wall &w = map.walls()[static_cast<std::size_t>(id)];
        amp *= std::pow(10.0, -map.material_by_id(w.material_id).reflection_loss_db / 20.0);
    }
    const double phase = -2.0 * std::numbers::pi * f * length / kSpeedOfLight;
    return std::polar(amp, phase);
}

/// Image-method tracer with the TX-side work hoisted: active-wall filtering
/// and the mirror-image tree depend only on (map, tx, cfg), so one instance
/// serves any number of RX queries. Pure per query, safe for concurrent use.
class PathTracer {
  public:
    PathTracer(const EnvironmentMap &map, Vec2 tx, const TraceConfig &cfg)
        : map_(&map), tx_(tx), cfg_(cfg) {
        cfg_.validate();
        if (!map.bounds().contains(tx, kGeomTol))
            throw ValidationError("tx outside map bounds");

        const double clearance = std::max(cfg_.tx_height_m, cfg_.rx_height_m);
        for (std::size_t i = 0; i < map.walls().size(); ++i) {
            const Wall &w = map.walls()[i];
            if (w.height <= clearance)
                continue;
            ActiveWall aw;
            aw.p0 = w.p0;
            aw.d = w.p1 - w.p0;
            aw.len = aw.d.norm();
            aw.original_index = static_cast<int>(i);
            aw.amp_factor =
                std::pow(10.0, -map.material_by_id(w.material_id).reflection_loss_db / 20.0);
            aw.bx0 = std::min(w.p0.x, w.p1.x);
            aw.bx1 = std::max(w.p0.x, w.p1.x);
            aw.by0 = std::min(w.p0.y, w.p1.y);
            aw.by1 = std::max(w.p0.y, w.p1.y);
            walls_.push_back(aw);
        }
        build_image_tree();
    }

    Vec2 tx() const { return tx_; }
    const TraceConfig &config() const { return cfg_; }

    std::vector<PropagationPath> trace(Vec2 rx) const {
        if (distance(tx_, rx) <= kGeomTol)
            throw ValidationError("tx and rx coincide");
        if (!map_->bounds().contains(rx, kGeomTol))
            throw ValidationError("rx outside map bounds");

        std::vector<PropagationPath> paths;
        const double lambda = kSpeedOfLight / cfg_.carrier_frequency_hz;

        if (!blocked(tx_, rx)) {
            PropagationPath los;
            los.kind = PathKind::Los;
            los.order = 0;
            los.vertices = {tx_, rx};
            finish_path(los);
            if (std::abs(los.gain) >= cfg_.min_path_gain)
                paths.push_back(std::move(los));
        }

        // Back-trace every image node: reflect off the node's wall, then walk
        // the parent chain toward TX. Coordinates stay in world space.
        Vec2 pts[3];
        for (const ImageNode &leaf : nodes_) {
            const double total_len = distance(rx, leaf.image);
            if (total_len <= kGeomTol)
                continue;
            if (cfg_.min_path_gain > 0.0 &&
                lambda / (4.0 * std::numbers::pi * total_len) * leaf.cum_amp < cfg_.min_path_gain)
                continue;

            Vec2 target = rx;
            int ni = static_cast<int>(&leaf - nodes_.data());
            bool ok = true;
            int count = 0;
            while (ni >= 0) {
                const ImageNode &n = nodes_[static_cast<std::size_t>(ni)];
                const ActiveWall &w = walls_[static_cast<std::size_t>(n.wall)];
                const Vec2 d1 = n.image - target;
                const double denom = cross(d1, w.d);
                if (std::abs(denom) <= kGeomTol * w.len) {
                    ok = false;
                    break;
                }
                const Vec2 r = w.p0 - target;
                const double t = cross(r, d1) / denom;
                if (t * w.len <= kGeomTol || (1.0 - t) * w.len <= kGeomTol) {
                    ok = false; // reflection point off the wall extent (or at an endpoint)
                    break;
                }
                const double s = cross(r, w.d) / denom;
                const double seg_len = d1.norm();
                if (s * seg_len <= kGeomTol || (1.0 - s) * seg_len <= kGeomTol) {
                    ok = false; // target and image not strictly astride the wall line
                    break;
                }
                pts[count++] = target + d1 * s;
                target = pts[count - 1];
                ni = n.parent;
            }
            if (!ok)
                continue;

            PropagationPath path;
            path.kind = PathKind::Reflection;
            path.order = leaf.order;
            path.vertices.reserve(static_cast<std::size_t>(leaf.order) + 2);
            path.vertices.push_back(tx_);
            for (int i = count - 1; i >= 0; --i)
                path.vertices.push_back(pts[i]);
            path.vertices.push_back(rx);

            if (!legs_valid(path.vertices))
                continue;

            path.wall_ids.reserve(static_cast<std::size_t>(leaf.order));
            collect_wall_ids(static_cast<int>(&leaf - nodes_.data()), path.wall_ids);
            finish_path(path);
            if (std::abs(path.gain) >= cfg_.min_path_gain)
                paths.push_back(std::move(path));
        }

        std::sort(paths.begin(), paths.end(), [](const PropagationPath &a, const PropagationPath &b) {
            if (a.delay != b.delay)
                return a.delay < b.delay;
            if (a.kind != b.kind)
                return static_cast<int>(a.kind) < static_cast<int>(b.kind);
            return a.wall_ids < b.wall_ids;
        });
        return paths;
    }

  private:
    struct ActiveWall {
        Vec2 p0, d;
        double len = 0.0;
        int original_index = 0;
        double amp_factor = 1.0;
        double bx0 = 0.0, by0 = 0.0, bx1 = 0.0, by1 = 0.0;
    };

    // One node per ordered wall sequence; image = TX mirrored through the
    // sequence, cum_amp = product of the sequence's reflection magnitudes.
    struct ImageNode {
        int wall = 0; // index into walls_
        Vec2 image;
        int parent = -1;
        int order = 1;
        double cum_amp = 1.0;
    };

    void build_image_tree() {
        if (cfg_.max_reflection_order < 1 || walls_.empty())
            return;
        const int nw = static_cast<int>(walls_.size());
        for (int w = 0; w < nw; ++w)
            nodes_.push_back({w, mirror_about(tx_, walls_[static_cast<std::size_t>(w)]), -1, 1,
                              walls_[static_cast<std::size_t>(w)].amp_factor});
        std::size_t level_begin = 0;
        for (int order = 2; order <= cfg_.max_reflection_order; ++order) {
            const std::size_t level_end = nodes_.size();
            for (std::size_t pi = level_begin; pi < level_end; ++pi) {
                for (int w = 0; w < nw; ++w) {
                    if (w == nodes_[pi].wall)
                        continue; // consecutive re-reflection off the same plane is impossible
                    nodes_.push_back({w, mirror_about(nodes_[pi].image, walls_[static_cast<std::size_t>(w)]),
                                      static_cast<int>(pi), order,
                                      nodes_[pi].cum_amp * walls_[static_cast<std::size_t>(w)].amp_factor});
                }
            }
            level_begin = level_end;
        }
    }

    static Vec2 mirror_about(Vec2 p, const ActiveWall &w) {
        const double t = dot(p - w.p0, w.d) / dot(w.d, w.d);
        const Vec2 foot = w.p0 + w.d * t;
        return foot + (foot - p);
    }

    bool blocked(Vec2 a, Vec2 b) const {
        const double lx0 = std::min(a.x, b.x) - kGeomTol;
        const double lx1 = std::max(a.x, b.x) + kGeomTol;
        const double ly0 = std::min(a.y, b.y) - kGeomTol;
        const double ly1 = std::max(a.y, b.y) + kGeomTol;
        const Vec2 r = b - a;
        const double rlen = r.norm();
        for (const ActiveWall &w : walls_) {
            if (w.bx1 < lx0 || w.bx0 > lx1 || w.by1 < ly0 || w.by0 > ly1)
                continue;
            const double denom = cross(r, w.d);
            if (std::abs(denom) <= kGeomTol * rlen * w.len)
                continue;
            const Vec2 qp = w.p0 - a;
            const double s = cross(qp, w.d) / denom;
            const double t = cross(qp, r) / denom;
            if (s * rlen <= kGeomTol || (1.0 - s) * rlen <= kGeomTol)
                continue;
            if (t * w.len <= kGeomTol || (1.0 - t) * w.len <= kGeomTol)
                continue;
            return true;
        }
        return false;
    }

    bool legs_valid(const std::vector<Vec2> &vertices) const {
        for (std::size_t i = 1; i < vertices.size(); ++i) {
            if (distance(vertices[i - 1], vertices[i]) <= kGeomTol)
                return false;
            if (blocked(vertices[i - 1], vertices[i]))
                return false;
        }
        return true;
    }

    void collect_wall_ids(int node_index, std::vector<int> &out) const {
        // parent chain runs last-wall-first; emit TX-to-RX order
        int chain[3];
        int count = 0;
        while (node_index >= 0) {
            const ImageNode &n = nodes_[static_cast<std::size_t>(node_index)];
            chain[count++] = walls_[static_cast<std::size_t>(n.wall)].original_index;
            node_index = n.parent;
        }
        for (int i = count - 1; i >= 0; --i)
            out.push_back(chain[i]);
    }

    void finish_path(PropagationPath &p) const {
        p.length = 0.0;
        for (std::size_t i = 1; i < p.vertices.size(); ++i)
            p.length += distance(p.vertices[i - 1], p.vertices[i]);
        p.delay = p.length / kSpeedOfLight;
        p.gain = path_gain(p.vertices, p.wall_ids, *map_, cfg_.carrier_frequency_hz);
        p.aod = bearing(p.vertices.front(), p.vertices[1]);
        p.aoa = bearing(p.vertices.back(), p.vertices[p.vertices.size() - 2]);
    }

    const EnvironmentMap *map_;
    Vec2 tx_;
    TraceConfig cfg_;
    std::vector<ActiveWall> walls_;
    std::vector<ImageNode> nodes_;
};

/// LOS path iff no wall occludes the direct segment.
inline std::optional<PropagationPath> line_of_sight(const EnvironmentMap &map, Vec2 tx, Vec2 rx,
                                                    const TraceConfig &cfg) {
    TraceConfig los_cfg = cfg;
    los_cfg.max_reflection_order = 0;
    auto paths = PathTracer(map, tx, los_cfg).trace(rx);
    if (paths.empty())
        return std::nullopt;
    return paths.front();
}

/// One-shot trace; prefer constructing a PathTracer when sweeping many RX.
inline std::vector<PropagationPath> trace_paths(const EnvironmentMap &map, Vec2 tx, Vec2 rx,
                                                const TraceConfig &cfg) {
    return PathTracer(map, tx, cfg).trace(rx);
}

/// Debug path dump, one CSV row per path.
inline std::string path_dump_csv(const std::vector<PropagationPath> &paths) {
    std::string out = "kind,order,length_m,delay_s,gain_re,gain_im,aod_rad,aoa_rad,wall_ids\n";
    char buf[256];
    for (const auto &p : paths) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,",
                      p.kind == PathKind::Los ? "LOS" : "REF", p.order, p.length, p.delay,
                      p.gain.real(), p.gain.imag(), p.aod, p.aoa);
        out += buf;
        for (std::size_t i = 0; i < p.wall_ids.size(); ++i) {
            if (i)
                out += ';';
            out += std::to_string(p.wall_ids[i]);
        }
        out += '\n';
    }
    return out;
}

} // namespace csiforge
