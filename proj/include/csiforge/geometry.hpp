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
// 2.5D environment model: vertical wall segments over a 2D footprint.
// Propagation is computed in the horizontal plane; wall heights only gate
// whether a wall can block or reflect at all.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiforge/errors.hpp"
#include "csiforge/io.hpp"

namespace csiforge {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kGeomTol = 1e-9;             // meters; grazing / boundary tolerance

// ---------------------------------------------------------------------------
// Plane and space primitives
// ---------------------------------------------------------------------------

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2 &) const = default;

    double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (b - a).norm(); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3 &) const = default;
    Vec2 xy() const { return {x, y}; }
};

/// Wrap an angle to (-pi, pi].
inline double wrap_to_pi(double a) {
    double r = std::remainder(a, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi)
        r += 2.0 * std::numbers::pi;
    return r;
}

/// Bearing of the direction from `from` to `to`, measured from the +x axis.
inline double bearing(Vec2 from, Vec2 to) {
    return wrap_to_pi(std::atan2(to.y - from.y, to.x - from.x));
}

struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    bool operator==(const Rect &) const = default;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double diagonal() const { return std::hypot(width(), height()); }

    bool contains(Vec2 p, double tol = 0.0) const {
        return p.x >= xmin - tol && p.x <= xmax + tol && p.y >= ymin - tol && p.y <= ymax + tol;
    }
};

// ---------------------------------------------------------------------------
// Map entities
// ---------------------------------------------------------------------------

struct Material {
    int id = 0;
    std::string name;
    double reflection_loss_db = 0.0; // power loss per reflection, dB, >= 0
};

struct Wall {
    Vec2 p0, p1;
    double height = 0.0; // meters, > 0
    int material_id = 0;

    double length() const { return distance(p0, p1); }
    Vec2 direction() const { return (p1 - p0) * (1.0 / length()); }
};

/// One nearest-wall query result, as seen from the query point.
struct WallFeature {
    double distance = 0.0;    // true minimum point-to-segment distance
    double orientation = 0.0; // bearing from the query point to the nearest point, (-pi, pi]
    int material_index = 0;   // position of the wall's material in the map's material list
    std::size_t wall_index = 0;
};

struct SegmentDistance {
    double distance = 0.0;
    Vec2 nearest; // the achieving point on the segment
};

/// Euclidean minimum distance from p to the wall segment, with the achieving
/// point (perpendicular foot when interior, else the clamped endpoint).
inline SegmentDistance point_segment_distance(Vec2 p, const Wall &wall) {
    const Vec2 d = wall.p1 - wall.p0;
    const double len2 = dot(d, d);
    double t = len2 > 0.0 ? dot(p - wall.p0, d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 nearest = wall.p0 + d * t;
    return {distance(p, nearest), nearest};
}

// ---------------------------------------------------------------------------
// EnvironmentMap
// ---------------------------------------------------------------------------

/// Validated, immutable-after-construction wall map. All queries are pure and
/// safe for concurrent readers.
class EnvironmentMap {
  public:
    EnvironmentMap() = default;

    EnvironmentMap(Rect bounds, std::vector<Material> materials, std::vector<Wall> walls)
        : bounds_(bounds), materials_(std::move(materials)), walls_(std::move(walls)) {
        validate();
    }

    const Rect &bounds() const { return bounds_; }
    const std::vector<Material> &materials() const { return materials_; }
    const std::vector<Wall> &walls() const { return walls_; }

    /// Position of a material id in the material list; throws if dangling.
    int material_index(int material_id) const {
        for (std::size_t i = 0; i < materials_.size(); ++i)
            if (materials_[i].id == material_id)
                return static_cast<int>(i);
        throw ValidationError("material id " + std::to_string(material_id) + " is not declared");
    }

    const Material &material_by_id(int material_id) const {
        return materials_[static_cast<std::size_t>(material_index(material_id))];
    }

    /// Canonical serialized form (sorted keys, shortest round-trip numbers);
    /// the basis for content hashing and on-disk persistence.
    std::string canonical_json() const {
        nlohmann::json j;
        j["bounds"] = {bounds_.xmin, bounds_.ymin, bounds_.xmax, bounds_.ymax};
        j["materials"] = nlohmann::json::array();
        for (const auto &m : materials_)
            j["materials"].push_back({{"id", m.id}, {"name", m.name}, {"reflection_loss_db", m.reflection_loss_db}});
        j["walls"] = nlohmann::json::array();
        for (const auto &w : walls_)
            j["walls"].push_back({{"p0", {w.p0.x, w.p0.y}},
                                  {"p1", {w.p1.x, w.p1.y}},
                                  {"height", w.height},
                                  {"material", w.material_id}});
        return j.dump();
    }

    std::string content_hash() const { return hex64(fnv1a64(canonical_json())); }

  private:
    void validate() const {
        if (!(bounds_.xmax >= bounds_.xmin) || !(bounds_.ymax >= bounds_.ymin))
            throw ValidationError("bounds are inverted or non-finite");
        for (std::size_t i = 0; i < materials_.size(); ++i) {
            const Material &m = materials_[i];
            if (!std::isfinite(m.reflection_loss_db) || m.reflection_loss_db < 0.0)
                throw ValidationError("material " + std::to_string(m.id) +
                                      ": reflection_loss_db must be finite and >= 0");
            for (std::size_t j = i + 1; j < materials_.size(); ++j)
                if (materials_[j].id == m.id)
                    throw ValidationError("material id " + std::to_string(m.id) + " declared twice");
        }
        for (std::size_t i = 0; i < walls_.size(); ++i) {
            const Wall &w = walls_[i];
            const std::string tag = "wall " + std::to_string(i);
            if (!std::isfinite(w.p0.x) || !std::isfinite(w.p0.y) || !std::isfinite(w.p1.x) ||
                !std::isfinite(w.p1.y))
                throw ValidationError(tag + ": non-finite endpoint");
            if (w.length() <= 1e-6)
                throw ValidationError(tag + ": zero-length segment (p0 == p1 within 1e-6 m)");
            if (!(w.height > 0.0) || !std::isfinite(w.height))
                throw ValidationError(tag + ": height must be > 0");
            if (!bounds_.contains(w.p0) || !bounds_.contains(w.p1))
                throw ValidationError(tag + ": endpoint outside bounds");
            bool found = false;
            for (const auto &m : materials_)
                found = found || m.id == w.material_id;
            if (!found)
                throw ValidationError(tag + ": references undeclared material id " +
                                      std::to_string(w.material_id));
        }
    }

    Rect bounds_;
    std::vector<Material> materials_;
    std::vector<Wall> walls_;
};

// ---------------------------------------------------------------------------
// Environment file format (UTF-8 JSON, meters and dB throughout)
// ---------------------------------------------------------------------------

inline EnvironmentMap parse_environment(const std::string &text, const std::string &context) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(context + ": " + e.what());
    }
    try {
        if (!j.contains("bounds") || !j["bounds"].is_array() || j["bounds"].size() != 4)
            throw ParseError(context + ": \"bounds\" must be [xmin, ymin, xmax, ymax]");
        Rect bounds{j["bounds"][0].get<double>(), j["bounds"][1].get<double>(),
                    j["bounds"][2].get<double>(), j["bounds"][3].get<double>()};
        std::vector<Material> materials;
        for (const auto &m : j.value("materials", nlohmann::json::array()))
            materials.push_back({m.at("id").get<int>(), m.value("name", std::string{}),
                                 m.at("reflection_loss_db").get<double>()});
        std::vector<Wall> walls;
        for (const auto &w : j.value("walls", nlohmann::json::array())) {
            const auto &p0 = w.at("p0");
            const auto &p1 = w.at("p1");
            walls.push_back({{p0.at(0).get<double>(), p0.at(1).get<double>()},
                             {p1.at(0).get<double>(), p1.at(1).get<double>()},
                             w.at("height").get<double>(),
                             w.at("material").get<int>()});
        }
        return EnvironmentMap(bounds, std::move(materials), std::move(walls));
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(context + ": " + e.what());
    }
}

inline EnvironmentMap load_environment(const std::filesystem::path &path) {
    return parse_environment(read_file_bytes(path), path.string());
}

inline void save_environment(const EnvironmentMap &map, const std::filesystem::path &path) {
    atomic_write_file(path, map.canonical_json());
}

// ---------------------------------------------------------------------------
// Nearest-wall query
// ---------------------------------------------------------------------------

/// Features of the up-to-k nearest walls, ascending by distance; ties keep
/// wall declaration order. Fewer than k walls returns a shorter list (the
/// feature assembly pads, this op reports only real walls).
inline std::vector<WallFeature> nearest_walls(const EnvironmentMap &map, Vec2 p, int k) {
    std::vector<WallFeature> feats;
    feats.reserve(map.walls().size());
    for (std::size_t i = 0; i < map.walls().size(); ++i) {
        const Wall &w = map.walls()[i];
        const SegmentDistance sd = point_segment_distance(p, w);
        const double orient = sd.distance > 0.0 ? bearing(p, sd.nearest) : 0.0;
        feats.push_back({sd.distance, orient, map.material_index(w.material_id), i});
    }
    std::stable_sort(feats.begin(), feats.end(),
                     [](const WallFeature &a, const WallFeature &b) { return a.distance < b.distance; });
    if (k < 0)
        k = 0;
    if (feats.size() > static_cast<std::size_t>(k))
        feats.resize(static_cast<std::size_t>(k));
    return feats;
}

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

/// W x W window of cells centered on the RX, four planes per cell.
/// material holds the occupying wall's material index, -1 when free.
struct RasterMap {
    Vec2 origin;            // lower-left corner of cell (0, 0)
    double resolution = 0.0; // meters per cell
    int width = 0;          // W, odd

    std::vector<double> occupancy;
    std::vector<double> material;
    std::vector<double> tx_marker;
    std::vector<double> rx_marker;

    std::size_t cell(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(ix);
    }
};

namespace detail {

/// Closed segment vs closed axis-aligned box, box expanded by tol
/// (Liang-Barsky clip; boundary touches count as hits).
inline bool segment_intersects_box(Vec2 a, Vec2 b, double x0, double y0, double x1, double y1,
                                   double tol) {
    x0 -= tol;
    y0 -= tol;
    x1 += tol;
    y1 += tol;
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    double t0 = 0.0, t1 = 1.0;
    auto clip = [&](double p, double q) {
        // constraint p * t <= q
        if (p == 0.0)
            return q >= 0.0;
        const double r = q / p;
        if (p < 0.0) {
            if (r > t1)
                return false;
            if (r > t0)
                t0 = r;
        } else {
            if (r < t0)
                return false;
            if (r < t1)
                t1 = r;
        }
        return true;
    };
    return clip(-dx, a.x - x0) && clip(dx, x1 - a.x) && clip(-dy, a.y - y0) &&
           clip(dy, y1 - a.y) && t0 <= t1;
}

} // namespace detail

/// Occupancy window of w x w cells (w odd) at `res` meters per cell, centered
/// on rx. A cell is occupied iff any wall segment touches its closed square
/// footprint; the lowest wall index wins the material plane on overlap. The
/// tx marker is set only when tx falls inside the window.
inline RasterMap rasterize(const EnvironmentMap &map, Vec2 rx, Vec2 tx, int w, double res) {
    if (w <= 0 || w % 2 == 0)
        throw ValidationError("raster width must be a positive odd integer, got " + std::to_string(w));
    if (!(res > 0.0))
        throw ValidationError("raster resolution must be > 0");

    RasterMap r;
    r.width = w;
    r.resolution = res;
    const int c = (w - 1) / 2;
    r.origin = {rx.x - res * (c + 0.5), rx.y - res * (c + 0.5)};
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(w);
    r.occupancy.assign(n, 0.0);
    r.material.assign(n, -1.0);
    r.tx_marker.assign(n, 0.0);
    r.rx_marker.assign(n, 0.0);

    const double win_x1 = r.origin.x + res * w;
    const double win_y1 = r.origin.y + res * w;

    for (std::size_t wi = 0; wi < map.walls().size(); ++wi) {
        const Wall &wall = map.walls()[wi];
        const double bx0 = std::min(wall.p0.x, wall.p1.x) - kGeomTol;
        const double bx1 = std::max(wall.p0.x, wall.p1.x) + kGeomTol;
        const double by0 = std::min(wall.p0.y, wall.p1.y) - kGeomTol;
        const double by1 = std::max(wall.p0.y, wall.p1.y) + kGeomTol;
        if (bx1 < r.origin.x || bx0 > win_x1 || by1 < r.origin.y || by0 > win_y1)
            continue;

        const int ix0 = std::max(0, static_cast<int>(std::floor((bx0 - r.origin.x) / res)));
        const int ix1 = std::min(w - 1, static_cast<int>(std::floor((bx1 - r.origin.x) / res)));
        const int iy0 = std::max(0, static_cast<int>(std::floor((by0 - r.origin.y) / res)));
        const int iy1 = std::min(w - 1, static_cast<int>(std::floor((by1 - r.origin.y) / res)));
        const int mat = map.material_index(wall.material_id);

        for (int iy = iy0; iy <= iy1; ++iy) {
            for (int ix = ix0; ix <= ix1; ++ix) {
                const std::size_t idx = r.cell(ix, iy);
                if (r.occupancy[idx] != 0.0)
                    continue; // earlier (lower-index) wall already claimed the cell
                const double cx0 = r.origin.x + res * ix;
                const double cy0 = r.origin.y + res * iy;
                if (detail::segment_intersects_box(wall.p0, wall.p1, cx0, cy0, cx0 + res,
                                                   cy0 + res, kGeomTol)) {
                    r.occupancy[idx] = 1.0;
                    r.material[idx] = static_cast<double>(mat);
                }
            }
        }
    }

    r.rx_marker[r.cell(c, c)] = 1.0;
    const int tx_ix = static_cast<int>(std::floor((tx.x - r.origin.x) / res));
    const int tx_iy = static_cast<int>(std::floor((tx.y - r.origin.y) / res));
    if (tx_ix >= 0 && tx_ix < w && tx_iy >= 0 && tx_iy < w)
        r.tx_marker[r.cell(tx_ix, tx_iy)] = 1.0;
    return r;
}

} // namespace csiforge
