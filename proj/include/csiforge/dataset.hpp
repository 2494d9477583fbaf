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
// Grid UE placement, per-position raytrace + CSI synthesis, global RMS
// normalization, deterministic splits, and the CSID binary container.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "csiforge/channel.hpp"
#include "csiforge/errors.hpp"
#include "csiforge/geometry.hpp"
#include "csiforge/io.hpp"
#include "csiforge/raytrace.hpp"
#include "csiforge/rng.hpp"

namespace csiforge {

struct GridSpec {
    Rect region;
    double spacing = 0.1;   // meters between neighboring UEs
    double ue_height = 1.5; // meters
    Vec3 bs_position;

    void validate() const {
        if (!(region.xmax >= region.xmin) || !(region.ymax >= region.ymin))
            throw ValidationError("grid region is empty (inverted extents)");
        if (!(spacing > 0.0))
            throw ValidationError("grid spacing must be > 0");
        if (ue_height < 0.0)
            throw ValidationError("ue_height must be >= 0");
    }
};

// --- JSON bindings for the config types (persisted in dataset meta) ---

inline void to_json(nlohmann::json &j, const ArrayConfig &a) {
    j = {{"n_h", a.n_h},
         {"n_v", a.n_v},
         {"spacing_wavelengths", a.spacing_wavelengths},
         {"boresight_rad", a.boresight_rad}};
}
inline void from_json(const nlohmann::json &j, ArrayConfig &a) {
    j.at("n_h").get_to(a.n_h);
    j.at("n_v").get_to(a.n_v);
    j.at("spacing_wavelengths").get_to(a.spacing_wavelengths);
    j.at("boresight_rad").get_to(a.boresight_rad);
}

inline void to_json(nlohmann::json &j, const OfdmConfig &o) {
    j = {{"carrier_frequency_hz", o.carrier_frequency_hz},
         {"subcarrier_spacing_hz", o.subcarrier_spacing_hz},
         {"num_subcarriers", o.num_subcarriers},
         {"symbols_per_slot", o.symbols_per_slot}};
}
inline void from_json(const nlohmann::json &j, OfdmConfig &o) {
    j.at("carrier_frequency_hz").get_to(o.carrier_frequency_hz);
    j.at("subcarrier_spacing_hz").get_to(o.subcarrier_spacing_hz);
    j.at("num_subcarriers").get_to(o.num_subcarriers);
    j.at("symbols_per_slot").get_to(o.symbols_per_slot);
}

inline void to_json(nlohmann::json &j, const GridSpec &g) {
    j = {{"region", {g.region.xmin, g.region.ymin, g.region.xmax, g.region.ymax}},
         {"spacing", g.spacing},
         {"ue_height", g.ue_height},
         {"bs_position", {g.bs_position.x, g.bs_position.y, g.bs_position.z}}};
}
inline void from_json(const nlohmann::json &j, GridSpec &g) {
    const auto &r = j.at("region");
    g.region = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                r.at(3).get<double>()};
    j.at("spacing").get_to(g.spacing);
    j.at("ue_height").get_to(g.ue_height);
    const auto &b = j.at("bs_position");
    g.bs_position = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()};
}

inline void to_json(nlohmann::json &j, const TraceConfig &t) {
    j = {{"max_reflection_order", t.max_reflection_order},
         {"carrier_frequency_hz", t.carrier_frequency_hz},
         {"min_path_gain", t.min_path_gain},
         {"tx_height_m", t.tx_height_m},
         {"rx_height_m", t.rx_height_m}};
}
inline void from_json(const nlohmann::json &j, TraceConfig &t) {
    j.at("max_reflection_order").get_to(t.max_reflection_order);
    j.at("carrier_frequency_hz").get_to(t.carrier_frequency_hz);
    j.at("min_path_gain").get_to(t.min_path_gain);
    j.at("tx_height_m").get_to(t.tx_height_m);
    j.at("rx_height_m").get_to(t.rx_height_m);
}

// ---------------------------------------------------------------------------

struct DatasetMeta {
    std::string map_hash;
    ArrayConfig array;
    OfdmConfig ofdm;
    GridSpec grid;
    TraceConfig trace;
    std::uint64_t seed = 0;
    double normalization = 1.0; // RMS of |h| before normalization; h is stored divided by it

    nlohmann::json to_json_value() const {
        return {{"map_hash", map_hash}, {"array", array},        {"ofdm", ofdm},
                {"grid", grid},         {"trace", trace},        {"seed", seed},
                {"normalization", normalization}};
    }

    static DatasetMeta from_json_value(const nlohmann::json &j) {
        DatasetMeta m;
        j.at("map_hash").get_to(m.map_hash);
        j.at("array").get_to(m.array);
        j.at("ofdm").get_to(m.ofdm);
        j.at("grid").get_to(m.grid);
        j.at("trace").get_to(m.trace);
        j.at("seed").get_to(m.seed);
        j.at("normalization").get_to(m.normalization);
        return m;
    }

    std::string canonical_json() const { return to_json_value().dump(); }
    std::string content_hash() const { return hex64(fnv1a64(canonical_json())); }
};

struct Dataset {
    DatasetMeta meta;
    std::vector<CsiSample> samples;
};

// ---------------------------------------------------------------------------
// Grid placement
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> axis_coords(double lo, double hi, double spacing) {
    std::vector<double> coords;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / spacing + 1e-9));
    coords.reserve(n + 2);
    for (std::size_t i = 0; i <= n; ++i)
        coords.push_back(lo + static_cast<double>(i) * spacing);
    if (hi - coords.back() > 1e-9)
        coords.push_back(hi); // region corner is always a grid point
    return coords;
}

} // namespace detail

/// Lattice of UE positions over the region, both edges included, row-major
/// (y outer, x inner), z = ue_height. Positions whose horizontal distance to
/// the BS is below 1e-6 m are excluded (the propagation plane is 2D, so a
/// horizontal collision is a degenerate TX==RX regardless of height).
inline std::vector<Vec3> generate_grid(const GridSpec &spec) {
    spec.validate();
    const auto xs = detail::axis_coords(spec.region.xmin, spec.region.xmax, spec.spacing);
    const auto ys = detail::axis_coords(spec.region.ymin, spec.region.ymax, spec.spacing);
    std::vector<Vec3> positions;
    positions.reserve(xs.size() * ys.size());
    for (double y : ys)
        for (double x : xs) {
            if (std::hypot(x - spec.bs_position.x, y - spec.bs_position.y) < 1e-6)
                continue;
            positions.push_back({x, y, spec.ue_height});
        }
    return positions;
}

// ---------------------------------------------------------------------------
// Dataset build
// ---------------------------------------------------------------------------

/// Trace and synthesize one CsiSample per grid position, then apply the
/// global RMS normalization (single scalar for the whole dataset, recorded in
/// meta). Per-position work fans out over `threads`; samples land in grid
/// order regardless of scheduling, so the result is independent of the
/// thread count.
inline Dataset build_dataset(const EnvironmentMap &map, const GridSpec &spec,
                             const ArrayConfig &array, const OfdmConfig &ofdm,
                             TraceConfig trace_cfg, std::uint64_t seed, unsigned threads = 0) {
    spec.validate();
    array.validate();
    ofdm.validate();
    if (!map.bounds().contains({spec.region.xmin, spec.region.ymin}) ||
        !map.bounds().contains({spec.region.xmax, spec.region.ymax}))
        throw ValidationError("grid region extends outside map bounds");

    // Antenna heights gate which walls participate; the grid spec is
    // authoritative for them.
    trace_cfg.tx_height_m = spec.bs_position.z;
    trace_cfg.rx_height_m = spec.ue_height;
    trace_cfg.validate();

    const std::vector<Vec3> positions = generate_grid(spec);
    if (positions.empty())
        throw ValidationError("grid produced no UE positions");

    const PathTracer tracer(map, spec.bs_position.xy(), trace_cfg);

    Dataset ds;
    ds.samples.resize(positions.size());
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(positions.size()));

    auto worker = [&](unsigned tid) {
        for (std::size_t i = tid; i < positions.size(); i += threads) {
            const auto paths = tracer.trace(positions[i].xy());
            ds.samples[i] = synthesize_csi(paths, array, ofdm, positions[i]);
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex error_mutex;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    worker(t);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            });
        for (auto &th : pool)
            th.join();
        if (first_error)
            std::rethrow_exception(first_error);
    }

    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto &s : ds.samples) {
        for (const auto &v : s.h)
            sum_sq += std::norm(v);
        count += s.h.size();
    }
    const double rms = std::sqrt(sum_sq / static_cast<double>(count));
    if (!(rms > 0.0))
        throw ValidationError("dataset RMS power is zero (no propagation path reaches any "
                              "position); cannot normalize");
    const double inv = 1.0 / rms;
    for (auto &s : ds.samples)
        for (auto &v : s.h)
            v *= inv;

    ds.meta.map_hash = map.content_hash();
    ds.meta.array = array;
    ds.meta.ofdm = ofdm;
    ds.meta.grid = spec;
    ds.meta.trace = trace_cfg;
    ds.meta.seed = seed;
    ds.meta.normalization = rms;
    return ds;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitIndex {
    std::vector<std::size_t> train_ids;
    std::vector<std::size_t> val_ids;
};

/// Seeded random split; first ceil(N * (1 - ratio)) of the shuffled order
/// train, the rest validate. Both id lists are emitted sorted.
inline SplitIndex split(std::size_t n_samples, double val_ratio, std::uint64_t seed) {
    if (!(val_ratio > 0.0) || !(val_ratio < 1.0))
        throw ValidationError("val_ratio must be in (0, 1)");
    if (n_samples < 2)
        throw ValidationError("need at least 2 samples to split");
    std::vector<std::size_t> ids(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        ids[i] = i;
    Rng rng(seed);
    rng.shuffle(ids);
    const auto n_train = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n_samples) * (1.0 - val_ratio)));
    SplitIndex s;
    s.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    std::sort(s.train_ids.begin(), s.train_ids.end());
    std::sort(s.val_ids.begin(), s.val_ids.end());
    return s;
}

/// Spatially-blocked alternative: samples ordered by (y, x) position, the
/// trailing block validates. Probes cross-region generalization rather than
/// interpolation.
inline SplitIndex split_spatial(const Dataset &ds, double val_ratio) {
    if (!(val_ratio > 0.0) || !(val_ratio < 1.0))
        throw ValidationError("val_ratio must be in (0, 1)");
    if (ds.samples.size() < 2)
        throw ValidationError("need at least 2 samples to split");
    std::vector<std::size_t> order(ds.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Vec3 &pa = ds.samples[a].rx_position;
        const Vec3 &pb = ds.samples[b].rx_position;
        return pa.y != pb.y ? pa.y < pb.y : pa.x < pb.x;
    });
    const auto n_train = static_cast<std::size_t>(
        std::ceil(static_cast<double>(order.size()) * (1.0 - val_ratio)));
    SplitIndex s;
    s.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(s.train_ids.begin(), s.train_ids.end());
    std::sort(s.val_ids.begin(), s.val_ids.end());
    return s;
}

inline void save_split(const SplitIndex &s, const std::filesystem::path &path) {
    nlohmann::json j{{"train_ids", s.train_ids}, {"val_ids", s.val_ids}};
    atomic_write_file(path, j.dump(2) + "\n");
}

inline SplitIndex load_split(const std::filesystem::path &path, std::size_t n_samples) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    SplitIndex s;
    j.at("train_ids").get_to(s.train_ids);
    j.at("val_ids").get_to(s.val_ids);
    std::vector<bool> seen(n_samples, false);
    for (const auto &ids : {s.train_ids, s.val_ids})
        for (std::size_t id : ids) {
            if (id >= n_samples)
                throw ValidationError(path.string() + ": sample id " + std::to_string(id) +
                                      " out of range");
            if (seen[id])
                throw ValidationError(path.string() + ": sample id " + std::to_string(id) +
                                      " appears twice");
            seen[id] = true;
        }
    if (s.train_ids.size() + s.val_ids.size() != n_samples)
        throw ValidationError(path.string() + ": split does not cover all samples");
    return s;
}

// ---------------------------------------------------------------------------
// CSID binary container
// ---------------------------------------------------------------------------
// magic "CSID", u32 version, u64 meta length + JSON meta, u64 sample count,
// per sample f64 x,y,z then N_t*K complex entries as interleaved f64 (re, im)
// row-major over (t, k), trailing CRC32 of everything after the version field.

inline constexpr std::uint32_t kDatasetVersion = 1;

inline void save_dataset(const Dataset &ds, const std::filesystem::path &path) {
    ByteWriter w;
    w.bytes("CSID");
    w.u32(kDatasetVersion);
    const std::string meta = ds.meta.canonical_json();
    w.u64(meta.size());
    w.bytes(meta);
    w.u64(ds.samples.size());
    for (const auto &s : ds.samples) {
        w.f64(s.rx_position.x);
        w.f64(s.rx_position.y);
        w.f64(s.rx_position.z);
        for (const auto &v : s.h) {
            w.f64(v.real());
            w.f64(v.imag());
        }
    }
    const std::string &buf = w.data();
    ByteWriter out;
    out.bytes(buf);
    out.u32(crc32(buf.data() + 8, buf.size() - 8));
    atomic_write_file(path, out.data());
}

inline Dataset load_dataset(const std::filesystem::path &path) {
    const std::string bytes = read_file_bytes(path);
    ByteReader r(bytes, path.string());
    if (std::string(r.bytes(4)) != "CSID")
        throw FormatError(path.string() + ": bad magic, not a CSID dataset file");
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion)
        throw FormatError(path.string() + ": unsupported dataset version " +
                          std::to_string(version));

    const std::uint64_t meta_len = r.u64();
    const std::string meta_text(r.bytes(meta_len));
    Dataset ds;
    try {
        ds.meta = DatasetMeta::from_json_value(nlohmann::json::parse(meta_text));
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path.string() + ": bad meta blob: " + e.what());
    }

    const std::uint64_t n = r.u64();
    const int n_t = ds.meta.array.num_antennas();
    const int n_k = ds.meta.ofdm.num_subcarriers;
    const std::size_t entries = static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_k);
    ds.samples.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        CsiSample &s = ds.samples[i];
        s.n_t = n_t;
        s.n_k = n_k;
        s.rx_position.x = r.f64();
        s.rx_position.y = r.f64();
        s.rx_position.z = r.f64();
        s.h.resize(entries);
        for (auto &v : s.h) {
            const double re = r.f64();
            const double im = r.f64();
            v = {re, im};
        }
    }
    const std::uint32_t stored_crc = r.u32();
    if (r.remaining() != 0)
        throw FormatError(path.string() + ": trailing bytes after checksum");
    const std::uint32_t actual = crc32(bytes.data() + 8, bytes.size() - 12);
    if (stored_crc != actual)
        throw ChecksumError(path.string() + ": checksum mismatch, stored " + hex64(stored_crc) +
                            " vs computed " + hex64(actual));
    return ds;
}

inline void export_positions_csv(const Dataset &ds, const std::filesystem::path &path) {
    std::string out = "x,y,z\n";
    char buf[128];
    for (const auto &s : ds.samples) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", s.rx_position.x, s.rx_position.y,
                      s.rx_position.z);
        out += buf;
    }
    atomic_write_file(path, out);
}

} // namespace csiforge
