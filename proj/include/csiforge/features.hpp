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
// Model-input representation: nearest-wall geometry features, rasterized
// occupancy window, positional encoding, amplitude-phase target
// decomposition, and the CSIF feature cache.

#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "csiforge/dataset.hpp"
#include "csiforge/errors.hpp"
#include "csiforge/geometry.hpp"
#include "csiforge/io.hpp"

namespace csiforge {

struct FeatureConfig {
    int k_walls = 5;
    int pe_frequencies = 6;
    int raster_width = 33;          // cells per side, odd
    double raster_resolution = 0.5; // meters per cell

    void validate() const {
        if (k_walls <= 0)
            throw ValidationError("k_walls must be > 0");
        if (pe_frequencies <= 0)
            throw ValidationError("pe_frequencies must be > 0");
        if (raster_width <= 0 || raster_width % 2 == 0)
            throw ValidationError("raster_width must be a positive odd integer");
        if (!(raster_resolution > 0.0))
            throw ValidationError("raster_resolution must be > 0");
    }
};

inline void to_json(nlohmann::json &j, const FeatureConfig &c) {
    j = {{"k_walls", c.k_walls},
         {"pe_frequencies", c.pe_frequencies},
         {"raster_width", c.raster_width},
         {"raster_resolution", c.raster_resolution}};
}
inline void from_json(const nlohmann::json &j, FeatureConfig &c) {
    j.at("k_walls").get_to(c.k_walls);
    j.at("pe_frequencies").get_to(c.pe_frequencies);
    j.at("raster_width").get_to(c.raster_width);
    j.at("raster_resolution").get_to(c.raster_resolution);
}

/// One fused model input bound to a single RX position. Raster planes are
/// channel-major reals: occupancy, one plane per declared material (one-hot
/// of the raster material index), tx marker, rx marker.
struct FeatureRecord {
    Vec3 rx_position;
    int k_walls = 0;
    std::vector<double> wall_feats; // k_walls x 3: distance/diag, sin, cos
    int raster_width = 0;
    int raster_channels = 0;
    std::vector<double> raster; // raster_channels x width x width
    std::vector<double> pos_enc;
    std::vector<double> target_amp;   // N_t*K, entries >= 0
    std::vector<double> target_phase; // N_t*K, entries in (-pi, pi]
};

// ---------------------------------------------------------------------------
// Encoders
// ---------------------------------------------------------------------------

/// sin/cos encoding of the position normalized to [-1,1]^2 over the region.
/// Layout: for d in {x, y}, for f in 0..F-1: sin(2^f pi u_d), cos(2^f pi u_d).
inline std::vector<double> positional_encoding(Vec2 p, const Rect &region, int frequencies) {
    if (frequencies <= 0)
        throw ValidationError("positional encoding needs frequencies > 0");
    const double ex = region.xmax - region.xmin;
    const double ey = region.ymax - region.ymin;
    const double ux = ex > 0.0 ? 2.0 * (p.x - region.xmin) / ex - 1.0 : 0.0;
    const double uy = ey > 0.0 ? 2.0 * (p.y - region.ymin) / ey - 1.0 : 0.0;
    std::vector<double> enc;
    enc.reserve(static_cast<std::size_t>(4 * frequencies));
    const double pi = 3.14159265358979323846;
    for (double u : {ux, uy}) {
        double scale = pi;
        for (int f = 0; f < frequencies; ++f) {
            enc.push_back(std::sin(scale * u));
            enc.push_back(std::cos(scale * u));
            scale *= 2.0;
        }
    }
    return enc;
}

/// Entrywise polar split. Phase is the principal argument in (-pi, pi];
/// exact zeros take phase 0.
inline void amp_phase_decompose(const std::vector<std::complex<double>> &h,
                                std::vector<double> &amp, std::vector<double> &phase) {
    amp.resize(h.size());
    phase.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        amp[i] = std::abs(h[i]);
        phase[i] = h[i] == std::complex<double>(0.0, 0.0) ? 0.0 : wrap_to_pi(std::arg(h[i]));
    }
}

inline std::vector<std::complex<double>> amp_phase_recompose(const std::vector<double> &amp,
                                                             const std::vector<double> &phase) {
    if (amp.size() != phase.size())
        throw ValidationError("amp/phase length mismatch: " + std::to_string(amp.size()) +
                              " vs " + std::to_string(phase.size()));
    std::vector<std::complex<double>> h(amp.size());
    for (std::size_t i = 0; i < h.size(); ++i)
        h[i] = std::polar(amp[i], phase[i]);
    return h;
}

// ---------------------------------------------------------------------------
// Record assembly
// ---------------------------------------------------------------------------

/// Fuse wall features, raster window (TX = BS), positional encoding and the
/// decomposed CSI target. Every part is computed from the same sample, so
/// position and geometry can never describe different places.
inline FeatureRecord assemble_record(const EnvironmentMap &map, const CsiSample &sample,
                                     Vec2 bs_xy, const FeatureConfig &cfg) {
    cfg.validate();
    const Vec2 p = sample.rx_position.xy();
    if (!map.bounds().contains(p, kGeomTol))
        throw ValidationError("sample position outside map region");

    FeatureRecord rec;
    rec.rx_position = sample.rx_position;

    rec.k_walls = cfg.k_walls;
    rec.wall_feats.assign(static_cast<std::size_t>(cfg.k_walls) * 3, 0.0);
    const double diag = map.bounds().diagonal();
    const auto nearest = nearest_walls(map, p, static_cast<std::size_t>(cfg.k_walls));
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.k_walls); ++i) {
        if (i < nearest.size()) {
            rec.wall_feats[i * 3 + 0] = nearest[i].distance / diag;
            rec.wall_feats[i * 3 + 1] = std::sin(nearest[i].orientation);
            rec.wall_feats[i * 3 + 2] = std::cos(nearest[i].orientation);
        } else {
            rec.wall_feats[i * 3 + 0] = 1.0; // sentinel row: no wall
            rec.wall_feats[i * 3 + 1] = 0.0;
            rec.wall_feats[i * 3 + 2] = 0.0;
        }
    }

    const RasterMap grid = rasterize(map, p, bs_xy, cfg.raster_width, cfg.raster_resolution);
    const int n_materials = static_cast<int>(map.materials().size());
    const std::size_t plane = static_cast<std::size_t>(cfg.raster_width) *
                              static_cast<std::size_t>(cfg.raster_width);
    rec.raster_width = cfg.raster_width;
    rec.raster_channels = n_materials + 3;
    rec.raster.assign(static_cast<std::size_t>(rec.raster_channels) * plane, 0.0);
    for (std::size_t c = 0; c < plane; ++c) {
        rec.raster[c] = grid.occupancy[c];
        const int mat = static_cast<int>(grid.material[c]);
        if (mat >= 0)
            rec.raster[plane * static_cast<std::size_t>(1 + mat) + c] = 1.0;
        rec.raster[plane * static_cast<std::size_t>(1 + n_materials) + c] = grid.tx_marker[c];
        rec.raster[plane * static_cast<std::size_t>(2 + n_materials) + c] = grid.rx_marker[c];
    }

    rec.pos_enc = positional_encoding(p, map.bounds(), cfg.pe_frequencies);
    amp_phase_decompose(sample.h, rec.target_amp, rec.target_phase);
    return rec;
}

inline std::vector<FeatureRecord> assemble_records(const EnvironmentMap &map, const Dataset &ds,
                                                   const FeatureConfig &cfg,
                                                   unsigned threads = 0) {
    std::vector<FeatureRecord> records(ds.samples.size());
    const Vec2 bs_xy = ds.meta.grid.bs_position.xy();
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(
                                              1, ds.samples.size())));
    auto worker = [&](unsigned tid) {
        for (std::size_t i = tid; i < ds.samples.size(); i += threads)
            records[i] = assemble_record(map, ds.samples[i], bs_xy, cfg);
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
    return records;
}

// ---------------------------------------------------------------------------
// CSIF cache container
// ---------------------------------------------------------------------------
// magic "CSIF", u32 version, u64 key hash, u64 meta length + JSON meta blob
// (dataset meta + feature config echo), u64 record count, fixed-order record
// fields, trailing CRC32 of everything after the version field.

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

inline std::uint64_t feature_cache_key(const DatasetMeta &meta, const FeatureConfig &cfg) {
    nlohmann::json j{{"dataset", nlohmann::json::parse(meta.canonical_json())},
                     {"features", cfg}};
    return fnv1a64(j.dump());
}

namespace detail {

inline void write_real_vector(ByteWriter &w, const std::vector<double> &v) {
    w.u64(v.size());
    for (double x : v)
        w.f64(x);
}

inline std::vector<double> read_real_vector(ByteReader &r) {
    const std::uint64_t n = r.u64();
    std::vector<double> v(n);
    for (auto &x : v)
        x = r.f64();
    return v;
}

} // namespace detail

inline void save_feature_records(const std::vector<FeatureRecord> &records,
                                 const DatasetMeta &meta, const FeatureConfig &cfg,
                                 const std::filesystem::path &path) {
    ByteWriter w;
    w.bytes("CSIF");
    w.u32(kFeatureCacheVersion);
    w.u64(feature_cache_key(meta, cfg));
    nlohmann::json meta_json{{"dataset", nlohmann::json::parse(meta.canonical_json())},
                             {"features", cfg}};
    const std::string meta_text = meta_json.dump();
    w.u64(meta_text.size());
    w.bytes(meta_text);
    w.u64(records.size());
    for (const auto &rec : records) {
        w.f64(rec.rx_position.x);
        w.f64(rec.rx_position.y);
        w.f64(rec.rx_position.z);
        w.u32(static_cast<std::uint32_t>(rec.k_walls));
        detail::write_real_vector(w, rec.wall_feats);
        w.u32(static_cast<std::uint32_t>(rec.raster_width));
        w.u32(static_cast<std::uint32_t>(rec.raster_channels));
        detail::write_real_vector(w, rec.raster);
        detail::write_real_vector(w, rec.pos_enc);
        detail::write_real_vector(w, rec.target_amp);
        detail::write_real_vector(w, rec.target_phase);
    }
    const std::string &buf = w.data();
    ByteWriter out;
    out.bytes(buf);
    out.u32(crc32(buf.data() + 8, buf.size() - 8));
    atomic_write_file(path, out.data());
}

/// Loads a cache entry and verifies CRC and key. A key that does not match
/// `expected_key` is reported as FormatError so callers treat the entry as
/// stale and rebuild.
inline std::vector<FeatureRecord> load_feature_records(const std::filesystem::path &path,
                                                       std::uint64_t expected_key) {
    const std::string bytes = read_file_bytes(path);
    ByteReader r(bytes, path.string());
    if (r.bytes(4) != "CSIF")
        throw FormatError(path.string() + ": bad magic, not a CSIF cache file");
    const std::uint32_t version = r.u32();
    if (version != kFeatureCacheVersion)
        throw FormatError(path.string() + ": unsupported cache version " +
                          std::to_string(version));
    const std::uint64_t key = r.u64();
    if (key != expected_key)
        throw FormatError(path.string() + ": stale cache key " + hex64(key) + ", expected " +
                          hex64(expected_key));
    const std::uint64_t meta_len = r.u64();
    r.bytes(meta_len); // meta blob kept for external inspection only
    const std::uint64_t n = r.u64();
    std::vector<FeatureRecord> records(n);
    for (auto &rec : records) {
        rec.rx_position.x = r.f64();
        rec.rx_position.y = r.f64();
        rec.rx_position.z = r.f64();
        rec.k_walls = static_cast<int>(r.u32());
        rec.wall_feats = detail::read_real_vector(r);
        rec.raster_width = static_cast<int>(r.u32());
        rec.raster_channels = static_cast<int>(r.u32());
        rec.raster = detail::read_real_vector(r);
        rec.pos_enc = detail::read_real_vector(r);
        rec.target_amp = detail::read_real_vector(r);
        rec.target_phase = detail::read_real_vector(r);
    }
    const std::uint32_t stored_crc = r.u32();
    if (r.remaining() != 0)
        throw FormatError(path.string() + ": trailing bytes after checksum");
    const std::uint32_t actual = crc32(bytes.data() + 8, bytes.size() - 12);
    if (stored_crc != actual)
        throw ChecksumError(path.string() + ": checksum mismatch");
    return records;
}

/// Content-addressed on-disk store for assembled records. Concurrent readers
/// are always safe (atomic writes); writers serialize through a lock file.
/// A process that loses the lock race still returns freshly built records,
/// it just skips persisting them.
class FeatureCache {
  public:
    explicit FeatureCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw IoError("cannot create cache directory " + dir_.string() + ": " +
                          ec.message());
    }

    const std::filesystem::path &dir() const { return dir_; }

    std::filesystem::path entry_path(std::uint64_t key) const {
        return dir_ / ("features-" + hex64(key) + ".csif");
    }

    /// Hit: bit-identical records with zero geometry work. Miss, stale key or
    /// corruption: rebuild (corruption additionally warns on stderr).
    std::vector<FeatureRecord> get_or_build(const EnvironmentMap &map, const Dataset &ds,
                                            const FeatureConfig &cfg, unsigned threads = 0) {
        cfg.validate();
        const std::uint64_t key = feature_cache_key(ds.meta, cfg);
        const auto path = entry_path(key);
        if (std::filesystem::exists(path)) {
            try {
                return load_feature_records(path, key);
            } catch (const IoError &e) {
                std::fprintf(stderr, "warning: rebuilding feature cache entry: %s\n", e.what());
            } catch (const ParseError &e) {
                std::fprintf(stderr, "warning: rebuilding feature cache entry: %s\n", e.what());
            }
        }
        auto records = assemble_records(map, ds, cfg, threads);
        const auto lock = dir_ / ("features-" + hex64(key) + ".lock");
        if (try_lock(lock)) {
            try {
                save_feature_records(records, ds.meta, cfg, path);
            } catch (...) {
                std::filesystem::remove(lock);
                throw;
            }
            std::filesystem::remove(lock);
        }
        return records;
    }

  private:
    static bool try_lock(const std::filesystem::path &lock) {
        // O_EXCL-style atomic creation; stale locks older than 10 minutes are broken.
        std::error_code ec;
        const auto when = std::filesystem::last_write_time(lock, ec);
        if (!ec) {
            const auto age = std::filesystem::file_time_type::clock::now() - when;
            if (age > std::chrono::minutes(10))
                std::filesystem::remove(lock, ec);
        }
        FILE *f = std::fopen(lock.string().c_str(), "wx");
        if (!f)
            return false;
        std::fclose(f);
        return true;
    }

    std::filesystem::path dir_;
};

/// Cache directory resolution: explicit flag wins, then CSIFORGE_CACHE_DIR,
/// then .csiforge-cache under the current directory.
inline std::filesystem::path default_cache_dir(const std::string &flag_value = "") {
    if (!flag_value.empty())
        return flag_value;
    if (const char *env = std::getenv("CSIFORGE_CACHE_DIR"); env && *env)
        return env;
    return ".csiforge-cache";
}

} // namespace csiforge
