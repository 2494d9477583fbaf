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
// Frequency-domain MIMO-OFDM CSI for an N_h x N_v planar array and a
// single-antenna UE. Narrowband-amplitude approximation: per-path amplitude
// uses the carrier wavelength, only the phase is re-evaluated per subcarrier.

#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "csiforge/errors.hpp"
#include "csiforge/geometry.hpp"
#include "csiforge/raytrace.hpp"
#include "csiforge/rng.hpp"

namespace csiforge {

struct ArrayConfig {
    int n_h = 4;
    int n_v = 4;
    double spacing_wavelengths = 0.5;
    double boresight_rad = 0.0;

    int num_antennas() const { return n_h * n_v; }

    void validate() const {
        if (n_h < 1 || n_v < 1)
            throw ValidationError("array dimensions must be >= 1");
        if (!(spacing_wavelengths > 0.0))
            throw ValidationError("array element spacing must be > 0");
    }
};

struct OfdmConfig {
    double carrier_frequency_hz = 2.4e9;
    double subcarrier_spacing_hz = 15e3;
    int num_subcarriers = 16;
    int symbols_per_slot = 14; // frame-structure metadata, not used in synthesis

    void validate() const {
        if (!(carrier_frequency_hz > 0.0) || !(subcarrier_spacing_hz > 0.0))
            throw ValidationError("carrier and subcarrier spacing must be > 0");
        if (num_subcarriers < 1 || symbols_per_slot < 1)
            throw ValidationError("num_subcarriers and symbols_per_slot must be >= 1");
    }

    /// Subcarriers are centered on the carrier.
    double subcarrier_frequency(int k) const {
        return carrier_frequency_hz +
               (static_cast<double>(k) - (num_subcarriers - 1) / 2.0) * subcarrier_spacing_hz;
    }
};

/// Complex CSI matrix bound to one RX position; entry (t, k) is the channel
/// from BS antenna t to the UE on subcarrier k, row-major over (t, k).
struct CsiSample {
    Vec3 rx_position;
    int n_t = 0;
    int n_k = 0;
    std::vector<std::complex<double>> h;

    std::complex<double> &at(int t, int k) {
        return h[static_cast<std::size_t>(t) * static_cast<std::size_t>(n_k) +
                 static_cast<std::size_t>(k)];
    }
    const std::complex<double> &at(int t, int k) const {
        return h[static_cast<std::size_t>(t) * static_cast<std::size_t>(n_k) +
                 static_cast<std::size_t>(k)];
    }
};

/// Planar-array response toward a horizontal bearing. Element (i_h, i_v)
/// carries phase 2 pi * spacing * i_h * sin(bearing - boresight); the vertical
/// index adds no phase in the 2.5D model. Flattened row-major, i_v outer.
inline std::vector<std::complex<double>> steering_vector(const ArrayConfig &array, double bearing) {
    array.validate();
    const double phase_step =
        2.0 * std::numbers::pi * array.spacing_wavelengths * std::sin(bearing - array.boresight_rad);
    std::vector<std::complex<double>> v;
    v.reserve(static_cast<std::size_t>(array.num_antennas()));
    for (int iv = 0; iv < array.n_v; ++iv)
        for (int ih = 0; ih < array.n_h; ++ih)
            v.push_back(std::polar(1.0, phase_step * ih));
    return v;
}

/// Sum the multipath set into the N_t x K frequency-domain CSI matrix:
/// h[t,k] = sum_p amp_p * exp(-j 2 pi f_k tau_p) * a(aod_p)[t].
/// An empty path list yields the all-zero matrix.
inline CsiSample synthesize_csi(const std::vector<PropagationPath> &paths,
                                const ArrayConfig &array, const OfdmConfig &ofdm, Vec3 rx) {
    array.validate();
    ofdm.validate();
    CsiSample s;
    s.rx_position = rx;
    s.n_t = array.num_antennas();
    s.n_k = ofdm.num_subcarriers;
    s.h.assign(static_cast<std::size_t>(s.n_t) * static_cast<std::size_t>(s.n_k), {0.0, 0.0});

    for (const PropagationPath &p : paths) {
        const double amp = std::abs(p.gain);
        const auto sv = steering_vector(array, p.aod);
        for (int k = 0; k < s.n_k; ++k) {
            const double phase =
                -2.0 * std::numbers::pi * ofdm.subcarrier_frequency(k) * p.delay;
            const std::complex<double> g = std::polar(amp, phase);
            for (int t = 0; t < s.n_t; ++t)
                s.at(t, k) += g * sv[static_cast<std::size_t>(t)];
        }
    }
    return s;
}

/// Narrowband received-signal sample y = h_k^H w x + n with circular complex
/// Gaussian noise of variance noise_sigma^2, deterministic in the seed.
struct ReceivedSignalSample {
    std::complex<double> y;
    std::vector<std::complex<double>> precoder;
    std::complex<double> symbol;
    std::complex<double> noise;
};

inline ReceivedSignalSample received_signal(const CsiSample &sample, int k,
                                            const std::vector<std::complex<double>> &w,
                                            std::complex<double> x, double noise_sigma,
                                            std::uint64_t seed) {
    if (k < 0 || k >= sample.n_k)
        throw ValidationError("subcarrier index " + std::to_string(k) + " out of range [0, " +
                              std::to_string(sample.n_k) + ")");
    if (w.size() != static_cast<std::size_t>(sample.n_t))
        throw ValidationError("precoder length " + std::to_string(w.size()) +
                              " does not match antenna count " + std::to_string(sample.n_t));
    if (noise_sigma < 0.0)
        throw ValidationError("noise_sigma must be >= 0");

    std::complex<double> y{0.0, 0.0};
    for (int t = 0; t < sample.n_t; ++t)
        y += std::conj(sample.at(t, k)) * w[static_cast<std::size_t>(t)];
    y *= x;

    Rng rng(seed);
    const double scale = noise_sigma / std::numbers::sqrt2;
    const std::complex<double> n{scale * rng.normal(), scale * rng.normal()};
    return {y + n, w, x, n};
}

} // namespace csiforge
