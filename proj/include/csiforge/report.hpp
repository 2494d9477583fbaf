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
// Report rendering: hand-written SVG learning curves (log NMSE axis) and a
// side-by-side per-epoch NMSE table. Output is deterministic text.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "csiforge/errors.hpp"
#include "csiforge/learn/train.hpp"

namespace csiforge {

struct MetricSeries {
    std::string name; // model label, e.g. "mlp"
    std::vector<EpochMetrics> metrics;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string xml_escape(const std::string &s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

/// One SVG with solid validation-NMSE and dashed train-NMSE polylines per
/// series, decade gridlines on the log axis.
inline std::string learning_curve_svg(const std::vector<MetricSeries> &series,
                                      const std::string &title = "learning curves") {
    if (series.empty())
        throw ValidationError("learning_curve_svg: no metric series");
    static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
    constexpr int kPalette = 6;

    int max_epoch = 1;
    double lo = 1e300, hi = 0.0;
    for (const auto &s : series) {
        if (s.metrics.empty())
            throw ValidationError("learning_curve_svg: series \"" + s.name + "\" is empty");
        for (const auto &m : s.metrics) {
            max_epoch = std::max(max_epoch, m.epoch);
            for (double v : {m.train_nmse, m.val_nmse}) {
                const double c = std::max(v, 1e-12); // log-axis floor
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
        }
    }
    double log_lo = std::floor(std::log10(lo));
    double log_hi = std::ceil(std::log10(hi));
    if (log_hi <= log_lo)
        log_hi = log_lo + 1.0;

    const double width = 800, height = 480;
    const double ml = 70, mr = 170, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;

    auto x_of = [&](double epoch) {
        return ml + (max_epoch > 1 ? (epoch - 1.0) / (max_epoch - 1.0) : 0.5) * pw;
    };
    auto y_of = [&](double v) {
        const double l = std::log10(std::max(v, 1e-12));
        return mt + (log_hi - l) / (log_hi - log_lo) * ph;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width) +
           "\" height=\"" + detail::fmt(height) + "\" viewBox=\"0 0 " + detail::fmt(width) +
           " " + detail::fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + detail::fmt(ml) + "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\">" +
           detail::xml_escape(title) + "</text>\n";

    // Decade gridlines and y labels
    for (double d = log_lo; d <= log_hi + 1e-9; d += 1.0) {
        const double y = y_of(std::pow(10.0, d));
        svg += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(y) + "\" x2=\"" +
               detail::fmt(ml + pw) + "\" y2=\"" + detail::fmt(y) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + detail::fmt(ml - 8) + "\" y=\"" + detail::fmt(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
               detail::fmt(d) + "</text>\n";
    }
    // X ticks (at most 8, integer epochs)
    const int tick_step = std::max(1, (max_epoch + 7) / 8);
    for (int e = 1; e <= max_epoch; e += tick_step) {
        const double x = x_of(e);
        svg += "<line x1=\"" + detail::fmt(x) + "\" y1=\"" + detail::fmt(mt + ph) + "\" x2=\"" +
               detail::fmt(x) + "\" y2=\"" + detail::fmt(mt + ph + 5) +
               "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(mt + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               std::to_string(e) + "</text>\n";
    }
    svg += "<text x=\"" + detail::fmt(ml + pw / 2) + "\" y=\"" + detail::fmt(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch"
           "</text>\n";
    svg += "<text x=\"16\" y=\"" + detail::fmt(mt + ph / 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
           detail::fmt(mt + ph / 2) + ")\" text-anchor=\"middle\">NMSE</text>\n";
    // Axes
    svg += "<rect x=\"" + detail::fmt(ml) + "\" y=\"" + detail::fmt(mt) + "\" width=\"" +
           detail::fmt(pw) + "\" height=\"" + detail::fmt(ph) +
           "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    auto polyline = [&](const MetricSeries &s, bool val, const char *color) {
        std::string pts;
        for (const auto &m : s.metrics) {
            pts += detail::fmt(x_of(m.epoch)) + "," +
                   detail::fmt(y_of(val ? m.val_nmse : m.train_nmse)) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\"" + (val ? "" : " stroke-dasharray=\"5,3\"") +
               " points=\"" + pts + "\"/>\n";
    };

    double ly = mt + 10;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char *color = palette[i % kPalette];
        polyline(series[i], true, color);
        polyline(series[i], false, color);
        for (int val = 1; val >= 0; --val) {
            svg += "<line x1=\"" + detail::fmt(ml + pw + 12) + "\" y1=\"" + detail::fmt(ly) +
                   "\" x2=\"" + detail::fmt(ml + pw + 40) + "\" y2=\"" + detail::fmt(ly) +
                   "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
                   (val ? "" : " stroke-dasharray=\"5,3\"") + "/>\n";
            svg += "<text x=\"" + detail::fmt(ml + pw + 46) + "\" y=\"" + detail::fmt(ly + 4) +
                   "\" font-family=\"sans-serif\" font-size=\"11\">" +
                   detail::xml_escape(series[i].name) + (val ? " val" : " train") +
                   "</text>\n";
            ly += 18;
        }
    }
    svg += "</svg>\n";
    return svg;
}

/// Per-epoch NMSE comparison: rows are epochs, one train and one val column
/// per model. Epochs a model never reached are left blank.
inline std::string nmse_table_csv(const std::vector<MetricSeries> &series) {
    if (series.empty())
        throw ValidationError("nmse_table_csv: no metric series");
    std::string out = "epoch";
    int max_epoch = 0;
    for (const auto &s : series) {
        out += "," + s.name + "_train_nmse," + s.name + "_val_nmse";
        for (const auto &m : s.metrics)
            max_epoch = std::max(max_epoch, m.epoch);
    }
    out += "\n";
    for (int e = 1; e <= max_epoch; ++e) {
        out += std::to_string(e);
        for (const auto &s : series) {
            const EpochMetrics *found = nullptr;
            for (const auto &m : s.metrics)
                if (m.epoch == e) {
                    found = &m;
                    break;
                }
            if (found)
                out += "," + detail::fmt(found->train_nmse) + "," + detail::fmt(found->val_nmse);
            else
                out += ",,";
        }
        out += "\n";
    }
    return out;
}

} // namespace csiforge
