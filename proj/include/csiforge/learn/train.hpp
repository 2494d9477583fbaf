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
// The training loop: seeded shuffling, minibatch AdamW, per-epoch NMSE,
// best-validation snapshotting and optional early stopping. A single
// deterministic stream; identical inputs and seed give identical trajectories.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "csiforge/dataset.hpp"
#include "csiforge/errors.hpp"
#include "csiforge/features.hpp"
#include "csiforge/io.hpp"
#include "csiforge/learn/loss.hpp"
#include "csiforge/learn/model.hpp"
#include "csiforge/learn/optim.hpp"
#include "csiforge/rng.hpp"

namespace csiforge {

struct TrainConfig {
    int epochs = 120;
    int batch_size = 64;
    AdamWConfig adamw;
    std::uint64_t seed = 0;
    int patience = 0; // epochs without val improvement before stopping; 0 disables
    NmseMode nmse_mode = NmseMode::MeanOfRatios;

    void validate() const {
        if (epochs <= 0)
            throw ValidationError("epochs must be > 0");
        if (batch_size <= 0)
            throw ValidationError("batch_size must be > 0");
        if (patience < 0)
            throw ValidationError("patience must be >= 0");
        adamw.validate();
    }
};

struct EpochMetrics {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double train_nmse = 0.0;
    double val_nmse = 0.0;
};

struct TrainResult {
    ModelParams best_params;
    int best_epoch = 0;
    double best_val_nmse = std::numeric_limits<double>::infinity();
    std::vector<EpochMetrics> metrics;
};

/// Eval-mode NMSE of the model over the listed records (recomposed complex
/// CSI against the records' decomposed targets).
inline double evaluate_nmse(const ModelSpec &spec, const ModelParams &params,
                            const std::vector<FeatureRecord> &records,
                            const std::vector<std::size_t> &ids,
                            NmseMode mode = NmseMode::MeanOfRatios) {
    if (ids.empty())
        throw ValidationError("cannot evaluate NMSE over an empty id list");
    std::vector<std::vector<std::complex<double>>> pred, gt;
    pred.reserve(ids.size());
    gt.reserve(ids.size());
    for (std::size_t id : ids) {
        if (id >= records.size())
            throw ValidationError("evaluation id " + std::to_string(id) + " out of range");
        const auto &rec = records[id];
        pred.push_back(predict_csi(spec, params, rec));
        gt.push_back(amp_phase_recompose(rec.target_amp, rec.target_phase));
    }
    return nmse(pred, gt, mode);
}

using EpochCallback = std::function<void(const EpochMetrics &)>;

inline TrainResult train(const ModelSpec &spec, const std::vector<FeatureRecord> &records,
                         const SplitIndex &split_ids, const TrainConfig &cfg,
                         const EpochCallback &on_epoch = {}) {
    spec.validate();
    cfg.validate();
    if (split_ids.train_ids.empty())
        throw ValidationError("training split is empty");
    if (split_ids.val_ids.empty())
        throw ValidationError("validation split is empty");
    for (const auto &ids : {split_ids.train_ids, split_ids.val_ids})
        for (std::size_t id : ids)
            if (id >= records.size())
                throw ValidationError("split id " + std::to_string(id) +
                                      " out of range for " + std::to_string(records.size()) +
                                      " records");

    ModelParams params = init_params(spec, cfg.seed);
    ModelParams grads = params.like();
    AdamW opt(params, cfg.adamw);
    Rng rng(mix_seed(cfg.seed, 0x7472616eu)); // training-stream tag

    TrainResult result;
    result.best_params = params;

    std::vector<std::size_t> order = split_ids.train_ids;
    const auto n_train = static_cast<double>(order.size());
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            grads.zero();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i)
                batch_loss += model_loss_and_grad(spec, params, records[order[i]], grads, &rng)
                                  .total;
            if (!std::isfinite(batch_loss))
                throw TrainError("training diverged at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index) +
                                 ": non-finite loss");
            grads.scale(1.0 / static_cast<double>(stop - start));
            opt.step(params, grads);
            epoch_loss += batch_loss;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / n_train;
        m.train_nmse = evaluate_nmse(spec, params, records, split_ids.train_ids, cfg.nmse_mode);
        m.val_nmse = evaluate_nmse(spec, params, records, split_ids.val_ids, cfg.nmse_mode);
        result.metrics.push_back(m);
        if (on_epoch)
            on_epoch(m);

        if (m.val_nmse < result.best_val_nmse) {
            result.best_val_nmse = m.val_nmse;
            result.best_epoch = epoch;
            result.best_params = params;
            since_best = 0;
        } else {
            ++since_best;
            if (cfg.patience > 0 && since_best >= cfg.patience)
                break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

inline std::string metrics_to_csv(const std::vector<EpochMetrics> &metrics) {
    std::string out = "epoch,train_loss,train_nmse,val_nmse\n";
    char buf[160];
    for (const auto &m : metrics) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", m.epoch, m.train_loss,
                      m.train_nmse, m.val_nmse);
        out += buf;
    }
    return out;
}

inline void save_metrics_csv(const std::vector<EpochMetrics> &metrics,
                             const std::filesystem::path &path) {
    atomic_write_file(path, metrics_to_csv(metrics));
}

inline std::vector<EpochMetrics> load_metrics_csv(const std::filesystem::path &path) {
    const std::string text = read_file_bytes(path);
    std::vector<EpochMetrics> metrics;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos)
            eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty())
            continue;
        if (header) {
            if (line != "epoch,train_loss,train_nmse,val_nmse")
                throw FormatError(path.string() + ": unexpected metrics header \"" + line +
                                  "\"");
            header = false;
            continue;
        }
        EpochMetrics m;
        if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg", &m.epoch, &m.train_loss, &m.train_nmse,
                        &m.val_nmse) != 4)
            throw FormatError(path.string() + ": bad metrics row \"" + line + "\"");
        metrics.push_back(m);
    }
    return metrics;
}

} // namespace csiforge
