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
// Model heads. Both consume a FeatureRecord: the flattened input is
// wall_feats | pos_enc | conv-extracted raster features (extractor optional).
// MLP: dense/ReLU trunk straight to the output. VAE: encoder to (mu, logvar),
// reparameterized latent, decoder on z | pos_enc. Output splits into an
// amplitude half (softplus) and a raw phase half.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiforge/errors.hpp"
#include "csiforge/features.hpp"
#include "csiforge/io.hpp"
#include "csiforge/learn/layers.hpp"
#include "csiforge/learn/loss.hpp"
#include "csiforge/learn/params.hpp"
#include "csiforge/rng.hpp"

namespace csiforge {

enum class ModelKind { Mlp, Vae };

inline std::string to_string(ModelKind k) { return k == ModelKind::Mlp ? "mlp" : "vae"; }

inline ModelKind model_kind_from_string(const std::string &s) {
    if (s == "mlp")
        return ModelKind::Mlp;
    if (s == "vae")
        return ModelKind::Vae;
    throw ValidationError("unknown model kind \"" + s + "\" (expected mlp or vae)");
}

struct ModelSpec {
    ModelKind kind = ModelKind::Mlp;
    bool conv_extractor = false;
    std::vector<int> hidden = {256, 256};
    int latent_dim = 32;
    double kl_weight = 1e-3;
    int conv_channels1 = 8;
    int conv_channels2 = 16;

    // Input/output geometry, fixed by the feature config and dataset.
    int wall_feat_dim = 15;
    int pos_enc_dim = 24;
    int raster_channels = 0;
    int raster_width = 0;
    int target_dim = 0; // N_t*K complex entries; network emits 2*target_dim reals

    int output_dim() const { return 2 * target_dim; }
    int pool1_width() const { return raster_width / 2; }
    int pool2_width() const { return pool1_width() / 2; }

    /// Pooled stage-1 and stage-2 maps, flattened and concatenated.
    int conv_feature_dim() const {
        if (!conv_extractor)
            return 0;
        return conv_channels1 * pool1_width() * pool1_width() +
               conv_channels2 * pool2_width() * pool2_width();
    }

    int feature_dim() const { return wall_feat_dim + pos_enc_dim + conv_feature_dim(); }

    void validate() const {
        if (target_dim <= 0)
            throw ValidationError("model target_dim must be > 0");
        if (wall_feat_dim < 0 || pos_enc_dim < 0)
            throw ValidationError("model input dims must be >= 0");
        if (hidden.empty())
            throw ValidationError("model needs at least one hidden layer");
        for (int h : hidden)
            if (h <= 0)
                throw ValidationError("hidden layer widths must be > 0");
        if (kind == ModelKind::Vae) {
            if (latent_dim <= 0)
                throw ValidationError("vae latent_dim must be > 0");
            if (kl_weight < 0.0)
                throw ValidationError("vae kl_weight must be >= 0");
        }
        if (conv_extractor) {
            if (conv_channels1 <= 0 || conv_channels2 <= 0)
                throw ValidationError("conv channel counts must be > 0");
            if (raster_channels <= 0)
                throw ValidationError("conv extractor needs raster_channels > 0");
            if (raster_width < 4)
                throw ValidationError("conv extractor needs raster_width >= 4 (two 2x2 pools)");
        }
        if (feature_dim() <= 0)
            throw ValidationError("model has an empty input feature vector");
    }
};

inline void to_json(nlohmann::json &j, const ModelSpec &s) {
    j = {{"kind", to_string(s.kind)},
         {"conv_extractor", s.conv_extractor},
         {"hidden", s.hidden},
         {"latent_dim", s.latent_dim},
         {"kl_weight", s.kl_weight},
         {"conv_channels1", s.conv_channels1},
         {"conv_channels2", s.conv_channels2},
         {"wall_feat_dim", s.wall_feat_dim},
         {"pos_enc_dim", s.pos_enc_dim},
         {"raster_channels", s.raster_channels},
         {"raster_width", s.raster_width},
         {"target_dim", s.target_dim}};
}
inline void from_json(const nlohmann::json &j, ModelSpec &s) {
    s.kind = model_kind_from_string(j.at("kind").get<std::string>());
    j.at("conv_extractor").get_to(s.conv_extractor);
    j.at("hidden").get_to(s.hidden);
    j.at("latent_dim").get_to(s.latent_dim);
    j.at("kl_weight").get_to(s.kl_weight);
    j.at("conv_channels1").get_to(s.conv_channels1);
    j.at("conv_channels2").get_to(s.conv_channels2);
    j.at("wall_feat_dim").get_to(s.wall_feat_dim);
    j.at("pos_enc_dim").get_to(s.pos_enc_dim);
    j.at("raster_channels").get_to(s.raster_channels);
    j.at("raster_width").get_to(s.raster_width);
    j.at("target_dim").get_to(s.target_dim);
}

/// Derive the input/output geometry fields from one assembled record.
inline ModelSpec make_model_spec(ModelKind kind, bool conv_extractor,
                                 const FeatureRecord &rec) {
    ModelSpec s;
    s.kind = kind;
    s.conv_extractor = conv_extractor;
    s.wall_feat_dim = static_cast<int>(rec.wall_feats.size());
    s.pos_enc_dim = static_cast<int>(rec.pos_enc.size());
    s.raster_channels = rec.raster_channels;
    s.raster_width = rec.raster_width;
    s.target_dim = static_cast<int>(rec.target_amp.size());
    return s;
}

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> mlp_widths(const ModelSpec &s) {
    std::vector<int> w{s.feature_dim()};
    w.insert(w.end(), s.hidden.begin(), s.hidden.end());
    w.push_back(s.output_dim());
    return w;
}

inline std::vector<int> enc_widths(const ModelSpec &s) {
    std::vector<int> w{s.feature_dim()};
    w.insert(w.end(), s.hidden.begin(), s.hidden.end());
    w.push_back(2 * s.latent_dim);
    return w;
}

inline std::vector<int> dec_widths(const ModelSpec &s) {
    std::vector<int> w{s.latent_dim + s.pos_enc_dim};
    w.insert(w.end(), s.hidden.begin(), s.hidden.end());
    w.push_back(s.output_dim());
    return w;
}

inline void declare_stack(ModelParams &p, const std::string &prefix,
                          const std::vector<int> &widths) {
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const auto out = static_cast<std::size_t>(widths[i + 1]);
        const auto in = static_cast<std::size_t>(widths[i]);
        p.add(prefix + "." + std::to_string(i) + ".weight", {out, in});
        p.add(prefix + "." + std::to_string(i) + ".bias", {out});
    }
}

} // namespace detail

inline ModelParams declare_params(const ModelSpec &spec) {
    spec.validate();
    ModelParams p;
    if (spec.conv_extractor) {
        p.add("conv1.kernel", {static_cast<std::size_t>(spec.conv_channels1),
                               static_cast<std::size_t>(spec.raster_channels), 3, 3});
        p.add("conv1.bias", {static_cast<std::size_t>(spec.conv_channels1)});
        p.add("conv2.kernel", {static_cast<std::size_t>(spec.conv_channels2),
                               static_cast<std::size_t>(spec.conv_channels1), 3, 3});
        p.add("conv2.bias", {static_cast<std::size_t>(spec.conv_channels2)});
    }
    if (spec.kind == ModelKind::Mlp) {
        detail::declare_stack(p, "mlp", detail::mlp_widths(spec));
    } else {
        detail::declare_stack(p, "enc", detail::enc_widths(spec));
        detail::declare_stack(p, "dec", detail::dec_widths(spec));
    }
    return p;
}

/// Kaiming-uniform fan-in init for weights/kernels (bound sqrt(6/fan_in)),
/// zero biases, fully determined by the seed. fan_in for a dense [out, in]
/// weight is in; for a kernel [c_out, c_in, k, k] it is c_in*k*k.
inline ModelParams init_params(const ModelSpec &spec, std::uint64_t seed) {
    ModelParams p = declare_params(spec);
    Rng rng(mix_seed(seed, 0x696e6974u)); // "init" tag
    for (auto &t : p.tensors) {
        const bool is_weight = t.name.ends_with(".weight") || t.name.ends_with(".kernel");
        if (!is_weight)
            continue;
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < t.shape.size(); ++d)
            fan_in *= t.shape[d];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double &v : t.value)
            v = rng.uniform(-bound, bound);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct StackTrace {
    std::vector<std::vector<double>> inputs; // input to dense layer i
    std::vector<std::vector<double>> pre;    // pre-activation output of layer i
};

namespace detail {

inline std::vector<double> stack_forward(const ModelParams &p, const std::string &prefix,
                                         const std::vector<int> &widths,
                                         const std::vector<double> &x, StackTrace *trace) {
    const std::size_t layers = widths.size() - 1;
    if (trace) {
        trace->inputs.assign(layers, {});
        trace->pre.assign(layers, {});
    }
    std::vector<double> cur = x;
    std::vector<double> pre;
    for (std::size_t i = 0; i < layers; ++i) {
        const std::string tag = prefix + "." + std::to_string(i);
        dense_forward(p.at(tag + ".weight"), p.at(tag + ".bias"), cur, pre, widths[i + 1],
                      widths[i]);
        if (trace) {
            trace->inputs[i] = std::move(cur);
            trace->pre[i] = pre;
        }
        if (i + 1 < layers)
            relu_forward(pre, cur);
        else
            cur = pre;
    }
    return cur;
}

inline std::vector<double> stack_backward(const ModelParams &p, ModelParams &grads,
                                          const std::string &prefix,
                                          const std::vector<int> &widths,
                                          const StackTrace &trace, std::vector<double> gout) {
    const std::size_t layers = widths.size() - 1;
    std::vector<double> gpre, gx;
    for (std::size_t idx = layers; idx-- > 0;) {
        if (idx + 1 < layers)
            relu_backward(trace.pre[idx], gout, gpre);
        else
            gpre = std::move(gout);
        const std::string tag = prefix + "." + std::to_string(idx);
        dense_backward(p.at(tag + ".weight"), trace.inputs[idx], gpre,
                       grads.at(tag + ".weight"), grads.at(tag + ".bias"), gx,
                       widths[idx + 1], widths[idx]);
        gout = std::move(gx);
    }
    return gout;
}

} // namespace detail

struct ConvTrace {
    std::vector<double> y1, r1, p1; // conv1 pre-act, relu, pooled
    std::vector<double> y2, r2, p2;
    std::vector<std::size_t> a1, a2;
    std::vector<double> features; // concat(p1, p2) flattened
};

namespace detail {

inline void conv_extract_forward(const ModelSpec &s, const ModelParams &p,
                                 const std::vector<double> &raster, ConvTrace &t) {
    const int w = s.raster_width;
    conv2d_forward(p.at("conv1.kernel"), p.at("conv1.bias"), raster, t.y1, s.raster_channels,
                   w, w, s.conv_channels1, 3);
    relu_forward(t.y1, t.r1);
    maxpool2_forward(t.r1, t.p1, t.a1, s.conv_channels1, w, w);
    const int w1 = s.pool1_width();
    conv2d_forward(p.at("conv2.kernel"), p.at("conv2.bias"), t.p1, t.y2, s.conv_channels1, w1,
                   w1, s.conv_channels2, 3);
    relu_forward(t.y2, t.r2);
    maxpool2_forward(t.r2, t.p2, t.a2, s.conv_channels2, w1, w1);
    t.features = t.p1;
    t.features.insert(t.features.end(), t.p2.begin(), t.p2.end());
}

inline void conv_extract_backward(const ModelSpec &s, const ModelParams &p, ModelParams &grads,
                                  const std::vector<double> &raster, const ConvTrace &t,
                                  const std::vector<double> &gfeat) {
    const int w = s.raster_width;
    const int w1 = s.pool1_width();
    // Stage-1 pooled map feeds both the concat output and conv2.
    std::vector<double> gp1(t.p1.size());
    std::copy(gfeat.begin(), gfeat.begin() + static_cast<std::ptrdiff_t>(t.p1.size()),
              gp1.begin());
    std::vector<double> gp2(gfeat.begin() + static_cast<std::ptrdiff_t>(t.p1.size()),
                            gfeat.end());
    std::vector<double> gr2, gy2, gp1_conv, gr1, gy1, gx;
    maxpool2_backward(gp2, t.a2, gr2, s.conv_channels2, w1, w1);
    relu_backward(t.y2, gr2, gy2);
    conv2d_backward(p.at("conv2.kernel"), t.p1, gy2, grads.at("conv2.kernel"),
                    grads.at("conv2.bias"), gp1_conv, s.conv_channels1, w1, w1,
                    s.conv_channels2, 3);
    for (std::size_t i = 0; i < gp1.size(); ++i)
        gp1[i] += gp1_conv[i];
    maxpool2_backward(gp1, t.a1, gr1, s.conv_channels1, w, w);
    relu_backward(t.y1, gr1, gy1);
    conv2d_backward(p.at("conv1.kernel"), raster, gy1, grads.at("conv1.kernel"),
                    grads.at("conv1.bias"), gx, s.raster_channels, w, w, s.conv_channels1, 3);
}

inline void check_record_dims(const ModelSpec &s, const FeatureRecord &rec) {
    if (static_cast<int>(rec.wall_feats.size()) != s.wall_feat_dim)
        throw ValidationError("record wall feature length " +
                              std::to_string(rec.wall_feats.size()) + " != model spec " +
                              std::to_string(s.wall_feat_dim));
    if (static_cast<int>(rec.pos_enc.size()) != s.pos_enc_dim)
        throw ValidationError("record positional encoding length " +
                              std::to_string(rec.pos_enc.size()) + " != model spec " +
                              std::to_string(s.pos_enc_dim));
    if (s.conv_extractor &&
        (rec.raster_width != s.raster_width || rec.raster_channels != s.raster_channels))
        throw ValidationError("record raster " + std::to_string(rec.raster_channels) + "x" +
                              std::to_string(rec.raster_width) + "x" +
                              std::to_string(rec.raster_width) + " != model spec " +
                              std::to_string(s.raster_channels) + "x" +
                              std::to_string(s.raster_width) + "x" +
                              std::to_string(s.raster_width));
}

} // namespace detail

struct ForwardTrace {
    ConvTrace conv;
    std::vector<double> phi;
    StackTrace mlp;               // MLP head
    StackTrace enc, dec;          // VAE head
    std::vector<double> mu, logvar, xi, z, dec_in;
    std::vector<double> raw;      // network output before the amp/phase split
};

struct Prediction {
    std::vector<double> amp;   // target_dim, >= 0
    std::vector<double> phase; // target_dim, raw (not wrapped)
    std::vector<double> mu, logvar;
};

/// Single-record forward pass. rng == nullptr selects evaluation mode: the
/// VAE uses z = mu and the result is a deterministic function of
/// (params, record). trace may be null when no backward pass will follow.
inline Prediction model_forward(const ModelSpec &spec, const ModelParams &params,
                                const FeatureRecord &rec, Rng *rng, ForwardTrace *trace) {
    spec.validate();
    detail::check_record_dims(spec, rec);

    ForwardTrace local;
    ForwardTrace &t = trace ? *trace : local;

    t.phi = rec.wall_feats;
    t.phi.insert(t.phi.end(), rec.pos_enc.begin(), rec.pos_enc.end());
    if (spec.conv_extractor) {
        detail::conv_extract_forward(spec, params, rec.raster, t.conv);
        t.phi.insert(t.phi.end(), t.conv.features.begin(), t.conv.features.end());
    }

    Prediction out;
    if (spec.kind == ModelKind::Mlp) {
        t.raw = detail::stack_forward(params, "mlp", detail::mlp_widths(spec), t.phi, &t.mlp);
    } else {
        const auto eh =
            detail::stack_forward(params, "enc", detail::enc_widths(spec), t.phi, &t.enc);
        const auto lz = static_cast<std::size_t>(spec.latent_dim);
        t.mu.assign(eh.begin(), eh.begin() + static_cast<std::ptrdiff_t>(lz));
        t.logvar.assign(eh.begin() + static_cast<std::ptrdiff_t>(lz), eh.end());
        for (double v : t.logvar)
            if (!std::isfinite(v))
                throw TrainError("non-finite logvar in encoder output");
        t.xi.assign(lz, 0.0);
        t.z = t.mu;
        if (rng) {
            for (std::size_t i = 0; i < lz; ++i) {
                t.xi[i] = rng->normal();
                t.z[i] = t.mu[i] + std::exp(0.5 * t.logvar[i]) * t.xi[i];
            }
        }
        t.dec_in = t.z;
        t.dec_in.insert(t.dec_in.end(), rec.pos_enc.begin(), rec.pos_enc.end());
        t.raw =
            detail::stack_forward(params, "dec", detail::dec_widths(spec), t.dec_in, &t.dec);
        out.mu = t.mu;
        out.logvar = t.logvar;
    }

    const auto td = static_cast<std::size_t>(spec.target_dim);
    out.amp.resize(td);
    out.phase.resize(td);
    for (std::size_t i = 0; i < td; ++i) {
        out.amp[i] = softplus(t.raw[i]);
        out.phase[i] = t.raw[td + i];
    }
    return out;
}

inline Prediction model_predict(const ModelSpec &spec, const ModelParams &params,
                                const FeatureRecord &rec) {
    return model_forward(spec, params, rec, nullptr, nullptr);
}

inline std::vector<std::complex<double>> predict_csi(const ModelSpec &spec,
                                                     const ModelParams &params,
                                                     const FeatureRecord &rec) {
    const Prediction pred = model_predict(spec, params, rec);
    return amp_phase_recompose(pred.amp, pred.phase);
}

// ---------------------------------------------------------------------------
// Loss and gradients
// ---------------------------------------------------------------------------

struct LossParts {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

inline double kl_divergence(const std::vector<double> &mu, const std::vector<double> &logvar) {
    double kl = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        kl += -0.5 * (1.0 + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]));
    return kl;
}

/// One record's loss and parameter gradients (accumulated into `grads`).
/// Training mode: the VAE draws its reparameterization noise from rng; pass
/// rng for the MLP too for a uniform call shape (it is not consumed).
inline LossParts model_loss_and_grad(const ModelSpec &spec, const ModelParams &params,
                                     const FeatureRecord &rec, ModelParams &grads, Rng *rng) {
    if (static_cast<int>(rec.target_amp.size()) != spec.target_dim ||
        static_cast<int>(rec.target_phase.size()) != spec.target_dim)
        throw ValidationError("record target length " + std::to_string(rec.target_amp.size()) +
                              " != model target_dim " + std::to_string(spec.target_dim));

    ForwardTrace t;
    const Prediction pred = model_forward(spec, params, rec, rng, &t);

    const auto td = static_cast<std::size_t>(spec.target_dim);
    std::vector<double> pv(2 * td), gv(2 * td);
    for (std::size_t i = 0; i < td; ++i) {
        pv[i] = pred.amp[i];
        pv[td + i] = pred.phase[i];
        gv[i] = rec.target_amp[i];
        gv[td + i] = rec.target_phase[i];
    }

    LossParts parts;
    parts.recon = smooth_l1(pv, gv);
    const std::vector<double> gd = smooth_l1_grad(pv, gv);

    std::vector<double> graw(2 * td);
    for (std::size_t i = 0; i < td; ++i) {
        graw[i] = gd[i] * sigmoid(t.raw[i]); // through softplus
        graw[td + i] = gd[td + i];
    }

    std::vector<double> gphi;
    if (spec.kind == ModelKind::Mlp) {
        parts.total = parts.recon;
        gphi = detail::stack_backward(params, grads, "mlp", detail::mlp_widths(spec), t.mlp,
                                      std::move(graw));
    } else {
        parts.kl = kl_divergence(t.mu, t.logvar);
        parts.total = parts.recon + spec.kl_weight * parts.kl;
        const auto gdec_in = detail::stack_backward(params, grads, "dec",
                                                    detail::dec_widths(spec), t.dec,
                                                    std::move(graw));
        const auto lz = static_cast<std::size_t>(spec.latent_dim);
        std::vector<double> geh(2 * lz);
        for (std::size_t i = 0; i < lz; ++i) {
            const double gz = gdec_in[i];
            geh[i] = gz + spec.kl_weight * t.mu[i];
            geh[lz + i] = gz * (t.z[i] - t.mu[i]) * 0.5 +
                          spec.kl_weight * 0.5 * (std::exp(t.logvar[i]) - 1.0);
        }
        gphi = detail::stack_backward(params, grads, "enc", detail::enc_widths(spec), t.enc,
                                      std::move(geh));
    }

    if (spec.conv_extractor) {
        const std::size_t head = static_cast<std::size_t>(spec.wall_feat_dim) +
                                 static_cast<std::size_t>(spec.pos_enc_dim);
        const std::vector<double> gfeat(gphi.begin() + static_cast<std::ptrdiff_t>(head),
                                        gphi.end());
        detail::conv_extract_backward(spec, params, grads, rec.raster, t.conv, gfeat);
    }
    return parts;
}

// ---------------------------------------------------------------------------
// CSIM checkpoint container
// ---------------------------------------------------------------------------
// magic "CSIM", u32 version, u64 meta length + JSON blob (model spec plus the
// feature config the model was trained against), u64 parameter count, flat
// f64 parameters in declaration order, trailing CRC32 of everything after
// the version field.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelSpec spec;
    FeatureConfig features;
    ModelParams params;
};

inline void save_checkpoint(const ModelSpec &spec, const FeatureConfig &features,
                            const ModelParams &params, const std::filesystem::path &path) {
    ByteWriter w;
    w.bytes("CSIM");
    w.u32(kCheckpointVersion);
    const std::string meta_text =
        nlohmann::json{{"spec", spec}, {"features", features}}.dump();
    w.u64(meta_text.size());
    w.bytes(meta_text);
    const auto flat = params.flat();
    w.u64(flat.size());
    for (double v : flat)
        w.f64(v);
    const std::string &buf = w.data();
    ByteWriter out;
    out.bytes(buf);
    out.u32(crc32(buf.data() + 8, buf.size() - 8));
    atomic_write_file(path, out.data());
}

inline Checkpoint load_checkpoint(const std::filesystem::path &path) {
    const std::string bytes = read_file_bytes(path);
    ByteReader r(bytes, path.string());
    if (r.bytes(4) != "CSIM")
        throw FormatError(path.string() + ": bad magic, not a CSIM checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
    const std::uint64_t meta_len = r.u64();
    Checkpoint ck;
    try {
        const auto meta = nlohmann::json::parse(r.bytes(meta_len));
        ck.spec = meta.at("spec").get<ModelSpec>();
        ck.features = meta.at("features").get<FeatureConfig>();
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path.string() + ": bad checkpoint meta blob: " + e.what());
    }
    const std::uint64_t n = r.u64();
    std::vector<double> flat(n);
    for (auto &v : flat)
        v = r.f64();
    const std::uint32_t stored_crc = r.u32();
    if (r.remaining() != 0)
        throw FormatError(path.string() + ": trailing bytes after checksum");
    const std::uint32_t actual = crc32(bytes.data() + 8, bytes.size() - 12);
    if (stored_crc != actual)
        throw ChecksumError(path.string() + ": checksum mismatch");
    ck.params = declare_params(ck.spec);
    if (flat.size() != ck.params.total_size())
        throw FormatError(path.string() + ": parameter count " + std::to_string(flat.size()) +
                          " does not match spec (expects " +
                          std::to_string(ck.params.total_size()) + ")");
    ck.params.load_flat(flat);
    return ck;
}

} // namespace csiforge
