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
// Subcommand front-end. Exit codes: 0 success, 1 domain/validation error,
// 2 I/O error, 3 internal invariant breach.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csiforge/csiforge.hpp"

namespace {

using namespace csiforge;

std::string join_command_line(int argc, char **argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i)
            out += ' ';
        out += argv[i];
    }
    return out;
}

std::vector<std::string> split_csv(const std::string &s) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) {
            parts.push_back(s.substr(pos));
            break;
        }
        parts.push_back(s.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return parts;
}

std::vector<double> parse_doubles(const std::string &s, const char *flag,
                                  std::size_t expect) {
    const auto parts = split_csv(s);
    if (parts.size() != expect)
        throw ValidationError(std::string(flag) + " expects " + std::to_string(expect) +
                              " comma-separated values, got \"" + s + "\"");
    std::vector<double> out;
    out.reserve(parts.size());
    for (const auto &p : parts) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(p, &used));
            if (used != p.size())
                throw std::invalid_argument(p);
        } catch (const std::exception &) {
            throw ValidationError(std::string(flag) + ": \"" + p + "\" is not a number");
        }
    }
    return out;
}

std::vector<int> parse_ints(const std::string &s, const char *flag) {
    const auto parts = split_csv(s);
    std::vector<int> out;
    out.reserve(parts.size());
    for (const auto &p : parts) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(p, &used));
            if (used != p.size())
                throw std::invalid_argument(p);
        } catch (const std::exception &) {
            throw ValidationError(std::string(flag) + ": \"" + p + "\" is not an integer");
        }
    }
    return out;
}

Vec2 parse_vec2(const std::string &s, const char *flag) {
    const auto v = parse_doubles(s, flag, 2);
    return {v[0], v[1]};
}

Vec3 parse_vec3(const std::string &s, const char *flag) {
    const auto v = parse_doubles(s, flag, 3);
    return {v[0], v[1], v[2]};
}

Rect parse_rect(const std::string &s, const char *flag) {
    const auto v = parse_doubles(s, flag, 4);
    return {v[0], v[1], v[2], v[3]};
}

NmseMode parse_nmse_mode(const std::string &s) {
    if (s == "mean")
        return NmseMode::MeanOfRatios;
    if (s == "ratio")
        return NmseMode::RatioOfSums;
    throw ValidationError("--nmse-mode must be mean or ratio, got \"" + s + "\"");
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void check_map_matches_dataset(const EnvironmentMap &map, const DatasetMeta &meta,
                               bool force) {
    const std::string h = map.content_hash();
    if (h == meta.map_hash)
        return;
    if (force) {
        std::fprintf(stderr,
                     "warning: map hash %s does not match dataset map hash %s; proceeding "
                     "because --force was given\n",
                     h.c_str(), meta.map_hash.c_str());
        return;
    }
    throw ValidationError("map hash " + h + " does not match the dataset's recorded map hash " +
                          meta.map_hash +
                          "; the artifacts come from different maps (pass --force to override)");
}

// ---------------------------------------------------------------------------
// env validate
// ---------------------------------------------------------------------------

struct EnvValidateOpts {
    std::string map_path;
};

int run_env_validate(const EnvValidateOpts &o) {
    const EnvironmentMap map = load_environment(o.map_path);
    std::printf("walls: %zu\n", map.walls().size());
    std::printf("materials: %zu\n", map.materials().size());
    const Rect &b = map.bounds();
    std::printf("bounds: [%.17g, %.17g, %.17g, %.17g]\n", b.xmin, b.ymin, b.xmax, b.ymax);
    std::printf("hash: %s\n", map.content_hash().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

struct TraceOpts {
    std::string map_path;
    std::string tx, rx;
    int order = 2;
    double fc = 2.4e9;
    double min_gain = 0.0;
    double tx_height = 0.0, rx_height = 0.0;
    std::string out;
    std::string command_line;
};

int run_trace(const TraceOpts &o) {
    Timer timer;
    const EnvironmentMap map = load_environment(o.map_path);
    TraceConfig cfg;
    cfg.max_reflection_order = o.order;
    cfg.carrier_frequency_hz = o.fc;
    cfg.min_path_gain = o.min_gain;
    cfg.tx_height_m = o.tx_height;
    cfg.rx_height_m = o.rx_height;
    const auto paths =
        trace_paths(map, parse_vec2(o.tx, "--tx"), parse_vec2(o.rx, "--rx"), cfg);
    const std::string csv = path_dump_csv(paths);
    if (o.out.empty()) {
        std::fputs(csv.c_str(), stdout);
        return 0;
    }
    atomic_write_file(o.out, csv);
    RunManifest m;
    m.command = "trace";
    m.command_line = o.command_line;
    m.config = {{"tx", o.tx},
                {"rx", o.rx},
                {"trace", cfg}};
    m.input_hashes[o.map_path] = file_content_hash(o.map_path);
    m.outputs = {o.out};
    m.duration_seconds = timer.seconds();
    write_run_manifest(m, manifest_path_for(o.out));
    std::printf("paths: %zu\nwrote %s\n", paths.size(), o.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// dataset build
// ---------------------------------------------------------------------------

struct DatasetBuildOpts {
    std::string map_path;
    std::string out;
    std::string region, bs;
    double spacing = 0.1;
    double ue_height = 1.5;
    int order = 2;
    double fc = 2.4e9;
    double scs = 15e3;
    int subcarriers = 16;
    int symbols = 14;
    int nh = 4, nv = 4;
    double array_spacing = 0.5;
    double boresight = 0.0;
    double min_gain = 0.0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string positions_csv;
    std::string command_line;
};

int run_dataset_build(const DatasetBuildOpts &o) {
    Timer timer;
    const EnvironmentMap map = load_environment(o.map_path);

    GridSpec grid;
    grid.region = parse_rect(o.region, "--region");
    grid.spacing = o.spacing;
    grid.ue_height = o.ue_height;
    grid.bs_position = parse_vec3(o.bs, "--bs");

    ArrayConfig array;
    array.n_h = o.nh;
    array.n_v = o.nv;
    array.spacing_wavelengths = o.array_spacing;
    array.boresight_rad = o.boresight;

    OfdmConfig ofdm;
    ofdm.carrier_frequency_hz = o.fc;
    ofdm.subcarrier_spacing_hz = o.scs;
    ofdm.num_subcarriers = o.subcarriers;
    ofdm.symbols_per_slot = o.symbols;

    TraceConfig trace_cfg;
    trace_cfg.max_reflection_order = o.order;
    trace_cfg.carrier_frequency_hz = o.fc;
    trace_cfg.min_path_gain = o.min_gain;

    const Dataset ds = build_dataset(map, grid, array, ofdm, trace_cfg, o.seed, o.threads);
    save_dataset(ds, o.out);
    if (!o.positions_csv.empty())
        export_positions_csv(ds, o.positions_csv);

    RunManifest m;
    m.command = "dataset build";
    m.command_line = o.command_line;
    m.seed = o.seed;
    m.config = {{"grid", grid}, {"array", array}, {"ofdm", ofdm}, {"trace", ds.meta.trace}};
    m.input_hashes[o.map_path] = file_content_hash(o.map_path);
    m.outputs = {o.out};
    if (!o.positions_csv.empty())
        m.outputs.push_back(o.positions_csv);
    m.duration_seconds = timer.seconds();
    write_run_manifest(m, manifest_path_for(o.out));

    std::printf("samples: %zu\n", ds.samples.size());
    std::printf("antennas: %d, subcarriers: %d\n", ds.meta.array.num_antennas(),
                ds.meta.ofdm.num_subcarriers);
    std::printf("normalization: %.17g\n", ds.meta.normalization);
    std::printf("wrote %s\n", o.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// dataset split
// ---------------------------------------------------------------------------

struct DatasetSplitOpts {
    std::string dataset_path;
    std::string out;
    double val_ratio = 0.2;
    std::uint64_t seed = 0;
    bool spatial = false;
    std::string command_line;
};

int run_dataset_split(const DatasetSplitOpts &o) {
    Timer timer;
    const Dataset ds = load_dataset(o.dataset_path);
    const SplitIndex s = o.spatial ? split_spatial(ds, o.val_ratio)
                                   : split(ds.samples.size(), o.val_ratio, o.seed);
    save_split(s, o.out);

    RunManifest m;
    m.command = "dataset split";
    m.command_line = o.command_line;
    m.seed = o.seed;
    m.config = {{"val_ratio", o.val_ratio}, {"spatial", o.spatial}};
    m.input_hashes[o.dataset_path] = file_content_hash(o.dataset_path);
    m.outputs = {o.out};
    m.duration_seconds = timer.seconds();
    write_run_manifest(m, manifest_path_for(o.out));

    std::printf("train: %zu\nval: %zu\nwrote %s\n", s.train_ids.size(), s.val_ids.size(),
                o.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

struct FeaturizeOpts {
    std::string map_path, dataset_path;
    std::string cache_dir;
    FeatureConfig features;
    unsigned threads = 0;
    bool force = false;
    std::string command_line;
};

int run_featurize(const FeaturizeOpts &o) {
    Timer timer;
    const EnvironmentMap map = load_environment(o.map_path);
    const Dataset ds = load_dataset(o.dataset_path);
    check_map_matches_dataset(map, ds.meta, o.force);

    FeatureCache cache(default_cache_dir(o.cache_dir));
    const auto records = cache.get_or_build(map, ds, o.features, o.threads);
    const auto entry = cache.entry_path(feature_cache_key(ds.meta, o.features));

    RunManifest m;
    m.command = "featurize";
    m.command_line = o.command_line;
    m.config = {{"features", o.features}};
    m.input_hashes[o.map_path] = file_content_hash(o.map_path);
    m.input_hashes[o.dataset_path] = file_content_hash(o.dataset_path);
    m.outputs = {entry.string()};
    m.duration_seconds = timer.seconds();
    write_run_manifest(m, manifest_path_for(entry));

    std::printf("records: %zu\ncache entry: %s\n", records.size(), entry.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string map_path, dataset_path, split_path;
    std::string out;
    std::string metrics;
    std::string model = "mlp";
    bool conv = false;
    std::string hidden = "256,256";
    int latent = 32;
    double kl_weight = 1e-3;
    int epochs = 120;
    int batch = 64;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    int patience = 0;
    std::string nmse_mode = "mean";
    std::string cache_dir;
    FeatureConfig features;
    unsigned threads = 0;
    bool force = false;
    bool quiet = false;
    std::string command_line;
};

int run_train(const TrainOpts &o) {
    Timer timer;
    const EnvironmentMap map = load_environment(o.map_path);
    const Dataset ds = load_dataset(o.dataset_path);
    check_map_matches_dataset(map, ds.meta, o.force);
    const SplitIndex split_ids = load_split(o.split_path, ds.samples.size());

    FeatureCache cache(default_cache_dir(o.cache_dir));
    const auto records = cache.get_or_build(map, ds, o.features, o.threads);

    ModelSpec spec =
        make_model_spec(model_kind_from_string(o.model), o.conv, records.front());
    spec.hidden = parse_ints(o.hidden, "--hidden");
    spec.latent_dim = o.latent;
    spec.kl_weight = o.kl_weight;

    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.adamw.lr = o.lr;
    cfg.adamw.beta1 = o.beta1;
    cfg.adamw.beta2 = o.beta2;
    cfg.adamw.eps = o.eps;
    cfg.adamw.weight_decay = o.weight_decay;
    cfg.seed = o.seed;
    cfg.patience = o.patience;
    cfg.nmse_mode = parse_nmse_mode(o.nmse_mode);

    EpochCallback progress;
    if (!o.quiet)
        progress = [](const EpochMetrics &m) {
            std::fprintf(stderr, "epoch %d  train_loss %.6e  train_nmse %.6e  val_nmse %.6e\n",
                         m.epoch, m.train_loss, m.train_nmse, m.val_nmse);
        };
    const TrainResult result = train(spec, records, split_ids, cfg, progress);

    save_checkpoint(spec, o.features, result.best_params, o.out);
    const std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.csv" : o.metrics;
    save_metrics_csv(result.metrics, metrics_path);

    RunManifest m;
    m.command = "train";
    m.command_line = o.command_line;
    m.seed = o.seed;
    m.config = {{"model", spec},
                {"features", o.features},
                {"train",
                 {{"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"lr", cfg.adamw.lr},
                  {"beta1", cfg.adamw.beta1},
                  {"beta2", cfg.adamw.beta2},
                  {"eps", cfg.adamw.eps},
                  {"weight_decay", cfg.adamw.weight_decay},
                  {"patience", cfg.patience},
                  {"nmse_mode", o.nmse_mode}}}};
    m.input_hashes[o.map_path] = file_content_hash(o.map_path);
    m.input_hashes[o.dataset_path] = file_content_hash(o.dataset_path);
    m.input_hashes[o.split_path] = file_content_hash(o.split_path);
    m.outputs = {o.out, metrics_path};
    m.duration_seconds = timer.seconds();
    write_run_manifest(m, manifest_path_for(o.out));

    std::printf("epochs run: %zu\n", result.metrics.size());
    std::printf("best epoch: %d\n", result.best_epoch);
    std::printf("best val nmse: %.17g\n", result.best_val_nmse);
    std::printf("wrote %s\nwrote %s\n", o.out.c_str(), metrics_path.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
    std::string map_path, dataset_path, model_path;
    std::string split_path;
    std::string subset = "all";
    std::string nmse_mode = "mean";
    std::string cache_dir;
    unsigned threads = 0;
    bool force = false;
    std::string command_line;
};

int run_eval(const EvalOpts &o) {
    const EnvironmentMap map = load_environment(o.map_path);
    const Dataset ds = load_dataset(o.dataset_path);
    check_map_matches_dataset(map, ds.meta, o.force);
    const Checkpoint ck = load_checkpoint(o.model_path);

    // Evaluating against a dataset the model was not trained on is allowed by
    // design (cross-region probing); only map/dataset coherence is enforced.
    FeatureCache cache(default_cache_dir(o.cache_dir));
    const auto records = cache.get_or_build(map, ds, ck.features, o.threads);

    std::vector<std::size_t> ids;
    if (o.subset == "all" && o.split_path.empty()) {
        ids.resize(records.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            ids[i] = i;
    } else {
        if (o.split_path.empty())
            throw ValidationError("--subset " + o.subset + " requires --split");
        const SplitIndex s = load_split(o.split_path, ds.samples.size());
        if (o.subset == "train") {
            ids = s.train_ids;
        } else if (o.subset == "val") {
            ids = s.val_ids;
        } else if (o.subset == "all") {
            ids = s.train_ids;
            ids.insert(ids.end(), s.val_ids.begin(), s.val_ids.end());
            std::sort(ids.begin(), ids.end());
        } else {
            throw ValidationError("--subset must be train, val or all, got \"" + o.subset +
                                  "\"");
        }
    }

    const double v =
        evaluate_nmse(ck.spec, ck.params, records, ids, parse_nmse_mode(o.nmse_mode));
    std::printf("model: %s\n", to_string(ck.spec.kind).c_str());
    std::printf("subset: %s\n", o.subset.c_str());
    std::printf("samples: %zu\n", ids.size());
    std::printf("nmse: %.17g\n", v);
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportOpts {
    std::vector<std::string> metrics_paths;
    std::string names;
    std::string out;
    std::string table;
    std::string title = "learning curves";
    std::string command_line;
};

int run_report(const ReportOpts &o) {
    Timer timer;
    std::vector<std::string> names;
    if (!o.names.empty()) {
        names = split_csv(o.names);
        if (names.size() != o.metrics_paths.size())
            throw ValidationError("--names lists " + std::to_string(names.size()) +
                                  " names for " + std::to_string(o.metrics_paths.size()) +
                                  " metrics files");
    } else {
        for (const auto &p : o.metrics_paths)
            names.push_back(std::filesystem::path(p).stem().string());
    }

    std::vector<MetricSeries> series;
    for (std::size_t i = 0; i < o.metrics_paths.size(); ++i)
        series.push_back({names[i], load_metrics_csv(o.metrics_paths[i])});

    const std::string table_path =
        o.table.empty() ? std::filesystem::path(o.out).replace_extension(".table.csv").string()
                        : o.table;
    atomic_write_file(o.out, learning_curve_svg(series, o.title));
    atomic_write_file(table_path, nmse_table_csv(series));

    RunManifest m;
    m.command = "report";
    m.command_line = o.command_line;
    m.config = {{"names", names}, {"title", o.title}};
    for (const auto &p : o.metrics_paths)
        m.input_hashes[p] = file_content_hash(p);
    m.outputs = {o.out, table_path};
    m.duration_seconds = timer.seconds();
    write_run_manifest(m, manifest_path_for(o.out));

    std::printf("wrote %s\nwrote %s\n", o.out.c_str(), table_path.c_str());
    return 0;
}

void add_feature_flags(CLI::App *cmd, FeatureConfig &fc) {
    cmd->add_option("--k-walls", fc.k_walls, "nearest walls per record");
    cmd->add_option("--pe-frequencies", fc.pe_frequencies, "positional encoding frequencies");
    cmd->add_option("--raster-width", fc.raster_width, "raster window cells per side (odd)");
    cmd->add_option("--raster-resolution", fc.raster_resolution, "raster meters per cell");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"csiforge: deterministic ray-traced CSI datasets and spatial predictors"};
    app.set_version_flag("--version", kToolkitVersion);
    app.require_subcommand(1);
    const std::string command_line = join_command_line(argc, argv);

    std::function<int()> action;

    // env validate
    auto env_opts = std::make_shared<EnvValidateOpts>();
    auto *env = app.add_subcommand("env", "environment map utilities");
    env->require_subcommand(1);
    auto *envv = env->add_subcommand("validate", "load and validate an environment map");
    envv->add_option("map", env_opts->map_path, "environment JSON file")->required();
    envv->callback([&action, env_opts] { action = [env_opts] { return run_env_validate(*env_opts); }; });

    // trace
    auto trace_opts = std::make_shared<TraceOpts>();
    trace_opts->command_line = command_line;
    auto *trace_cmd = app.add_subcommand("trace", "dump propagation paths between two points");
    trace_cmd->add_option("map", trace_opts->map_path, "environment JSON file")->required();
    trace_cmd->add_option("--tx", trace_opts->tx, "transmitter x,y")->required();
    trace_cmd->add_option("--rx", trace_opts->rx, "receiver x,y")->required();
    trace_cmd->add_option("--order", trace_opts->order, "max reflection order (0..3)");
    trace_cmd->add_option("--fc", trace_opts->fc, "carrier frequency Hz");
    trace_cmd->add_option("--min-gain", trace_opts->min_gain, "cull threshold, linear amplitude");
    trace_cmd->add_option("--tx-height", trace_opts->tx_height, "TX antenna height m");
    trace_cmd->add_option("--rx-height", trace_opts->rx_height, "RX antenna height m");
    trace_cmd->add_option("-o,--out", trace_opts->out, "write CSV here instead of stdout");
    trace_cmd->callback([&action, trace_opts] { action = [trace_opts] { return run_trace(*trace_opts); }; });

    // dataset build / dataset split
    auto *dataset = app.add_subcommand("dataset", "dataset construction and splitting");
    dataset->require_subcommand(1);

    auto build_opts = std::make_shared<DatasetBuildOpts>();
    build_opts->command_line = command_line;
    auto *build_cmd = dataset->add_subcommand("build", "trace a UE grid and synthesize CSI");
    build_cmd->add_option("map", build_opts->map_path, "environment JSON file")->required();
    build_cmd->add_option("-o,--out", build_opts->out, "output dataset file")->required();
    build_cmd->add_option("--region", build_opts->region, "grid region xmin,ymin,xmax,ymax")
        ->required();
    build_cmd->add_option("--bs", build_opts->bs, "base station x,y,z")->required();
    build_cmd->add_option("--spacing", build_opts->spacing, "grid spacing m");
    build_cmd->add_option("--ue-height", build_opts->ue_height, "UE height m");
    build_cmd->add_option("--order", build_opts->order, "max reflection order (0..3)");
    build_cmd->add_option("--fc", build_opts->fc, "carrier frequency Hz");
    build_cmd->add_option("--scs", build_opts->scs, "subcarrier spacing Hz");
    build_cmd->add_option("--subcarriers", build_opts->subcarriers, "subcarrier count K");
    build_cmd->add_option("--symbols", build_opts->symbols, "OFDM symbols per slot");
    build_cmd->add_option("--nh", build_opts->nh, "array columns");
    build_cmd->add_option("--nv", build_opts->nv, "array rows");
    build_cmd->add_option("--array-spacing", build_opts->array_spacing,
                          "element spacing, wavelengths");
    build_cmd->add_option("--boresight", build_opts->boresight, "array boresight bearing rad");
    build_cmd->add_option("--min-gain", build_opts->min_gain, "path cull threshold");
    build_cmd->add_option("--seed", build_opts->seed, "dataset seed");
    build_cmd->add_option("--threads", build_opts->threads, "worker threads (0 = hardware)");
    build_cmd->add_option("--positions-csv", build_opts->positions_csv,
                          "also export positions CSV");
    build_cmd->callback([&action, build_opts] { action = [build_opts] { return run_dataset_build(*build_opts); }; });

    auto split_opts = std::make_shared<DatasetSplitOpts>();
    split_opts->command_line = command_line;
    auto *split_cmd = dataset->add_subcommand("split", "write a train/val split index");
    split_cmd->add_option("dataset", split_opts->dataset_path, "dataset file")->required();
    split_cmd->add_option("-o,--out", split_opts->out, "output split JSON")->required();
    split_cmd->add_option("--val-ratio", split_opts->val_ratio, "validation fraction (0,1)");
    split_cmd->add_option("--seed", split_opts->seed, "shuffle seed");
    split_cmd->add_flag("--spatial", split_opts->spatial,
                        "spatially-blocked split instead of random");
    split_cmd->callback([&action, split_opts] { action = [split_opts] { return run_dataset_split(*split_opts); }; });

    // featurize
    auto feat_opts = std::make_shared<FeaturizeOpts>();
    feat_opts->command_line = command_line;
    auto *feat_cmd = app.add_subcommand("featurize", "assemble and cache feature records");
    feat_cmd->add_option("map", feat_opts->map_path, "environment JSON file")->required();
    feat_cmd->add_option("dataset", feat_opts->dataset_path, "dataset file")->required();
    feat_cmd->add_option("--cache-dir", feat_opts->cache_dir,
                         "cache directory (default $CSIFORGE_CACHE_DIR or .csiforge-cache)");
    add_feature_flags(feat_cmd, feat_opts->features);
    feat_cmd->add_option("--threads", feat_opts->threads, "worker threads (0 = hardware)");
    feat_cmd->add_flag("--force", feat_opts->force, "ignore map/dataset hash mismatch");
    feat_cmd->callback([&action, feat_opts] { action = [feat_opts] { return run_featurize(*feat_opts); }; });

    // train
    auto train_opts = std::make_shared<TrainOpts>();
    train_opts->command_line = command_line;
    auto *train_cmd = app.add_subcommand("train", "train a CSI predictor");
    train_cmd->add_option("map", train_opts->map_path, "environment JSON file")->required();
    train_cmd->add_option("dataset", train_opts->dataset_path, "dataset file")->required();
    train_cmd->add_option("split", train_opts->split_path, "split JSON file")->required();
    train_cmd->add_option("-o,--out", train_opts->out, "output checkpoint file")->required();
    train_cmd->add_option("--model", train_opts->model, "mlp or vae");
    train_cmd->add_flag("--conv", train_opts->conv, "enable the conv raster extractor");
    train_cmd->add_option("--hidden", train_opts->hidden, "hidden widths, e.g. 256,256");
    train_cmd->add_option("--latent", train_opts->latent, "VAE latent dimension");
    train_cmd->add_option("--kl-weight", train_opts->kl_weight, "VAE KL weight");
    train_cmd->add_option("--epochs", train_opts->epochs, "training epochs");
    train_cmd->add_option("--batch", train_opts->batch, "minibatch size");
    train_cmd->add_option("--lr", train_opts->lr, "learning rate");
    train_cmd->add_option("--beta1", train_opts->beta1, "AdamW beta1");
    train_cmd->add_option("--beta2", train_opts->beta2, "AdamW beta2");
    train_cmd->add_option("--eps", train_opts->eps, "AdamW epsilon");
    train_cmd->add_option("--weight-decay", train_opts->weight_decay, "AdamW weight decay");
    train_cmd->add_option("--seed", train_opts->seed, "training seed");
    train_cmd->add_option("--patience", train_opts->patience,
                          "early-stop patience in epochs (0 = off)");
    train_cmd->add_option("--nmse-mode", train_opts->nmse_mode, "mean or ratio");
    train_cmd->add_option("--metrics", train_opts->metrics,
                          "metrics CSV path (default <out>.metrics.csv)");
    train_cmd->add_option("--cache-dir", train_opts->cache_dir, "feature cache directory");
    add_feature_flags(train_cmd, train_opts->features);
    train_cmd->add_option("--threads", train_opts->threads, "featurize worker threads");
    train_cmd->add_flag("--force", train_opts->force, "ignore map/dataset hash mismatch");
    train_cmd->add_flag("--quiet", train_opts->quiet, "suppress per-epoch progress");
    train_cmd->callback([&action, train_opts] { action = [train_opts] { return run_train(*train_opts); }; });

    // eval
    auto eval_opts = std::make_shared<EvalOpts>();
    eval_opts->command_line = command_line;
    auto *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("map", eval_opts->map_path, "environment JSON file")->required();
    eval_cmd->add_option("dataset", eval_opts->dataset_path, "dataset file")->required();
    eval_cmd->add_option("model", eval_opts->model_path, "checkpoint file")->required();
    eval_cmd->add_option("--split", eval_opts->split_path, "split JSON for subset selection");
    eval_cmd->add_option("--subset", eval_opts->subset, "train, val or all");
    eval_cmd->add_option("--nmse-mode", eval_opts->nmse_mode, "mean or ratio");
    eval_cmd->add_option("--cache-dir", eval_opts->cache_dir, "feature cache directory");
    eval_cmd->add_option("--threads", eval_opts->threads, "featurize worker threads");
    eval_cmd->add_flag("--force", eval_opts->force, "ignore map/dataset hash mismatch");
    eval_cmd->callback([&action, eval_opts] { action = [eval_opts] { return run_eval(*eval_opts); }; });

    // report
    auto report_opts = std::make_shared<ReportOpts>();
    report_opts->command_line = command_line;
    auto *report_cmd = app.add_subcommand("report", "render learning curves and NMSE table");
    report_cmd->add_option("metrics", report_opts->metrics_paths, "metrics CSV files")
        ->required()
        ->expected(-1);
    report_cmd->add_option("--names", report_opts->names, "series names, comma-separated");
    report_cmd->add_option("-o,--out", report_opts->out, "output SVG path")->required();
    report_cmd->add_option("--table", report_opts->table,
                           "NMSE table CSV path (default <out>.table.csv)");
    report_cmd->add_option("--title", report_opts->title, "plot title");
    report_cmd->callback([&action, report_opts] { action = [report_opts] { return run_report(*report_opts); }; });

    try {
        app.parse(argc, argv);
        if (!action)
            throw InternalError("no subcommand action registered");
        return action();
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const ValidationError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ParseError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const TrainError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IoError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const InternalError &e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
