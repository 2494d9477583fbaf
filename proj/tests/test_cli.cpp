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

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include <csiforge/csiforge.hpp>

#include "support.hpp"

using namespace csiforge;
using Catch::Matchers::ContainsSubstring;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out, err;
};

// Drives the installed binary the way a user would: through a shell.
CliResult run_cli(const std::string &args, const std::filesystem::path &dir) {
    const auto out_path = dir / "stdout.txt";
    const auto err_path = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + CSIFORGE_CLI_PATH + "\" " + args + " > \"" +
                            out_path.string() + "\" 2> \"" + err_path.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    if (std::filesystem::exists(out_path))
        r.out = read_file_bytes(out_path);
    if (std::filesystem::exists(err_path))
        r.err = read_file_bytes(err_path);
    return r;
}

EnvironmentMap cli_map() {
    nlohmann::json j;
    j["bounds"] = {-20.0, -20.0, 20.0, 20.0};
    j["materials"] = {{{"id", 1}, {"name", "brick"}, {"reflection_loss_db", 3.0}}};
    j["walls"] = {
        {{"p0", {-6.0, 4.0}}, {"p1", {6.0, 4.0}}, {"height", 5.0}, {"material", 1}},
        {{"p0", {6.0, -6.0}}, {"p1", {6.0, 6.0}}, {"height", 5.0}, {"material", 1}},
    };
    return parse_environment(j.dump(), "cli_map");
}

std::string slurp(const std::filesystem::path &p) { return read_file_bytes(p); }

} // namespace

TEST_CASE("cli env validate") {
    const auto dir = testsupport::unique_temp_dir("cli-env");
    const auto map_path = dir / "map.json";
    save_environment(cli_map(), map_path);

    SECTION("a clean map reports its inventory and exits 0") {
        const CliResult r = run_cli("env validate \"" + map_path.string() + "\"", dir);
        CHECK(r.exit_code == 0);
        CHECK_THAT(r.out, ContainsSubstring("walls: 2"));
        CHECK_THAT(r.out, ContainsSubstring("materials: 1"));
        CHECK_THAT(r.out, ContainsSubstring("hash: "));
    }
    SECTION("a dangling material reference exits 1 with a diagnosis") {
        nlohmann::json j = nlohmann::json::parse(slurp(map_path));
        j["walls"][0]["material"] = 9;
        atomic_write_file(map_path, j.dump());
        const CliResult r = run_cli("env validate \"" + map_path.string() + "\"", dir);
        CHECK(r.exit_code == 1);
        CHECK_THAT(r.err, ContainsSubstring("error:"));
        CHECK_THAT(r.err, ContainsSubstring("undeclared material id 9"));
    }
    SECTION("a missing file exits 2") {
        const CliResult r = run_cli("env validate \"" + (dir / "nope.json").string() + "\"", dir);
        CHECK(r.exit_code == 2);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli trace prints the path table") {
    const auto dir = testsupport::unique_temp_dir("cli-trace");
    const auto map_path = dir / "map.json";
    save_environment(cli_map(), map_path);

    const CliResult r = run_cli("trace \"" + map_path.string() +
                                    "\" --tx -3,0 --rx 3,0 --order 1 --tx-height 2 --rx-height 1.5",
                                dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("kind,order,length_m,delay_s,gain_re,gain_im,aod_rad,aoa_rad,wall_ids\n",
                      0) == 0);
    CHECK_THAT(r.out, ContainsSubstring("\nLOS,0,6,"));
    CHECK_THAT(r.out, ContainsSubstring("\nREF,1,"));

    SECTION("-o writes the CSV and a manifest sidecar") {
        const auto csv_path = dir / "paths.csv";
        const CliResult w = run_cli("trace \"" + map_path.string() +
                                        "\" --tx -3,0 --rx 3,0 --order 1 --tx-height 2 "
                                        "--rx-height 1.5 -o \"" +
                                        csv_path.string() + "\"",
                                    dir);
        REQUIRE(w.exit_code == 0);
        CHECK(slurp(csv_path) == r.out);
        CHECK(std::filesystem::exists(dir / "paths.csv.manifest.json"));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli pipeline: build, split, featurize, train, eval, report") {
    const auto dir = testsupport::unique_temp_dir("cli-pipe");
    const auto map_path = dir / "map.json";
    save_environment(cli_map(), map_path);
    const auto ds_path = dir / "data.csid";
    const auto split_path = dir / "split.json";
    const auto ckpt_path = dir / "model.csim";
    const auto cache_dir = dir / "cache";

    const std::string common = "--spacing 0.5 --order 1 --subcarriers 4 --nh 2 --nv 2 --seed 7";
    const CliResult build = run_cli("dataset build \"" + map_path.string() + "\" -o \"" +
                                        ds_path.string() +
                                        "\" --region -1,-1,1,1 --bs 0,-8,3 " + common,
                                    dir);
    REQUIRE(build.exit_code == 0);
    CHECK_THAT(build.out, ContainsSubstring("samples: 25"));
    CHECK_THAT(build.out, ContainsSubstring("antennas: 4, subcarriers: 4"));
    REQUIRE(std::filesystem::exists(ds_path));

    const CliResult sp = run_cli("dataset split \"" + ds_path.string() + "\" -o \"" +
                                     split_path.string() + "\" --val-ratio 0.2 --seed 7",
                                 dir);
    REQUIRE(sp.exit_code == 0);
    CHECK_THAT(sp.out, ContainsSubstring("train: 20"));
    CHECK_THAT(sp.out, ContainsSubstring("val: 5"));

    const std::string feat_flags =
        " --k-walls 2 --pe-frequencies 2 --raster-width 5 --raster-resolution 0.5";
    const CliResult fz = run_cli("featurize \"" + map_path.string() + "\" \"" + ds_path.string() +
                                     "\" --cache-dir \"" + cache_dir.string() + "\"" + feat_flags,
                                 dir);
    REQUIRE(fz.exit_code == 0);
    CHECK_THAT(fz.out, ContainsSubstring("records: 25"));
    CHECK_THAT(fz.out, ContainsSubstring("cache entry: "));

    const CliResult tr = run_cli(
        "train \"" + map_path.string() + "\" \"" + ds_path.string() + "\" \"" +
            split_path.string() + "\" -o \"" + ckpt_path.string() + "\" --model mlp --hidden 16 " +
            "--epochs 3 --batch 8 --seed 7 --quiet --cache-dir \"" + cache_dir.string() + "\"" +
            feat_flags,
        dir);
    REQUIRE(tr.exit_code == 0);
    CHECK_THAT(tr.out, ContainsSubstring("epochs run: 3"));
    REQUIRE(std::filesystem::exists(ckpt_path));
    const auto metrics_path = dir / "model.csim.metrics.csv";
    REQUIRE(std::filesystem::exists(metrics_path));

    const CliResult ev = run_cli("eval \"" + map_path.string() + "\" \"" + ds_path.string() +
                                     "\" \"" + ckpt_path.string() + "\" --split \"" +
                                     split_path.string() + "\" --subset val --cache-dir \"" +
                                     cache_dir.string() + "\"",
                                 dir);
    REQUIRE(ev.exit_code == 0);
    CHECK_THAT(ev.out, ContainsSubstring("subset: val"));
    CHECK_THAT(ev.out, ContainsSubstring("samples: 5"));
    CHECK_THAT(ev.out, ContainsSubstring("nmse: "));

    const auto svg_path = dir / "curves.svg";
    const CliResult rp = run_cli("report \"" + metrics_path.string() + "\" -o \"" +
                                     svg_path.string() + "\" --names mlp",
                                 dir);
    REQUIRE(rp.exit_code == 0);
    const std::string svg = slurp(svg_path);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK_THAT(svg, ContainsSubstring("mlp"));
    CHECK(std::filesystem::exists(dir / "curves.table.csv"));
    CHECK_THAT(slurp(dir / "curves.table.csv"), ContainsSubstring("mlp"));

    std::filesystem::remove_all(dir);
}

TEST_CASE("cli reruns reproduce artifacts and flag the manifest") {
    const auto dir = testsupport::unique_temp_dir("cli-repro");
    const auto map_path = dir / "map.json";
    save_environment(cli_map(), map_path);
    const auto ds_path = dir / "data.csid";

    const std::string cmd = "dataset build \"" + map_path.string() + "\" -o \"" +
                            ds_path.string() +
                            "\" --region -1,-1,1,1 --bs 0,-8,3 --spacing 0.5 --order 1 "
                            "--subcarriers 4 --nh 2 --nv 2 --seed 7";
    REQUIRE(run_cli(cmd, dir).exit_code == 0);
    const std::string first_bytes = slurp(ds_path);
    const auto manifest_path = dir / "data.csid.manifest.json";
    const auto m1 = nlohmann::json::parse(slurp(manifest_path));
    CHECK(m1.at("reproduction").get<bool>() == false);
    CHECK(m1.at("command").get<std::string>() == "dataset build");
    CHECK(m1.at("seed").get<std::uint64_t>() == 7);

    REQUIRE(run_cli(cmd, dir).exit_code == 0);
    CHECK(slurp(ds_path) == first_bytes);
    const auto m2 = nlohmann::json::parse(slurp(manifest_path));
    CHECK(m2.at("reproduction").get<bool>() == true);
    CHECK(m2.at("fingerprint") == m1.at("fingerprint"));

    std::filesystem::remove_all(dir);
}

TEST_CASE("cli refuses artifacts from a different map unless forced") {
    const auto dir = testsupport::unique_temp_dir("cli-hash");
    const auto map_path = dir / "map.json";
    save_environment(cli_map(), map_path);
    const auto ds_path = dir / "data.csid";
    const auto cache_dir = dir / "cache";

    REQUIRE(run_cli("dataset build \"" + map_path.string() + "\" -o \"" + ds_path.string() +
                        "\" --region -1,-1,1,1 --bs 0,-8,3 --spacing 0.5 --order 1 "
                        "--subcarriers 4 --nh 2 --nv 2 --seed 7",
                    dir)
                .exit_code == 0);

    // move a wall: same schema, different content hash
    nlohmann::json j = nlohmann::json::parse(slurp(map_path));
    j["walls"][0]["p0"] = {-5.0, 4.0};
    const auto other_map = dir / "other.json";
    atomic_write_file(other_map, j.dump());

    const std::string feat = "featurize \"" + other_map.string() + "\" \"" + ds_path.string() +
                             "\" --cache-dir \"" + cache_dir.string() +
                             "\" --k-walls 2 --pe-frequencies 2 --raster-width 5 "
                             "--raster-resolution 0.5";
    const CliResult refused = run_cli(feat, dir);
    CHECK(refused.exit_code == 1);
    CHECK_THAT(refused.err, ContainsSubstring("does not match the dataset's recorded map hash"));

    const CliResult forced = run_cli(feat + " --force", dir);
    CHECK(forced.exit_code == 0);
    CHECK_THAT(forced.err, ContainsSubstring("warning:"));

    std::filesystem::remove_all(dir);
}

TEST_CASE("cli training twice writes byte-identical artifacts") {
    const auto dir = testsupport::unique_temp_dir("cli-bytes");
    const auto map_path = dir / "map.json";
    save_environment(cli_map(), map_path);
    const auto ds_path = dir / "data.csid";
    const auto split_path = dir / "split.json";

    REQUIRE(run_cli("dataset build \"" + map_path.string() + "\" -o \"" + ds_path.string() +
                        "\" --region -1,-1,1,1 --bs 0,-8,3 --spacing 0.5 --order 1 "
                        "--subcarriers 4 --nh 2 --nv 2 --seed 7",
                    dir)
                .exit_code == 0);
    REQUIRE(run_cli("dataset split \"" + ds_path.string() + "\" -o \"" + split_path.string() +
                        "\" --val-ratio 0.2 --seed 7",
                    dir)
                .exit_code == 0);

    const auto run_once = [&](const std::string &tag) {
        const auto sub = dir / tag;
        std::filesystem::create_directories(sub);
        const auto ckpt = sub / "model.csim";
        const CliResult r = run_cli(
            "train \"" + map_path.string() + "\" \"" + ds_path.string() + "\" \"" +
                split_path.string() + "\" -o \"" + ckpt.string() +
                "\" --model vae --hidden 12 --latent 3 --epochs 3 --batch 8 --seed 7 --quiet "
                "--cache-dir \"" +
                (sub / "cache").string() +
                "\" --k-walls 2 --pe-frequencies 2 --raster-width 5 --raster-resolution 0.5",
            sub);
        REQUIRE(r.exit_code == 0);
        return std::pair{slurp(ckpt), slurp(sub / "model.csim.metrics.csv")};
    };

    const auto [ckpt_a, metrics_a] = run_once("a");
    const auto [ckpt_b, metrics_b] = run_once("b");
    CHECK(ckpt_a == ckpt_b);
    CHECK(metrics_a == metrics_b);

    std::filesystem::remove_all(dir);
}
