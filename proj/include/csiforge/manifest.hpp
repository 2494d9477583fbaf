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
// Run manifests: a JSON sidecar emitted by every mutating CLI command. The
// fingerprint covers command, resolved config, input hashes and seed; a rerun
// whose fingerprint matches the previous manifest at the same path is flagged
// as a reproduction.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiforge/errors.hpp"
#include "csiforge/io.hpp"

namespace csiforge {

inline constexpr const char *kToolkitVersion = "0.1.0";

inline std::string file_content_hash(const std::filesystem::path &path) {
    return hex64(fnv1a64(read_file_bytes(path)));
}

struct RunManifest {
    std::string command;      // subcommand, e.g. "dataset build"
    std::string command_line; // argv joined with spaces
    std::string toolkit_version = kToolkitVersion;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object(); // resolved configuration echo
    std::map<std::string, std::string> input_hashes;  // path -> content hash
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;
    bool reproduction = false;

    std::string fingerprint() const {
        nlohmann::json j{{"command", command},
                         {"config", config},
                         {"inputs", input_hashes},
                         {"seed", seed}};
        return hex64(fnv1a64(j.dump()));
    }

    nlohmann::json to_json_value() const {
        return {{"command", command},
                {"command_line", command_line},
                {"toolkit_version", toolkit_version},
                {"seed", seed},
                {"config", config},
                {"input_hashes", input_hashes},
                {"outputs", outputs},
                {"duration_seconds", duration_seconds},
                {"fingerprint", fingerprint()},
                {"reproduction", reproduction}};
    }
};

/// Writes the manifest next to the command's primary output. If a previous
/// manifest with the same fingerprint exists at the path, the new one is
/// flagged reproduction = true.
inline void write_run_manifest(RunManifest manifest, const std::filesystem::path &path) {
    if (std::filesystem::exists(path)) {
        try {
            const auto prev = nlohmann::json::parse(read_file_bytes(path));
            if (prev.contains("fingerprint") &&
                prev["fingerprint"].get<std::string>() == manifest.fingerprint())
                manifest.reproduction = true;
        } catch (const nlohmann::json::exception &) {
            // unreadable previous manifest: treat as a fresh run
        } catch (const IoError &) {
        }
    }
    atomic_write_file(path, manifest.to_json_value().dump(2) + "\n");
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path &output) {
    std::filesystem::path p = output;
    p += ".manifest.json";
    return p;
}

} // namespace csiforge
