#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairpred/config.hpp"

namespace fairpred {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Audit record written next to every command's outputs. The manifest hash
// covers command, config snapshot, input hashes, seed, and output names —
// not the timestamps — so identical runs produce the identical hash.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config_snapshot;
    std::map<std::string, std::string> input_hashes; // path -> content hash
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::string started;
    std::string finished;

    std::string hash() const;
};

RunManifest begin_manifest(const std::string& command, const Config& config,
                           const std::vector<std::string>& input_paths);

// Fills `finished` and writes JSON to <out_dir>/manifest.json.
void write_manifest(RunManifest& manifest, const std::string& out_dir);

} // namespace fairpred
