#include "fairpred/manifest.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fairpred/errors.hpp"
#include "fairpred/eventlog.hpp"
#include "fairpred/hashing.hpp"

namespace fairpred {

namespace {

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    return format_iso8601(ms);
}

} // namespace

std::string RunManifest::hash() const {
    // Everything except the timestamps, in a canonical order.
    std::ostringstream canonical;
    canonical << "command=" << command << '\n';
    for (const auto& [key, value] : config_snapshot) {
        canonical << "config." << key << '=' << value << '\n';
    }
    for (const auto& [path, content_hash] : input_hashes) {
        canonical << "input." << path << '=' << content_hash << '\n';
    }
    canonical << "seed=" << seed << '\n';
    for (const std::string& output : outputs) {
        canonical << "output=" << output << '\n';
    }
    canonical << "version=" << kToolkitVersion << '\n';
    return to_hex(fnv1a64(canonical.str()));
}

RunManifest begin_manifest(const std::string& command, const Config& config,
                           const std::vector<std::string>& input_paths) {
    RunManifest manifest;
    manifest.command = command;
    manifest.config_snapshot = config.entries();
    manifest.seed = config.get_u64("seed", 1);
    manifest.started = now_iso8601();
    for (const std::string& path : input_paths) {
        manifest.input_hashes[path] = hash_file(path);
    }
    return manifest;
}

void write_manifest(RunManifest& manifest, const std::string& out_dir) {
    manifest.finished = now_iso8601();

    nlohmann::ordered_json doc;
    doc["toolkit"] = std::string("fairpred ") + kToolkitVersion;
    doc["command"] = manifest.command;
    doc["manifest_hash"] = manifest.hash();
    doc["seed"] = manifest.seed;
    doc["config"] = manifest.config_snapshot;
    doc["inputs"] = manifest.input_hashes;
    doc["outputs"] = manifest.outputs;
    doc["started"] = manifest.started;
    doc["finished"] = manifest.finished;

    std::string path = out_dir + "/manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write manifest: " + path);
    }
    out << doc.dump(2) << '\n';
}

} // namespace fairpred
