#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hubnet/io.hpp"
#include "hubnet/version.hpp"

namespace hubnet {

// Provenance record written next to every output artifact: what ran, with
// which arguments and seed, over which input bytes, and for how long.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::optional<std::uint64_t> seed;
  std::string version = HUBNET_VERSION;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, fnv1a64
  double duration_seconds = 0.0;

  void add_input(const std::string& path) {
    input_digests.emplace_back(path, "fnv1a64:" + fnv1a64_hex(read_file(path)));
  }

  json to_json() const {
    json doc;
    doc["subcommand"] = subcommand;
    doc["argv"] = argv;
    if (seed)
      doc["seed"] = *seed;
    else
      doc["seed"] = nullptr;
    doc["version"] = version;
    json inputs = json::object();
    for (const auto& [path, digest] : input_digests) inputs[path] = digest;
    doc["inputs"] = std::move(inputs);
    doc["duration_seconds"] = duration_seconds;
    return doc;
  }

  // Written as "<artifact>.manifest.json".
  void write_alongside(const std::string& artifact_path) const {
    write_file(artifact_path + ".manifest.json", to_json().dump(2) + "\n");
  }
};

}  // namespace hubnet
