#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace canaudit::manifest {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// manifest.json: {"config_hash": ..., "files": {name: sha256}}.
void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& filenames,
                    const std::string& config_hash);

}  // namespace canaudit::manifest
