#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "canaudit/errors.hpp"

namespace canaudit::jsonl {

using json = nlohmann::json;

// Parses one JSON object per line; blank lines are rejected. Errors carry
// the 1-based line number.
std::vector<json> read_file(const std::filesystem::path& path);

// dump() with no indent, one record per line, trailing newline.
void write_file(const std::filesystem::path& path, const std::vector<json>& records);

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const json&)>& fn);

}  // namespace canaudit::jsonl
