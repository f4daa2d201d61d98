#include "canaudit/jsonl.hpp"

namespace canaudit::jsonl {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": malformed JSONL record");
        }
        fn(lineno, rec);
    }
}

std::vector<json> read_file(const std::filesystem::path& path) {
    std::vector<json> out;
    for_each_line(path, [&](std::size_t, const json& rec) { out.push_back(rec); });
    return out;
}

void write_file(const std::filesystem::path& path, const std::vector<json>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const json& rec : records) out << rec.dump() << '\n';
    if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace canaudit::jsonl
