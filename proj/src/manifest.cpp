#include "canaudit/manifest.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "canaudit/errors.hpp"

namespace canaudit::manifest {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ConfigError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& filenames,
                    const std::string& config_hash) {
    nlohmann::json files = nlohmann::json::object();
    for (const auto& name : filenames) files[name] = sha256_file(dir / name);
    const nlohmann::json manifest{{"config_hash", config_hash}, {"files", files}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
}

}  // namespace canaudit::manifest
