#include "hyperfuse/manifest.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

std::string fnv1a64_hex(const std::uint8_t* data, std::size_t size) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= data[i];
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << hash;
    return out.str();
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return fnv1a64_hex(bytes.data(), bytes.size());
}

nlohmann::ordered_json make_manifest(std::uint64_t seed,
                                     const nlohmann::ordered_json& config_echo) {
    nlohmann::ordered_json m;
    m["tool"] = "hyperfuse";
    m["version"] = kToolVersion;
    m["seed"] = seed;
    m["config"] = config_echo;
    m["inputs"] = nlohmann::ordered_json::object();
    m["outputs"] = nlohmann::ordered_json::object();
    return m;
}

void write_manifest(const nlohmann::ordered_json& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(path);
    out << manifest.dump(2) << "\n";
}

}  // namespace hyperfuse
