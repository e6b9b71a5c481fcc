#ifndef HYPERFUSE_MANIFEST_HPP
#define HYPERFUSE_MANIFEST_HPP

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace hyperfuse {

constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit content hash, hex encoded.
std::string fnv1a64_hex(const std::uint8_t* data, std::size_t size);
std::string hash_file(const std::string& path);

/// Run manifest skeleton: tool version, seed, config echo and input hashes.
/// Deliberately timestamp-free so reruns are byte-identical.
nlohmann::ordered_json make_manifest(std::uint64_t seed,
                                     const nlohmann::ordered_json& config_echo);

void write_manifest(const nlohmann::ordered_json& manifest, const std::string& path);

}  // namespace hyperfuse

#endif
