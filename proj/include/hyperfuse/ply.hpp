#ifndef HYPERFUSE_PLY_HPP
#define HYPERFUSE_PLY_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hyperfuse {

constexpr std::size_t kDescriptorDim = 128;

struct PointCloud {
    std::vector<std::array<float, 3>> points;
    std::vector<std::array<std::uint8_t, 3>> colors;  // empty or 1:1 with points

    // Feature descriptors, one or more per point, flattened.
    std::vector<float> descriptors;                // descriptor_count * 128
    std::vector<std::uint32_t> descriptor_point;   // owning point id per descriptor

    bool has_colors() const { return !colors.empty(); }
    std::size_t descriptor_count() const { return descriptor_point.size(); }
    const float* descriptor(std::size_t i) const {
        return &descriptors[i * kDescriptorDim];
    }
};

/// Parse an ASCII or binary-little-endian PLY vertex list (float x,y,z,
/// optional uchar red,green,blue; other scalar properties are skipped).
PointCloud load_ply(const std::vector<std::uint8_t>& bytes);

PointCloud load_ply_file(const std::string& path);

/// Binary-little-endian writer; emits colors when present. Written files
/// re-parse to the identical cloud.
std::vector<std::uint8_t> write_ply(const PointCloud& cloud);
void write_ply_file(const PointCloud& cloud, const std::string& path);

/// Descriptor sidecar, magic HFD1: records of (point_id u32,
/// descriptor 128 x u8 at x512 quantization of the unit-norm float vector).
void load_descriptor_sidecar(PointCloud& cloud, const std::vector<std::uint8_t>& bytes);
void load_descriptor_sidecar_file(PointCloud& cloud, const std::string& path);
std::vector<std::uint8_t> write_descriptor_sidecar(const PointCloud& cloud);
void write_descriptor_sidecar_file(const PointCloud& cloud, const std::string& path);

/// u8 <-> float descriptor component quantization shared by all feature files.
inline float dequantize_descriptor(std::uint8_t q) {
    return static_cast<float>(q) / 512.0f;
}
std::uint8_t quantize_descriptor(float v);

}  // namespace hyperfuse

#endif
