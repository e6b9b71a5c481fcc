#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "hyperfuse/errors.hpp"
#include "hyperfuse/ply.hpp"

using namespace hyperfuse;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

void append(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
}

}  // namespace

TEST_CASE("ascii ply with colors parses") {
    const std::string text =
        "ply\n"
        "format ascii 1.0\n"
        "comment synthetic\n"
        "element vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
        "1.5 -2 3 10 20 30\n"
        "0 0.25 -1 0 255 128\n";
    const PointCloud cloud = load_ply(bytes_of(text));
    REQUIRE(cloud.points.size() == 2);
    CHECK(cloud.points[0] == std::array<float, 3>{1.5f, -2.0f, 3.0f});
    CHECK(cloud.points[1] == std::array<float, 3>{0.0f, 0.25f, -1.0f});
    REQUIRE(cloud.has_colors());
    CHECK(cloud.colors[0] == std::array<std::uint8_t, 3>{10, 20, 30});
    CHECK(cloud.colors[1] == std::array<std::uint8_t, 3>{0, 255, 128});
}

TEST_CASE("binary little-endian ply parses and skips unknown scalars") {
    std::vector<std::uint8_t> data = bytes_of(
        "ply\n"
        "format binary_little_endian 1.0\n"
        "element vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float confidence\n"
        "end_header\n");
    const float rows[2][4] = {{1.0f, 2.0f, 3.0f, 0.9f}, {-1.0f, 0.5f, 4.0f, 0.1f}};
    append(data, rows, sizeof(rows));
    const PointCloud cloud = load_ply(data);
    REQUIRE(cloud.points.size() == 2);
    CHECK(cloud.points[0] == std::array<float, 3>{1.0f, 2.0f, 3.0f});
    CHECK(cloud.points[1] == std::array<float, 3>{-1.0f, 0.5f, 4.0f});
    CHECK_FALSE(cloud.has_colors());
}

TEST_CASE("ply error cases") {
    CHECK_THROWS_AS(load_ply(bytes_of("off\n")), MalformedHeader);
    CHECK_THROWS_AS(
        load_ply(bytes_of("ply\nformat ascii 1.0\nelement vertex 1\n"
                          "property float x\nproperty float y\nproperty float z\n"
                          "property list uchar int vertex_indices\n"
                          "end_header\n0 0 0\n")),
        UnsupportedProperty);
    std::vector<std::uint8_t> truncated = bytes_of(
        "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n");
    const float one[3] = {0.0f, 0.0f, 0.0f};
    append(truncated, one, sizeof(one));  // one vertex short
    CHECK_THROWS_AS(load_ply(truncated), TruncatedPayload);
}

TEST_CASE("binary write/read round trip is bit-exact") {
    PointCloud cloud;
    Xoshiro256 rng(33);
    for (int i = 0; i < 40; ++i) {
        cloud.points.push_back({static_cast<float>(rng.uniform() * 100 - 50),
                                static_cast<float>(rng.uniform() * 100 - 50),
                                static_cast<float>(rng.uniform() * 30)});
        cloud.colors.push_back({static_cast<std::uint8_t>(rng.below(256)),
                                static_cast<std::uint8_t>(rng.below(256)),
                                static_cast<std::uint8_t>(rng.below(256))});
    }
    const auto bytes = write_ply(cloud);
    const PointCloud back = load_ply(bytes);
    CHECK(back.points == cloud.points);
    CHECK(back.colors == cloud.colors);
    // writer output is stable
    CHECK(write_ply(back) == bytes);
}

TEST_CASE("descriptor sidecar round trips through quantization") {
    PointCloud cloud;
    for (int i = 0; i < 5; ++i)
        cloud.points.push_back({static_cast<float>(i), 0.0f, 0.0f});
    for (std::uint32_t i = 0; i < 7; ++i) {
        const auto d = hftest::coded_descriptor(i);
        cloud.descriptor_point.push_back(i % 5);
        // store the already-quantized values so the round trip is exact
        for (float v : d)
            cloud.descriptors.push_back(dequantize_descriptor(quantize_descriptor(v)));
    }
    const auto bytes = write_descriptor_sidecar(cloud);
    PointCloud loaded;
    loaded.points = cloud.points;
    load_descriptor_sidecar(loaded, bytes);
    CHECK(loaded.descriptor_point == cloud.descriptor_point);
    CHECK(loaded.descriptors == cloud.descriptors);
}

TEST_CASE("sidecar byte layout: magic then 4 + 128 byte records") {
    PointCloud cloud;
    cloud.points.push_back({0.0f, 0.0f, 0.0f});
    cloud.descriptor_point.push_back(0);
    for (std::size_t j = 0; j < kDescriptorDim; ++j)
        cloud.descriptors.push_back(j == 3 ? 1.0f : 0.0f);
    const auto bytes = write_descriptor_sidecar(cloud);
    REQUIRE(bytes.size() == 4 + 4 + kDescriptorDim);
    CHECK(std::memcmp(bytes.data(), "HFD1", 4) == 0);
    std::uint32_t pid;
    std::memcpy(&pid, bytes.data() + 4, 4);
    CHECK(pid == 0);
    CHECK(bytes[8 + 3] == 255);  // 1.0 * 512 clamps to 255
    CHECK(bytes[8 + 4] == 0);
}

TEST_CASE("sidecar referencing a missing point is rejected") {
    PointCloud cloud;
    cloud.points.push_back({0.0f, 0.0f, 0.0f});
    std::vector<std::uint8_t> bytes = {'H', 'F', 'D', '1'};
    const std::uint32_t pid = 9;  // only one vertex
    append(bytes, &pid, 4);
    bytes.resize(bytes.size() + kDescriptorDim, 0);
    CHECK_THROWS_AS(load_descriptor_sidecar(cloud, bytes), MalformedHeader);
}

TEST_CASE("descriptor quantization clamps and rounds") {
    CHECK(quantize_descriptor(0.0f) == 0);
    CHECK(quantize_descriptor(1.0f) == 255);   // 512 clamps
    CHECK(quantize_descriptor(-0.5f) == 0);
    CHECK(quantize_descriptor(0.25f) == 128);  // 0.25 * 512
    CHECK(dequantize_descriptor(128) == 0.25f);
}
