#include "hyperfuse/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png(const BandImage& image, const std::string& path) {
    const std::size_t channels = image.channels == 3 ? 3 : 1;
    const std::size_t stride = image.width * channels;

    // filter byte 0 (None) per scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(image.height * (stride + 1));
    for (std::size_t y = 0; y < image.height; ++y) {
        raw.push_back(0);
        for (std::size_t x = 0; x < stride; ++x) {
            const float v = image.pixels[y * stride + x];
            raw.push_back(static_cast<std::uint8_t>(
                std::clamp(std::lround(v), 0L, 255L)));
        }
    }

    uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(comp_size);
    if (compress2(compressed.data(), &comp_size, raw.data(),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw IoFailure("png deflate: " + path);
    compressed.resize(comp_size);

    std::vector<std::uint8_t> file = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(image.width));
    put_u32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8);                              // bit depth
    ihdr.push_back(channels == 3 ? 2 : 0);          // color type
    ihdr.push_back(0);                              // compression
    ihdr.push_back(0);                              // filter
    ihdr.push_back(0);                              // interlace
    put_chunk(file, "IHDR", ihdr);
    put_chunk(file, "IDAT", compressed);
    put_chunk(file, "IEND", {});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(path);
    out.write(reinterpret_cast<const char*>(file.data()),
              static_cast<std::streamsize>(file.size()));
}

}  // namespace hyperfuse
