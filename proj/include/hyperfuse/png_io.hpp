#ifndef HYPERFUSE_PNG_IO_HPP
#define HYPERFUSE_PNG_IO_HPP

#include <string>

#include "hyperfuse/cube.hpp"

namespace hyperfuse {

/// Write an 8-bit grayscale or RGB PNG. Pixel values are rounded and
/// clamped to [0, 255].
void write_png(const BandImage& image, const std::string& path);

}  // namespace hyperfuse

#endif
