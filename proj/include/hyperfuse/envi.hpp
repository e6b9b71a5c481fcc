#ifndef HYPERFUSE_ENVI_HPP
#define HYPERFUSE_ENVI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/cube.hpp"

namespace hyperfuse {

/// Parse an ENVI header ("ENVI" magic line, key = value pairs, wavelength
/// block in braces). Unknown keys land in header.extra.
CubeHeader parse_envi_header(const std::string& text);

std::string write_envi_header(const CubeHeader& header);

/// Decode a raw payload into canonical (line, sample, band) order.
/// Units start as DigitalNumber; callers flip the flag after calibration.
HyperCube load_cube(const CubeHeader& header, const std::vector<std::uint8_t>& payload);

/// Encode the cube back to raw bytes in the header's interleave, sample type
/// and byte order. Reflectance values are clamped to [-0.5, 2.0] on write.
std::vector<std::uint8_t> write_cube(const HyperCube& cube);

/// File-level convenience: hdr_path names the ENVI header; the payload lives
/// next to it (same stem with .img, .raw or .dat, probed in that order).
HyperCube load_cube_file(const std::string& hdr_path);
void save_cube_file(const HyperCube& cube, const std::string& hdr_path);

/// True-color composite with per-channel 2nd-98th percentile stretch to [0,255].
BandImage rgb_composite(const HyperCube& cube, double red_nm, double green_nm,
                        double blue_nm);

}  // namespace hyperfuse

#endif
