#ifndef HYPERFUSE_SIFT_HPP
#define HYPERFUSE_SIFT_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/cube.hpp"

namespace hyperfuse {

struct SiftConfig {
    std::size_t scales_per_octave = 3;
    double sigma0 = 1.6;
    double assumed_blur = 0.5;      // blur already present in the input
    double contrast_threshold = 0.03;  // on [0,1] intensities
    double edge_ratio = 10.0;          // principal-curvature rejection
    std::size_t max_octaves = 8;
};

struct Keypoint {
    float x = 0.0f;  // subpixel, original-image coordinates
    float y = 0.0f;
    float scale = 0.0f;        // sigma in original-image pixels
    float orientation = 0.0f;  // radians
    float response = 0.0f;     // interpolated DoG contrast
    std::int16_t octave = 0;
    std::int16_t layer = 0;
};

using Descriptor = std::array<float, 128>;  // unit L2 norm, components >= 0

struct FeatureSet {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;  // 1:1 with keypoints
    std::size_t dropped = 0;  // border / zero-gradient keypoints discarded
};

/// Luma grayscale of an RGB composite, scaled to [0, 1].
BandImage to_grayscale(const BandImage& rgb);

/// Difference-of-Gaussians keypoints with subpixel refinement, contrast and
/// edge-response filtering, and gradient-histogram orientations. Output is
/// sorted by (octave, y, x, scale, orientation).
std::vector<Keypoint> detect_keypoints(const BandImage& gray,
                                       const SiftConfig& config = {});

/// 4x4 spatial grid x 8 orientation bins sampled in each keypoint's scaled,
/// rotated frame; clipped at 0.2 and renormalized. Keypoints whose window
/// leaves the image or whose descriptor is all-zero are dropped (counted in
/// FeatureSet::dropped).
FeatureSet compute_descriptors(const BandImage& gray,
                               const std::vector<Keypoint>& keypoints,
                               const SiftConfig& config = {});

/// Feature file, magic HFF1: records of (x, y, scale, orientation as f32,
/// descriptor 128 x u8 at x512 quantization).
std::vector<std::uint8_t> write_features(const FeatureSet& features);
FeatureSet load_features(const std::vector<std::uint8_t>& bytes);
void write_features_file(const FeatureSet& features, const std::string& path);
FeatureSet load_features_file(const std::string& path);

}  // namespace hyperfuse

#endif
