#ifndef HYPERFUSE_FUSION_HPP
#define HYPERFUSE_FUSION_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfuse/cube.hpp"
#include "hyperfuse/ply.hpp"
#include "hyperfuse/registration.hpp"

namespace hyperfuse {

/// Affine geotransform mapping cube pixel (u, v) to world (X, Y):
///   X = origin_x + u * pixel_dx + v * rot_x
///   Y = origin_y + u * rot_y + v * pixel_dy
struct GeoRef {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_dx = 1.0;
    double pixel_dy = 1.0;
    double rot_x = 0.0;
    double rot_y = 0.0;
};

/// The cloud annotated with source pixels and reflectance spectra. Geometry
/// is never modified; points outside the cube footprint carry no spectrum.
struct FusedCloud {
    std::vector<std::array<float, 3>> points;
    std::vector<std::int32_t> pixel_u;         // -1 = no source pixel
    std::vector<std::int32_t> pixel_v;
    std::vector<std::int32_t> spectrum_index;  // row in spectra, -1 = none
    std::vector<char> occluded;

    std::vector<double> spectra;               // fused_count * bands
    std::vector<std::uint32_t> spectra_point;  // point id per spectra row
    std::vector<double> wavelengths;

    std::size_t fused_count() const { return spectra_point.size(); }
    std::size_t bands() const { return wavelengths.size(); }
};

/// Project every point through P; per-pixel occlusion is resolved with a
/// depth buffer, keeping points within z_tolerance (meters) of the nearest
/// depth on that pixel's ray.
FusedCloud fuse_projective(const PointCloud& cloud, const HyperCube& cube,
                           const ProjectionModel& model, double z_tolerance = 0.2);

/// Same, gated on an accepted registration. Throws ModelNotAccepted.
FusedCloud fuse_projective(const PointCloud& cloud, const HyperCube& cube,
                           const RegistrationResult& registration,
                           double z_tolerance = 0.2);

/// Geo-referenced path: invert the geotransform per point and look up the
/// nearest pixel (round half away from zero). No occlusion handling.
FusedCloud fuse_georef(const PointCloud& cloud, const HyperCube& cube,
                       const GeoRef& geo);

/// Writes <stem>.ply (x,y,z, u, v, red/green/NIR reflectance as uchar) and
/// <stem>_spectra.hfs1 (magic HFS1, records of point_id u32 + bands x f32).
/// Returns a manifest fragment naming the files and wavelength axis.
nlohmann::ordered_json export_fused(const FusedCloud& fused, const std::string& dir,
                                    const std::string& stem);

/// Spectra-block reader for round trips; bands must match the writer's.
std::vector<std::pair<std::uint32_t, std::vector<double>>> read_spectra_block(
    const std::vector<std::uint8_t>& bytes, std::size_t bands);

}  // namespace hyperfuse

#endif
