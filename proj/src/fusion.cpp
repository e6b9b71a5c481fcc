#include "hyperfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

namespace {

void require_reflectance(const HyperCube& cube) {
    if (cube.units != Units::Reflectance)
        throw UnitsMismatch("fusion expects a Reflectance cube");
}

FusedCloud init_fused(const PointCloud& cloud, const HyperCube& cube) {
    FusedCloud fused;
    fused.points = cloud.points;
    fused.pixel_u.assign(cloud.points.size(), -1);
    fused.pixel_v.assign(cloud.points.size(), -1);
    fused.spectrum_index.assign(cloud.points.size(), -1);
    fused.occluded.assign(cloud.points.size(), 0);
    fused.wavelengths = cube.header.wavelengths;
    return fused;
}

void attach_spectrum(FusedCloud& fused, const HyperCube& cube, std::size_t point_id,
                     std::int32_t u, std::int32_t v) {
    fused.pixel_u[point_id] = u;
    fused.pixel_v[point_id] = v;
    fused.spectrum_index[point_id] =
        static_cast<std::int32_t>(fused.spectra_point.size());
    fused.spectra_point.push_back(static_cast<std::uint32_t>(point_id));
    const double* spec =
        cube.spectrum(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
    fused.spectra.insert(fused.spectra.end(), spec, spec + cube.header.bands);
}

}  // namespace

FusedCloud fuse_projective(const PointCloud& cloud, const HyperCube& cube,
                           const ProjectionModel& model, double z_tolerance) {
    require_reflectance(cube);
    FusedCloud fused = init_fused(cloud, cube);

    // metric depth scale: norm of the rotation part of the third row; an
    // orthographic model (all-zero row) has constant depth and no occlusion
    const double axis_norm =
        std::sqrt(model.p[8] * model.p[8] + model.p[9] * model.p[9] +
                  model.p[10] * model.p[10]);

    const auto w_limit = static_cast<double>(cube.header.samples);
    const auto h_limit = static_cast<double>(cube.header.lines);

    struct Projected {
        std::int32_t u = -1, v = -1;
        double depth = 0.0;
        bool visible = false;
    };
    std::vector<Projected> proj(cloud.points.size());
    std::vector<double> depth_buffer(cube.header.pixel_count(),
                                     std::numeric_limits<double>::infinity());

    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const auto& p = cloud.points[i];
        const auto h = model.project_homogeneous({p[0], p[1], p[2]});
        if (h[2] <= 0.0) continue;  // behind the camera / on the principal plane
        const double uc = h[0] / h[2];
        const double vc = h[1] / h[2];
        const double u = std::round(uc);
        const double v = std::round(vc);
        if (u < 0.0 || u >= w_limit || v < 0.0 || v >= h_limit) continue;
        proj[i].u = static_cast<std::int32_t>(u);
        proj[i].v = static_cast<std::int32_t>(v);
        proj[i].depth = axis_norm > 0.0 ? h[2] / axis_norm : 0.0;
        proj[i].visible = true;
        double& nearest =
            depth_buffer[static_cast<std::size_t>(v) * cube.header.samples +
                         static_cast<std::size_t>(u)];
        nearest = std::min(nearest, proj[i].depth);
    }

    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (!proj[i].visible) continue;
        const double nearest =
            depth_buffer[static_cast<std::size_t>(proj[i].v) * cube.header.samples +
                         static_cast<std::size_t>(proj[i].u)];
        if (proj[i].depth <= nearest + z_tolerance) {
            attach_spectrum(fused, cube, i, proj[i].u, proj[i].v);
        } else {
            fused.occluded[i] = 1;
            fused.pixel_u[i] = proj[i].u;
            fused.pixel_v[i] = proj[i].v;
        }
    }
    return fused;
}

FusedCloud fuse_projective(const PointCloud& cloud, const HyperCube& cube,
                           const RegistrationResult& registration,
                           double z_tolerance) {
    if (!registration.accepted) throw ModelNotAccepted();
    return fuse_projective(cloud, cube, registration.model, z_tolerance);
}

FusedCloud fuse_georef(const PointCloud& cloud, const HyperCube& cube,
                       const GeoRef& geo) {
    require_reflectance(cube);
    const double det = geo.pixel_dx * geo.pixel_dy - geo.rot_x * geo.rot_y;
    if (det == 0.0 || geo.pixel_dx == 0.0 || geo.pixel_dy == 0.0)
        throw NonInvertibleGeoTransform();

    FusedCloud fused = init_fused(cloud, cube);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const double dx = cloud.points[i][0] - geo.origin_x;
        const double dy = cloud.points[i][1] - geo.origin_y;
        const double uc = (dx * geo.pixel_dy - dy * geo.rot_x) / det;
        const double vc = (dy * geo.pixel_dx - dx * geo.rot_y) / det;
        const double u = std::round(uc);
        const double v = std::round(vc);
        if (u < 0.0 || u >= static_cast<double>(cube.header.samples) || v < 0.0 ||
            v >= static_cast<double>(cube.header.lines))
            continue;
        attach_spectrum(fused, cube, i, static_cast<std::int32_t>(u),
                        static_cast<std::int32_t>(v));
    }
    return fused;
}

nlohmann::ordered_json export_fused(const FusedCloud& fused, const std::string& dir,
                                    const std::string& stem) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string ply_path = (fs::path(dir) / (stem + ".ply")).string();
    const std::string spectra_path =
        (fs::path(dir) / (stem + "_spectra.hfs1")).string();

    // summary reflectance bands for quick-look coloring
    const auto nearest = [&](double nm) -> std::size_t {
        if (fused.wavelengths.empty()) return 0;
        std::size_t best = 0;
        for (std::size_t b = 1; b < fused.wavelengths.size(); ++b)
            if (std::abs(fused.wavelengths[b] - nm) <
                std::abs(fused.wavelengths[best] - nm))
                best = b;
        return best;
    };
    const std::size_t red_b = nearest(640.0), green_b = nearest(550.0),
                      nir_b = nearest(800.0);

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    header << "element vertex " << fused.points.size() << "\n";
    header << "property float x\nproperty float y\nproperty float z\n";
    header << "property int u\nproperty int v\n";
    header << "property uchar red\nproperty uchar green\nproperty uchar nir\n";
    header << "end_header\n";
    const std::string h = header.str();

    std::ofstream ply(ply_path, std::ios::binary);
    if (!ply) throw IoFailure(ply_path);
    ply.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (std::size_t i = 0; i < fused.points.size(); ++i) {
        ply.write(reinterpret_cast<const char*>(fused.points[i].data()), 12);
        ply.write(reinterpret_cast<const char*>(&fused.pixel_u[i]), 4);
        ply.write(reinterpret_cast<const char*>(&fused.pixel_v[i]), 4);
        std::uint8_t rgb[3] = {0, 0, 0};
        if (fused.spectrum_index[i] >= 0) {
            const double* spec =
                &fused.spectra[static_cast<std::size_t>(fused.spectrum_index[i]) *
                               fused.bands()];
            const auto to_u8 = [](double r) {
                return static_cast<std::uint8_t>(
                    std::clamp(std::lround(r * 255.0), 0L, 255L));
            };
            rgb[0] = to_u8(spec[red_b]);
            rgb[1] = to_u8(spec[green_b]);
            rgb[2] = to_u8(spec[nir_b]);
        }
        ply.write(reinterpret_cast<const char*>(rgb), 3);
    }
    ply.close();

    std::ofstream spectra(spectra_path, std::ios::binary);
    if (!spectra) throw IoFailure(spectra_path);
    spectra.write("HFS1", 4);
    for (std::size_t r = 0; r < fused.fused_count(); ++r) {
        spectra.write(reinterpret_cast<const char*>(&fused.spectra_point[r]), 4);
        for (std::size_t b = 0; b < fused.bands(); ++b) {
            const float v = static_cast<float>(fused.spectra[r * fused.bands() + b]);
            spectra.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
    spectra.close();

    nlohmann::ordered_json manifest;
    manifest["ply"] = stem + ".ply";
    manifest["spectra"] = stem + "_spectra.hfs1";
    manifest["points"] = fused.points.size();
    manifest["fused_points"] = fused.fused_count();
    manifest["bands"] = fused.bands();
    manifest["wavelengths_nm"] = fused.wavelengths;
    return manifest;
}

std::vector<std::pair<std::uint32_t, std::vector<double>>> read_spectra_block(
    const std::vector<std::uint8_t>& bytes, std::size_t bands) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "HFS1", 4) != 0)
        throw MalformedHeader("spectra block lacks HFS1 magic");
    const std::size_t record = 4 + bands * 4;
    if ((bytes.size() - 4) % record != 0)
        throw TruncatedPayload("spectra block record boundary");
    const std::size_t n = (bytes.size() - 4) / record;

    std::vector<std::pair<std::uint32_t, std::vector<double>>> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::uint8_t* rec = bytes.data() + 4 + r * record;
        std::uint32_t pid;
        std::memcpy(&pid, rec, 4);
        std::vector<double> spec(bands);
        for (std::size_t b = 0; b < bands; ++b) {
            float v;
            std::memcpy(&v, rec + 4 + b * 4, 4);
            spec[b] = v;
        }
        out.emplace_back(pid, std::move(spec));
    }
    return out;
}

}  // namespace hyperfuse
