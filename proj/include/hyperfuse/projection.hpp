#ifndef HYPERFUSE_PROJECTION_HPP
#define HYPERFUSE_PROJECTION_HPP

#include <array>
#include <cstddef>
#include <vector>

namespace hyperfuse {

/// 3x4 projective camera, scene meters -> cube pixels. Normalized to unit
/// Frobenius norm with p34 >= 0.
struct ProjectionModel {
    std::array<double, 12> p{};  // row-major

    /// Pixel (u, v) and the projective depth w of a world point.
    std::array<double, 3> project_homogeneous(const std::array<double, 3>& xyz) const {
        std::array<double, 3> out{};
        for (int r = 0; r < 3; ++r)
            out[r] = p[r * 4 + 0] * xyz[0] + p[r * 4 + 1] * xyz[1] +
                     p[r * 4 + 2] * xyz[2] + p[r * 4 + 3];
        return out;
    }

    /// Euclidean pixel coordinates; infinite when the point is on the
    /// principal plane.
    std::array<double, 2> project(const std::array<double, 3>& xyz) const {
        const auto h = project_homogeneous(xyz);
        return {h[0] / h[2], h[1] / h[2]};
    }

    void normalize();
};

/// 6-point (or overdetermined) Direct Linear Transform with Hartley
/// normalization. Throws DegenerateConfiguration for rank-deficient inputs.
ProjectionModel estimate_projection_dlt(
    const std::vector<std::array<double, 3>>& world,
    const std::vector<std::array<double, 2>>& pixels);

/// Euclidean reprojection error of one point under the model, in pixels.
double reprojection_error(const ProjectionModel& model,
                          const std::array<double, 3>& world,
                          const std::array<double, 2>& pixel);

}  // namespace hyperfuse

#endif
