#include "hyperfuse/projection.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

void ProjectionModel::normalize() {
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    double sign = p[11] < 0.0 ? -1.0 : 1.0;
    if (p[11] == 0.0) {
        // degenerate p34: fix the sign on the first nonzero entry instead
        for (double v : p)
            if (v != 0.0) {
                sign = v < 0.0 ? -1.0 : 1.0;
                break;
            }
    }
    for (double& v : p) v = v * sign / norm;
}

namespace {

struct Normalization2D {
    double cx = 0.0, cy = 0.0, scale = 1.0;
};
struct Normalization3D {
    double cx = 0.0, cy = 0.0, cz = 0.0, scale = 1.0;
};

}  // namespace

ProjectionModel estimate_projection_dlt(
    const std::vector<std::array<double, 3>>& world,
    const std::vector<std::array<double, 2>>& pixels) {
    const std::size_t n = world.size();
    if (n != pixels.size() || n < 6)
        throw TooFewCorrespondences(n, 6);

    // Hartley normalization: centroids to origin, RMS distance sqrt(2) / sqrt(3)
    Normalization2D n2;
    Normalization3D n3;
    for (const auto& px : pixels) {
        n2.cx += px[0];
        n2.cy += px[1];
    }
    n2.cx /= static_cast<double>(n);
    n2.cy /= static_cast<double>(n);
    for (const auto& pt : world) {
        n3.cx += pt[0];
        n3.cy += pt[1];
        n3.cz += pt[2];
    }
    n3.cx /= static_cast<double>(n);
    n3.cy /= static_cast<double>(n);
    n3.cz /= static_cast<double>(n);

    double rms2 = 0.0, rms3 = 0.0;
    for (const auto& px : pixels) {
        const double dx = px[0] - n2.cx, dy = px[1] - n2.cy;
        rms2 += dx * dx + dy * dy;
    }
    for (const auto& pt : world) {
        const double dx = pt[0] - n3.cx, dy = pt[1] - n3.cy, dz = pt[2] - n3.cz;
        rms3 += dx * dx + dy * dy + dz * dz;
    }
    rms2 = std::sqrt(rms2 / static_cast<double>(n));
    rms3 = std::sqrt(rms3 / static_cast<double>(n));
    if (rms3 == 0.0) throw DegenerateConfiguration("coincident 3D points");
    n2.scale = rms2 > 0.0 ? std::sqrt(2.0) / rms2 : 1.0;
    n3.scale = std::sqrt(3.0) / rms3;

    Eigen::MatrixXd A(2 * n, 12);
    for (std::size_t i = 0; i < n; ++i) {
        const double X = (world[i][0] - n3.cx) * n3.scale;
        const double Y = (world[i][1] - n3.cy) * n3.scale;
        const double Z = (world[i][2] - n3.cz) * n3.scale;
        const double u = (pixels[i][0] - n2.cx) * n2.scale;
        const double v = (pixels[i][1] - n2.cy) * n2.scale;
        A.row(2 * i) << X, Y, Z, 1, 0, 0, 0, 0, -u * X, -u * Y, -u * Z, -u;
        A.row(2 * i + 1) << 0, 0, 0, 0, X, Y, Z, 1, -v * X, -v * Y, -v * Z, -v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    // rank check: an 11th singular value collapsing to the noise floor of
    // the 10th signals a degenerate (e.g. collinear/coplanar) configuration
    const double s10 = sv(9), s11 = sv(10);
    if (!(s11 > 0.0) || s10 / s11 > 1e8)
        throw DegenerateConfiguration("rank-deficient DLT system");

    const Eigen::VectorXd h = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> Pn;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) Pn(r, c) = h(r * 4 + c);

    // denormalize: P = T2^-1 * Pn * T3
    Eigen::Matrix3d T2inv = Eigen::Matrix3d::Identity();
    T2inv(0, 0) = 1.0 / n2.scale;
    T2inv(1, 1) = 1.0 / n2.scale;
    T2inv(0, 2) = n2.cx;
    T2inv(1, 2) = n2.cy;
    Eigen::Matrix4d T3 = Eigen::Matrix4d::Identity();
    T3(0, 0) = T3(1, 1) = T3(2, 2) = n3.scale;
    T3(0, 3) = -n3.cx * n3.scale;
    T3(1, 3) = -n3.cy * n3.scale;
    T3(2, 3) = -n3.cz * n3.scale;
    const Eigen::Matrix<double, 3, 4> P = T2inv * Pn * T3;

    ProjectionModel model;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) model.p[r * 4 + c] = P(r, c);
    model.normalize();

    // rank(P) = 3 check on the denormalized matrix
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> psvd(P);
    const auto psv = psvd.singularValues();
    if (!(psv(2) > 0.0) || psv(0) / psv(2) > 1e12)
        throw DegenerateConfiguration("projection matrix rank below 3");
    return model;
}

double reprojection_error(const ProjectionModel& model,
                          const std::array<double, 3>& world,
                          const std::array<double, 2>& pixel) {
    const auto h = model.project_homogeneous(world);
    if (h[2] == 0.0) return std::numeric_limits<double>::infinity();
    const double du = h[0] / h[2] - pixel[0];
    const double dv = h[1] / h[2] - pixel[1];
    return std::sqrt(du * du + dv * dv);
}

}  // namespace hyperfuse
