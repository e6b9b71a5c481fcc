#include "hyperfuse/sift.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hyperfuse/errors.hpp"
#include "hyperfuse/ply.hpp"

namespace hyperfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Image {
    std::size_t w = 0, h = 0;
    std::vector<float> v;

    Image() = default;
    Image(std::size_t w, std::size_t h) : w(w), h(h), v(w * h, 0.0f) {}
    float at(std::size_t x, std::size_t y) const { return v[y * w + x]; }
    float& at(std::size_t x, std::size_t y) { return v[y * w + x]; }
};

std::vector<float> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double g = std::exp(-0.5 * i * i / (sigma * sigma));
        k[i + radius] = static_cast<float>(g);
        sum += g;
    }
    for (float& x : k) x = static_cast<float>(x / sum);
    return k;
}

// Separable blur with edge clamping.
Image blur(const Image& src, double sigma) {
    if (sigma <= 0.0) return src;
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = static_cast<int>(src.w), h = static_cast<int>(src.h);

    Image tmp(src.w, src.h), dst(src.w, src.h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i) {
                const int xi = std::clamp(x + i, 0, w - 1);
                acc += k[i + radius] * src.at(xi, y);
            }
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i) {
                const int yi = std::clamp(y + i, 0, h - 1);
                acc += k[i + radius] * tmp.at(x, yi);
            }
            dst.at(x, y) = acc;
        }
    return dst;
}

Image half_size(const Image& src) {
    Image dst(src.w / 2, src.h / 2);
    for (std::size_t y = 0; y < dst.h; ++y)
        for (std::size_t x = 0; x < dst.w; ++x) dst.at(x, y) = src.at(2 * x, 2 * y);
    return dst;
}

struct Pyramid {
    // gaussians[o][i], i in [0, s+2]; dogs[o][i], i in [0, s+1]
    std::vector<std::vector<Image>> gaussians;
    std::vector<std::vector<Image>> dogs;
    std::size_t s = 3;
    double sigma0 = 1.6;
};

Pyramid build_pyramid(const Image& input, const SiftConfig& cfg) {
    Pyramid pyr;
    pyr.s = cfg.scales_per_octave;
    pyr.sigma0 = cfg.sigma0;

    const double boost =
        std::sqrt(std::max(0.01, cfg.sigma0 * cfg.sigma0 -
                                     cfg.assumed_blur * cfg.assumed_blur));
    Image base = blur(input, boost);

    const double k = std::pow(2.0, 1.0 / static_cast<double>(pyr.s));
    // per-octave incremental blur amounts between adjacent gaussian levels
    std::vector<double> increments(pyr.s + 3, 0.0);
    for (std::size_t i = 1; i < increments.size(); ++i) {
        const double prev = cfg.sigma0 * std::pow(k, static_cast<double>(i - 1));
        const double cur = prev * k;
        increments[i] = std::sqrt(cur * cur - prev * prev);
    }

    for (std::size_t o = 0; o < cfg.max_octaves; ++o) {
        if (std::min(base.w, base.h) < 16) break;
        std::vector<Image> gauss;
        gauss.reserve(pyr.s + 3);
        gauss.push_back(base);
        for (std::size_t i = 1; i < pyr.s + 3; ++i)
            gauss.push_back(blur(gauss.back(), increments[i]));

        std::vector<Image> dog;
        dog.reserve(pyr.s + 2);
        for (std::size_t i = 0; i + 1 < gauss.size(); ++i) {
            Image d(gauss[i].w, gauss[i].h);
            for (std::size_t p = 0; p < d.v.size(); ++p)
                d.v[p] = gauss[i + 1].v[p] - gauss[i].v[p];
            dog.push_back(std::move(d));
        }

        base = half_size(gauss[pyr.s]);  // gaussian at 2*sigma0 seeds the next octave
        pyr.gaussians.push_back(std::move(gauss));
        pyr.dogs.push_back(std::move(dog));
    }
    return pyr;
}

bool is_extremum(const std::vector<Image>& dog, std::size_t layer, std::size_t x,
                 std::size_t y) {
    const float v = dog[layer].at(x, y);
    const bool positive = v > 0.0f;
    for (int dl = -1; dl <= 1; ++dl)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dl == 0 && dy == 0 && dx == 0) continue;
                const float nb = dog[layer + dl].at(x + dx, y + dy);
                if (positive ? nb >= v : nb <= v) return false;
            }
    return true;
}

// Quadratic refinement of an extremum; returns false when it drifts out of
// the valid region or the fit rejects it.
bool refine_extremum(const std::vector<Image>& dog, const SiftConfig& cfg,
                     std::size_t s, int& layer, int& x, int& y, double offset[3],
                     double& contrast) {
    const int max_attempts = 5;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const Image& c = dog[layer];
        const Image& lo = dog[layer - 1];
        const Image& hi = dog[layer + 1];

        const double dx = 0.5 * (c.at(x + 1, y) - c.at(x - 1, y));
        const double dy = 0.5 * (c.at(x, y + 1) - c.at(x, y - 1));
        const double ds = 0.5 * (hi.at(x, y) - lo.at(x, y));

        const double dxx = c.at(x + 1, y) + c.at(x - 1, y) - 2.0 * c.at(x, y);
        const double dyy = c.at(x, y + 1) + c.at(x, y - 1) - 2.0 * c.at(x, y);
        const double dss = hi.at(x, y) + lo.at(x, y) - 2.0 * c.at(x, y);
        const double dxy = 0.25 * (c.at(x + 1, y + 1) - c.at(x - 1, y + 1) -
                                   c.at(x + 1, y - 1) + c.at(x - 1, y - 1));
        const double dxs = 0.25 * (hi.at(x + 1, y) - hi.at(x - 1, y) -
                                   lo.at(x + 1, y) + lo.at(x - 1, y));
        const double dys = 0.25 * (hi.at(x, y + 1) - hi.at(x, y - 1) -
                                   lo.at(x, y + 1) + lo.at(x, y - 1));

        // solve H * delta = -grad (3x3, Cramer)
        const double H[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
        const double det = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
                           H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
                           H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
        if (std::abs(det) < 1e-12) return false;
        const double g[3] = {dx, dy, ds};
        double delta[3];
        for (int i = 0; i < 3; ++i) {
            double M[3][3];
            std::memcpy(M, H, sizeof(M));
            for (int r = 0; r < 3; ++r) M[r][i] = -g[r];
            const double di = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                              M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                              M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
            delta[i] = di / det;
        }

        if (std::abs(delta[0]) < 0.5 && std::abs(delta[1]) < 0.5 &&
            std::abs(delta[2]) < 0.5) {
            offset[0] = delta[0];
            offset[1] = delta[1];
            offset[2] = delta[2];
            contrast = c.at(x, y) +
                       0.5 * (dx * delta[0] + dy * delta[1] + ds * delta[2]);
            return true;
        }

        x += static_cast<int>(std::lround(delta[0]));
        y += static_cast<int>(std::lround(delta[1]));
        layer += static_cast<int>(std::lround(delta[2]));
        if (layer < 1 || layer > static_cast<int>(s) || x < 1 ||
            x >= static_cast<int>(c.w) - 1 || y < 1 ||
            y >= static_cast<int>(c.h) - 1)
            return false;
    }
    return false;
}

bool passes_edge_test(const Image& dog, int x, int y, double edge_ratio) {
    const double dxx = dog.at(x + 1, y) + dog.at(x - 1, y) - 2.0 * dog.at(x, y);
    const double dyy = dog.at(x, y + 1) + dog.at(x, y - 1) - 2.0 * dog.at(x, y);
    const double dxy = 0.25 * (dog.at(x + 1, y + 1) - dog.at(x - 1, y + 1) -
                               dog.at(x + 1, y - 1) + dog.at(x - 1, y - 1));
    const double tr = dxx + dyy;
    const double det = dxx * dyy - dxy * dxy;
    if (det <= 0.0) return false;
    const double r = edge_ratio;
    return tr * tr / det < (r + 1.0) * (r + 1.0) / r;
}

// 36-bin gradient orientation histogram around (x, y); returns the peak
// orientations (>= 80% of the maximum), parabola-interpolated.
std::vector<float> dominant_orientations(const Image& gauss, double x, double y,
                                         double sigma_oct) {
    constexpr int bins = 36;
    double hist[bins] = {0.0};
    const double weight_sigma = 1.5 * sigma_oct;
    const int radius = static_cast<int>(std::lround(3.0 * weight_sigma));
    const int w = static_cast<int>(gauss.w), h = static_cast<int>(gauss.h);
    const int cx = static_cast<int>(std::lround(x));
    const int cy = static_cast<int>(std::lround(y));

    for (int j = -radius; j <= radius; ++j)
        for (int i = -radius; i <= radius; ++i) {
            const int px = cx + i, py = cy + j;
            if (px < 1 || px >= w - 1 || py < 1 || py >= h - 1) continue;
            const double gx = 0.5 * (gauss.at(px + 1, py) - gauss.at(px - 1, py));
            const double gy = 0.5 * (gauss.at(px, py + 1) - gauss.at(px, py - 1));
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            const double angle = std::atan2(gy, gx);  // [-pi, pi]
            const double wgt =
                std::exp(-0.5 * (i * i + j * j) / (weight_sigma * weight_sigma));
            int bin = static_cast<int>(
                std::floor((angle + kPi) / (2.0 * kPi) * bins));
            bin = std::clamp(bin, 0, bins - 1);
            hist[bin] += wgt * mag;
        }

    // two smoothing passes with a 1/3 box
    for (int pass = 0; pass < 2; ++pass) {
        double prev = hist[bins - 1];
        const double first = hist[0];
        for (int b = 0; b < bins; ++b) {
            const double next = (b + 1 < bins) ? hist[b + 1] : first;
            const double cur = hist[b];
            hist[b] = (prev + cur + next) / 3.0;
            prev = cur;
        }
    }

    double peak = 0.0;
    for (double v : hist) peak = std::max(peak, v);
    std::vector<float> out;
    if (peak <= 0.0) return out;
    for (int b = 0; b < bins; ++b) {
        const double l = hist[(b + bins - 1) % bins];
        const double c = hist[b];
        const double r = hist[(b + 1) % bins];
        if (c <= l || c <= r || c < 0.8 * peak) continue;
        const double shift = 0.5 * (l - r) / (l - 2.0 * c + r);
        double angle = (b + 0.5 + shift) / bins * 2.0 * kPi - kPi;
        if (angle < -kPi) angle += 2.0 * kPi;
        if (angle >= kPi) angle -= 2.0 * kPi;
        out.push_back(static_cast<float>(angle));
    }
    return out;
}

Image image_from_band(const BandImage& gray) {
    Image img(gray.width, gray.height);
    for (std::size_t i = 0; i < img.v.size(); ++i) img.v[i] = gray.pixels[i];
    return img;
}

}  // namespace

BandImage to_grayscale(const BandImage& rgb) {
    BandImage gray;
    gray.width = rgb.width;
    gray.height = rgb.height;
    gray.channels = 1;
    gray.pixels.resize(rgb.width * rgb.height);
    if (rgb.channels == 1) {
        for (std::size_t i = 0; i < gray.pixels.size(); ++i)
            gray.pixels[i] = rgb.pixels[i] / 255.0f;
        return gray;
    }
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const float r = rgb.pixels[i * 3 + 0];
        const float g = rgb.pixels[i * 3 + 1];
        const float b = rgb.pixels[i * 3 + 2];
        gray.pixels[i] = (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
    }
    return gray;
}

std::vector<Keypoint> detect_keypoints(const BandImage& gray, const SiftConfig& cfg) {
    if (gray.width < 32 || gray.height < 32)
        throw ImageTooSmall(gray.width, gray.height);

    const Pyramid pyr = build_pyramid(image_from_band(gray), cfg);
    const std::size_t s = pyr.s;
    const double prelim = 0.5 * cfg.contrast_threshold / static_cast<double>(s);
    const double final_thresh = cfg.contrast_threshold / static_cast<double>(s);

    std::vector<Keypoint> keypoints;
    for (std::size_t o = 0; o < pyr.dogs.size(); ++o) {
        const auto& dog = pyr.dogs[o];
        const double octave_scale = std::pow(2.0, static_cast<double>(o));
        for (std::size_t layer = 1; layer <= s; ++layer) {
            const Image& d = dog[layer];
            for (std::size_t y = 1; y + 1 < d.h; ++y)
                for (std::size_t x = 1; x + 1 < d.w; ++x) {
                    if (std::abs(d.at(x, y)) <= prelim) continue;
                    if (!is_extremum(dog, layer, x, y)) continue;

                    int rl = static_cast<int>(layer);
                    int rx = static_cast<int>(x), ry = static_cast<int>(y);
                    double offset[3], contrast;
                    if (!refine_extremum(dog, cfg, s, rl, rx, ry, offset, contrast))
                        continue;
                    if (std::abs(contrast) < final_thresh) continue;
                    if (!passes_edge_test(dog[rl], rx, ry, cfg.edge_ratio)) continue;

                    const double layer_pos = rl + offset[2];
                    const double sigma_oct =
                        cfg.sigma0 * std::pow(2.0, layer_pos / static_cast<double>(s));
                    const double fx = (rx + offset[0]) * octave_scale;
                    const double fy = (ry + offset[1]) * octave_scale;

                    for (float angle : dominant_orientations(
                             pyr.gaussians[o][rl], rx + offset[0], ry + offset[1],
                             sigma_oct)) {
                        Keypoint kp;
                        kp.x = static_cast<float>(fx);
                        kp.y = static_cast<float>(fy);
                        kp.scale = static_cast<float>(sigma_oct * octave_scale);
                        kp.orientation = angle;
                        kp.response = static_cast<float>(std::abs(contrast));
                        kp.octave = static_cast<std::int16_t>(o);
                        kp.layer = static_cast<std::int16_t>(rl);
                        keypoints.push_back(kp);
                    }
                }
        }
    }

    std::sort(keypoints.begin(), keypoints.end(),
              [](const Keypoint& a, const Keypoint& b) {
                  return std::tie(a.octave, a.y, a.x, a.scale, a.orientation) <
                         std::tie(b.octave, b.y, b.x, b.scale, b.orientation);
              });
    return keypoints;
}

namespace {

bool sample_descriptor(const Image& gauss, double x, double y, double sigma_oct,
                       double orientation, Descriptor& desc) {
    constexpr int d = 4;  // spatial grid
    constexpr int n = 8;  // orientation bins
    const double hist_width = 3.0 * sigma_oct;
    const int radius = static_cast<int>(
        std::lround(hist_width * std::sqrt(2.0) * (d + 1) * 0.5 + 0.5));
    const double cos_t = std::cos(-orientation);
    const double sin_t = std::sin(-orientation);
    const int w = static_cast<int>(gauss.w), h = static_cast<int>(gauss.h);
    const int cx = static_cast<int>(std::lround(x));
    const int cy = static_cast<int>(std::lround(y));

    if (cx - radius < 1 || cx + radius >= w - 1 || cy - radius < 1 ||
        cy + radius >= h - 1)
        return false;  // window leaves the image

    double hist[d + 2][d + 2][n] = {};
    for (int j = -radius; j <= radius; ++j)
        for (int i = -radius; i <= radius; ++i) {
            // rotate into the keypoint frame, in units of grid cells
            const double rx = (cos_t * i - sin_t * j) / hist_width;
            const double ry = (sin_t * i + cos_t * j) / hist_width;
            const double cbin = rx + d / 2.0 - 0.5;
            const double rbin = ry + d / 2.0 - 0.5;
            if (cbin <= -1.0 || cbin >= d || rbin <= -1.0 || rbin >= d) continue;

            const int px = cx + i, py = cy + j;
            const double gx = 0.5 * (gauss.at(px + 1, py) - gauss.at(px - 1, py));
            const double gy = 0.5 * (gauss.at(px, py + 1) - gauss.at(px, py - 1));
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) - orientation;
            while (angle < 0.0) angle += 2.0 * kPi;
            while (angle >= 2.0 * kPi) angle -= 2.0 * kPi;
            const double obin = angle / (2.0 * kPi) * n;
            const double wgt = std::exp(-(rx * rx + ry * ry) / (0.5 * d * d));

            // trilinear accumulation
            const int r0 = static_cast<int>(std::floor(rbin));
            const int c0 = static_cast<int>(std::floor(cbin));
            const int o0 = static_cast<int>(std::floor(obin));
            const double dr = rbin - r0, dc = cbin - c0, dob = obin - o0;
            for (int ri = 0; ri < 2; ++ri)
                for (int ci = 0; ci < 2; ++ci)
                    for (int oi = 0; oi < 2; ++oi) {
                        const int rr = r0 + ri + 1, cc = c0 + ci + 1;
                        if (rr < 0 || rr >= d + 2 || cc < 0 || cc >= d + 2) continue;
                        const double share = mag * wgt * (ri ? dr : 1.0 - dr) *
                                             (ci ? dc : 1.0 - dc) *
                                             (oi ? dob : 1.0 - dob);
                        hist[rr][cc][(o0 + oi) % n] += share;
                    }
        }

    double norm_sq = 0.0;
    for (int r = 1; r <= d; ++r)
        for (int c = 1; c <= d; ++c)
            for (int o = 0; o < n; ++o) {
                const double v = hist[r][c][o];
                desc[((r - 1) * d + (c - 1)) * n + o] = static_cast<float>(v);
                norm_sq += v * v;
            }
    if (norm_sq <= 0.0) return false;  // zero gradient everywhere

    double norm = std::sqrt(norm_sq);
    for (float& v : desc) v = static_cast<float>(std::min(v / norm, 0.2));
    norm_sq = 0.0;
    for (float v : desc) norm_sq += static_cast<double>(v) * v;
    norm = std::sqrt(norm_sq);
    for (float& v : desc) v = static_cast<float>(v / norm);
    return true;
}

}  // namespace

FeatureSet compute_descriptors(const BandImage& gray,
                               const std::vector<Keypoint>& keypoints,
                               const SiftConfig& cfg) {
    if (gray.width < 32 || gray.height < 32)
        throw ImageTooSmall(gray.width, gray.height);
    const Pyramid pyr = build_pyramid(image_from_band(gray), cfg);

    FeatureSet out;
    for (const Keypoint& kp : keypoints) {
        const std::size_t o = static_cast<std::size_t>(kp.octave);
        if (o >= pyr.gaussians.size()) {
            out.dropped++;
            continue;
        }
        const std::size_t layer = std::clamp<std::size_t>(
            static_cast<std::size_t>(kp.layer), 1, pyr.s);
        const double octave_scale = std::pow(2.0, static_cast<double>(kp.octave));
        const double sigma_oct = kp.scale / octave_scale;

        Descriptor desc;
        if (!sample_descriptor(pyr.gaussians[o][layer], kp.x / octave_scale,
                               kp.y / octave_scale, sigma_oct, kp.orientation,
                               desc)) {
            out.dropped++;
            continue;
        }
        out.keypoints.push_back(kp);
        out.descriptors.push_back(desc);
    }
    return out;
}

std::vector<std::uint8_t> write_features(const FeatureSet& features) {
    std::vector<std::uint8_t> out = {'H', 'F', 'F', '1'};
    for (std::size_t i = 0; i < features.keypoints.size(); ++i) {
        const Keypoint& kp = features.keypoints[i];
        const float fields[4] = {kp.x, kp.y, kp.scale, kp.orientation};
        const std::size_t at = out.size();
        out.resize(at + 16 + kDescriptorDim);
        std::memcpy(out.data() + at, fields, 16);
        for (std::size_t c = 0; c < kDescriptorDim; ++c)
            out[at + 16 + c] = quantize_descriptor(features.descriptors[i][c]);
    }
    return out;
}

FeatureSet load_features(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "HFF1", 4) != 0)
        throw MalformedHeader("feature file lacks HFF1 magic");
    const std::size_t record = 16 + kDescriptorDim;
    if ((bytes.size() - 4) % record != 0)
        throw TruncatedPayload("feature file record boundary");
    const std::size_t n = (bytes.size() - 4) / record;

    FeatureSet out;
    out.keypoints.resize(n);
    out.descriptors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + 4 + i * record;
        float fields[4];
        std::memcpy(fields, rec, 16);
        out.keypoints[i].x = fields[0];
        out.keypoints[i].y = fields[1];
        out.keypoints[i].scale = fields[2];
        out.keypoints[i].orientation = fields[3];
        for (std::size_t c = 0; c < kDescriptorDim; ++c)
            out.descriptors[i][c] = dequantize_descriptor(rec[16 + c]);
    }
    return out;
}

void write_features_file(const FeatureSet& features, const std::string& path) {
    const auto bytes = write_features(features);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

FeatureSet load_features_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_features(bytes);
}

}  // namespace hyperfuse
