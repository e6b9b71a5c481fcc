#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "hyperfuse/errors.hpp"
#include "hyperfuse/sift.hpp"

using namespace hyperfuse;

namespace {

BandImage gray_image(std::size_t w, std::size_t h, float fill = 0.0f) {
    BandImage img;
    img.width = w;
    img.height = h;
    img.channels = 1;
    img.pixels.assign(w * h, fill);
    return img;
}

void add_blob(BandImage& img, double cx, double cy, double sigma, double amp) {
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            img.at(x, y) += static_cast<float>(
                amp * std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma)));
        }
}

/// Textured test scene: a grid of blobs with varied sizes and signs.
BandImage blob_scene(std::size_t w, std::size_t h, std::uint64_t seed) {
    BandImage img = gray_image(w, h, 0.5f);
    Xoshiro256 rng(seed);
    for (int i = 0; i < 40; ++i) {
        const double cx = 10.0 + rng.uniform() * (w - 20.0);
        const double cy = 10.0 + rng.uniform() * (h - 20.0);
        const double sigma = 1.5 + rng.uniform() * 4.0;
        const double amp = (rng.below(2) ? 0.4 : -0.4) * (0.5 + rng.uniform());
        add_blob(img, cx, cy, sigma, amp);
    }
    for (auto& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

BandImage rotate90_cw(const BandImage& img) {
    BandImage out = gray_image(img.height, img.width);
    for (std::size_t y = 0; y < out.height; ++y)
        for (std::size_t x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(y, img.height - 1 - x);
    return out;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("uniform and too-small images") {
    CHECK(detect_keypoints(gray_image(64, 64, 0.5f)).empty());
    CHECK_THROWS_AS(detect_keypoints(gray_image(31, 64)), ImageTooSmall);
    CHECK_THROWS_AS(detect_keypoints(gray_image(64, 20)), ImageTooSmall);
}

TEST_CASE("an isolated blob yields a keypoint at its center") {
    BandImage img = gray_image(96, 96, 0.2f);
    add_blob(img, 48.0, 48.0, 4.0, 0.6);
    const auto kps = detect_keypoints(img);
    REQUIRE(!kps.empty());
    double best = 1e9;
    for (const auto& kp : kps)
        best = std::min(best, std::hypot(kp.x - 48.0, kp.y - 48.0));
    CHECK(best < 1.0);
}

TEST_CASE("keypoints are sorted canonically and detection is deterministic") {
    const BandImage img = blob_scene(128, 96, 5);
    const auto a = detect_keypoints(img);
    const auto b = detect_keypoints(img);
    REQUIRE(!a.empty());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].orientation == b[i].orientation);
    }
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto key = [](const Keypoint& k) {
            return std::make_tuple(k.octave, k.y, k.x, k.scale, k.orientation);
        };
        CHECK(key(a[i - 1]) <= key(a[i]));
    }
}

TEST_CASE("descriptors are unit norm with components capped near 0.2") {
    const BandImage img = blob_scene(128, 128, 8);
    const FeatureSet set = compute_descriptors(img, detect_keypoints(img));
    REQUIRE(!set.descriptors.empty());
    CHECK(set.keypoints.size() == set.descriptors.size());
    for (const auto& d : set.descriptors) {
        double norm_sq = 0.0;
        float peak = 0.0f;
        for (float v : d) {
            CHECK(v >= 0.0f);
            peak = std::max(peak, v);
            norm_sq += static_cast<double>(v) * v;
        }
        CHECK(std::sqrt(norm_sq) == doctest::Approx(1.0).epsilon(1e-4));
        // renormalization after the 0.2 clip can push components slightly above
        CHECK(peak <= 0.3f);
    }
}

TEST_CASE("90-degree rotation: >= 60% repeatability, matched descriptors close") {
    const BandImage img = blob_scene(128, 128, 21);
    const BandImage rot = rotate90_cw(img);
    const FeatureSet a = compute_descriptors(img, detect_keypoints(img));
    const FeatureSet b = compute_descriptors(rot, detect_keypoints(rot));
    REQUIRE(a.keypoints.size() >= 10);

    std::size_t repeated = 0;
    std::vector<double> matched_dist;
    for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
        // (x, y) maps to (H-1-y, x) under the clockwise rotation
        const double ex = img.height - 1.0 - a.keypoints[i].y;
        const double ey = a.keypoints[i].x;
        double best = 1e9;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.keypoints.size(); ++j) {
            const double d = std::hypot(b.keypoints[j].x - ex, b.keypoints[j].y - ey);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        if (best < 2.0) {
            repeated++;
            matched_dist.push_back(
                descriptor_distance(a.descriptors[i], b.descriptors[best_j]));
        }
    }
    CHECK(static_cast<double>(repeated) >=
          0.6 * static_cast<double>(a.keypoints.size()));
    REQUIRE(!matched_dist.empty());
    std::sort(matched_dist.begin(), matched_dist.end());
    CHECK(matched_dist[matched_dist.size() / 2] <= 0.35);  // median
}

TEST_CASE("contrast doubling keeps keypoints and barely moves descriptors") {
    const BandImage img = blob_scene(96, 96, 33);
    BandImage scaled = img;
    for (auto& v : scaled.pixels) v *= 0.5f;  // exact in float

    const FeatureSet a = compute_descriptors(img, detect_keypoints(img));
    const FeatureSet b = compute_descriptors(scaled, detect_keypoints(scaled));
    REQUIRE(!a.keypoints.empty());

    // every keypoint surviving the halved contrast threshold must exist in the
    // original set at the same place with a near-identical descriptor
    std::size_t found = 0;
    for (std::size_t j = 0; j < b.keypoints.size(); ++j) {
        for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
            if (a.keypoints[i].x == b.keypoints[j].x &&
                a.keypoints[i].y == b.keypoints[j].y &&
                a.keypoints[i].orientation == b.keypoints[j].orientation) {
                CHECK(descriptor_distance(a.descriptors[i], b.descriptors[j]) < 1e-3);
                found++;
                break;
            }
        }
    }
    CHECK(found == b.keypoints.size());
}

TEST_CASE("feature file round trip") {
    const BandImage img = blob_scene(96, 96, 44);
    const FeatureSet set = compute_descriptors(img, detect_keypoints(img));
    REQUIRE(!set.keypoints.empty());

    const auto bytes = write_features(set);
    CHECK(bytes.size() == 4 + set.keypoints.size() * (16 + kDescriptorDim));
    const FeatureSet back = load_features(bytes);
    REQUIRE(back.keypoints.size() == set.keypoints.size());
    for (std::size_t i = 0; i < set.keypoints.size(); ++i) {
        CHECK(back.keypoints[i].x == set.keypoints[i].x);
        CHECK(back.keypoints[i].y == set.keypoints[i].y);
        CHECK(back.keypoints[i].scale == set.keypoints[i].scale);
        CHECK(back.keypoints[i].orientation == set.keypoints[i].orientation);
    }
    // a second write of the loaded set is byte-identical
    CHECK(write_features(back) == bytes);

    CHECK_THROWS_AS(load_features({'n', 'o', 'p', 'e'}), MalformedHeader);
    auto cut = bytes;
    cut.pop_back();
    CHECK_THROWS_AS(load_features(cut), TruncatedPayload);
}

TEST_CASE("grayscale conversion uses luma weights on [0,1]") {
    BandImage rgb;
    rgb.width = 1;
    rgb.height = 1;
    rgb.channels = 3;
    rgb.pixels = {255.0f, 0.0f, 0.0f};
    CHECK(to_grayscale(rgb).pixels[0] == doctest::Approx(0.299).epsilon(1e-5));
    rgb.pixels = {255.0f, 255.0f, 255.0f};
    CHECK(to_grayscale(rgb).pixels[0] == doctest::Approx(1.0).epsilon(1e-5));
}
