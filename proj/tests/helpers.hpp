#ifndef HYPERFUSE_TEST_HELPERS_HPP
#define HYPERFUSE_TEST_HELPERS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hyperfuse/cube.hpp"
#include "hyperfuse/ply.hpp"
#include "hyperfuse/projection.hpp"
#include "hyperfuse/rng.hpp"

namespace hftest {

/// Cube with reproducible pseudo-random DN values and a linear wavelength axis.
inline hyperfuse::HyperCube random_dn_cube(std::size_t samples, std::size_t lines,
                                           std::size_t bands, std::uint64_t seed,
                                           double wl0 = 450.0, double wl_step = 2.0) {
    hyperfuse::HyperCube cube;
    cube.header.samples = samples;
    cube.header.lines = lines;
    cube.header.bands = bands;
    cube.header.data_type = hyperfuse::DataType::U16;
    for (std::size_t b = 0; b < bands; ++b)
        cube.header.wavelengths.push_back(wl0 + wl_step * static_cast<double>(b));
    cube.values.resize(samples * lines * bands);
    hyperfuse::Xoshiro256 rng(seed);
    for (auto& v : cube.values) v = static_cast<double>(rng.below(4096));
    return cube;
}

inline hyperfuse::HyperCube constant_reflectance_cube(std::size_t samples,
                                                      std::size_t lines,
                                                      std::size_t bands,
                                                      double value) {
    hyperfuse::HyperCube cube;
    cube.header.samples = samples;
    cube.header.lines = lines;
    cube.header.bands = bands;
    cube.header.data_type = hyperfuse::DataType::F32;
    cube.units = hyperfuse::Units::Reflectance;
    for (std::size_t b = 0; b < bands; ++b)
        cube.header.wavelengths.push_back(450.0 + 2.0 * static_cast<double>(b));
    cube.values.assign(samples * lines * bands, value);
    return cube;
}

/// Reflectance cube whose spectrum encodes the pixel: value = (line*samples +
/// sample) scaled into [0, 1], constant across bands except band 0 which adds
/// a band marker. Lets fusion tests verify which pixel a spectrum came from.
inline hyperfuse::HyperCube pixel_coded_cube(std::size_t samples, std::size_t lines,
                                             std::size_t bands) {
    hyperfuse::HyperCube cube = constant_reflectance_cube(samples, lines, bands, 0.0);
    const double scale = 1.0 / static_cast<double>(samples * lines + bands + 1);
    for (std::size_t l = 0; l < lines; ++l)
        for (std::size_t s = 0; s < samples; ++s)
            for (std::size_t b = 0; b < bands; ++b)
                cube.at(l, s, b) =
                    static_cast<double>(l * samples + s + b) * scale;
    return cube;
}

/// A well-conditioned finite-projective camera looking down +z at a scene
/// around the origin, scaled so points in [-5,5]^2 x [8,12] land in a
/// samples x lines image.
inline hyperfuse::ProjectionModel test_camera(double samples, double lines) {
    hyperfuse::ProjectionModel m;
    const double f = samples * 0.8;
    m.p = {f, 0.0, samples / 2.0, 0.0,
           0.0, f, lines / 2.0, 0.0,
           0.0, 0.0, 1.0, 0.0};
    m.normalize();
    return m;
}

inline std::array<double, 3> random_point(hyperfuse::Xoshiro256& rng) {
    return {rng.uniform() * 10.0 - 5.0, rng.uniform() * 10.0 - 5.0,
            8.0 + rng.uniform() * 4.0};
}

/// Unit-norm descriptor concentrated on a few bins, distinct per id.
inline std::array<float, 128> coded_descriptor(std::uint32_t id) {
    std::array<float, 128> d{};
    hyperfuse::Xoshiro256 rng(0x5eedULL + id);
    double norm_sq = 0.0;
    for (int j = 0; j < 6; ++j) {
        const std::size_t bin = rng.below(128);
        const float v = 0.2f + static_cast<float>(rng.uniform()) * 0.3f;
        d[bin] += v;
    }
    for (float v : d) norm_sq += static_cast<double>(v) * v;
    const float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (auto& v : d) v *= inv;
    return d;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() / ("hyperfuse_" + tag);
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string root() const { return dir_.string(); }

private:
    std::filesystem::path dir_;
};

}  // namespace hftest

#endif
