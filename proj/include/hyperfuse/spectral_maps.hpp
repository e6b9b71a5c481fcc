#ifndef HYPERFUSE_SPECTRAL_MAPS_HPP
#define HYPERFUSE_SPECTRAL_MAPS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/cube.hpp"

namespace hyperfuse {

enum class MaterialClass : std::uint8_t { Road = 0, Vegetation = 1, Shade = 2, Unknown = 3 };

struct ClassMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<MaterialClass> labels;  // height * width, row-major

    MaterialClass at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
};

struct ClassifierThresholds {
    double ndvi_red_nm = 670.0;
    double ndvi_nir_nm = 800.0;
    double ndvi_vegetation_min = 0.4;
    double shade_brightness_max = 0.05;  // mean reflectance floor
    double road_ndvi_max = 0.2;
};

/// Per-pixel (NIR - RED) / (NIR + RED) on the nearest bands; 0 where the sum
/// is 0.
BandImage ndvi(const HyperCube& cube, double red_nm, double nir_nm);

/// Decision list per pixel: Shade (broadband mean below the brightness
/// floor), then Vegetation (high NDVI), then Road (low NDVI), else Unknown.
ClassMap classify_materials(const HyperCube& cube, const ClassifierThresholds& t);

/// Legend colors: Road red, Vegetation green, Shade blue, Unknown gray.
BandImage render_class_map(const ClassMap& map);

std::string class_counts_csv(const ClassMap& map);

}  // namespace hyperfuse

#endif
