#include "hyperfuse/spectral_maps.hpp"

#include <sstream>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

namespace {

void require_reflectance(const HyperCube& cube, const char* op) {
    if (cube.units != Units::Reflectance)
        throw UnitsMismatch(std::string(op) + " expects a Reflectance cube");
}

void require_in_range(const HyperCube& cube, double nm) {
    const auto& w = cube.header.wavelengths;
    if (nm < w.front() || nm > w.back()) throw WavelengthOutOfRange(nm);
}

}  // namespace

BandImage ndvi(const HyperCube& cube, double red_nm, double nir_nm) {
    require_reflectance(cube, "ndvi");
    require_in_range(cube, red_nm);
    require_in_range(cube, nir_nm);
    const std::size_t rb = cube.nearest_band(red_nm);
    const std::size_t nb = cube.nearest_band(nir_nm);

    BandImage img;
    img.width = cube.header.samples;
    img.height = cube.header.lines;
    img.channels = 1;
    img.pixels.resize(img.width * img.height);
    for (std::size_t l = 0; l < img.height; ++l)
        for (std::size_t s = 0; s < img.width; ++s) {
            const double red = cube.at(l, s, rb);
            const double nir = cube.at(l, s, nb);
            const double sum = nir + red;
            img.at(s, l) = sum == 0.0 ? 0.0f : static_cast<float>((nir - red) / sum);
        }
    return img;
}

ClassMap classify_materials(const HyperCube& cube, const ClassifierThresholds& t) {
    require_reflectance(cube, "classify_materials");
    const BandImage index = ndvi(cube, t.ndvi_red_nm, t.ndvi_nir_nm);
    const std::size_t bands = cube.header.bands;

    ClassMap map;
    map.width = cube.header.samples;
    map.height = cube.header.lines;
    map.labels.resize(map.width * map.height);

    for (std::size_t l = 0; l < map.height; ++l)
        for (std::size_t s = 0; s < map.width; ++s) {
            const double* spec = cube.spectrum(l, s);
            double mean = 0.0;
            for (std::size_t b = 0; b < bands; ++b) mean += spec[b];
            mean /= static_cast<double>(bands);
            const double v = index.at(s, l);

            MaterialClass label;
            if (mean < t.shade_brightness_max) label = MaterialClass::Shade;
            else if (v > t.ndvi_vegetation_min) label = MaterialClass::Vegetation;
            else if (v < t.road_ndvi_max) label = MaterialClass::Road;
            else label = MaterialClass::Unknown;
            map.labels[l * map.width + s] = label;
        }
    return map;
}

BandImage render_class_map(const ClassMap& map) {
    static constexpr std::array<std::array<float, 3>, 4> palette = {{
        {255.0f, 0.0f, 0.0f},      // Road
        {0.0f, 255.0f, 0.0f},      // Vegetation
        {0.0f, 0.0f, 255.0f},      // Shade
        {128.0f, 128.0f, 128.0f},  // Unknown
    }};
    BandImage img;
    img.width = map.width;
    img.height = map.height;
    img.channels = 3;
    img.pixels.resize(map.width * map.height * 3);
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        const auto& color = palette[static_cast<std::size_t>(map.labels[i])];
        for (int c = 0; c < 3; ++c) img.pixels[i * 3 + c] = color[c];
    }
    return img;
}

std::string class_counts_csv(const ClassMap& map) {
    std::size_t counts[4] = {0, 0, 0, 0};
    for (MaterialClass m : map.labels) counts[static_cast<std::size_t>(m)]++;
    std::ostringstream out;
    out << "class,pixels\n";
    out << "road," << counts[0] << "\n";
    out << "vegetation," << counts[1] << "\n";
    out << "shade," << counts[2] << "\n";
    out << "unknown," << counts[3] << "\n";
    return out.str();
}

}  // namespace hyperfuse
