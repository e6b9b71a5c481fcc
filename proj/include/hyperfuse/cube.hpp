#ifndef HYPERFUSE_CUBE_HPP
#define HYPERFUSE_CUBE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hyperfuse {

enum class Interleave { BIL, BSQ, BIP };
enum class DataType { U16, F32 };
enum class ByteOrder { Little, Big };
enum class Units { DigitalNumber, Reflectance };

inline std::size_t sample_size(DataType t) {
    return t == DataType::U16 ? 2 : 4;
}

struct CubeHeader {
    std::size_t samples = 0;  // pixels per line
    std::size_t lines = 0;
    std::size_t bands = 0;
    Interleave interleave = Interleave::BIL;
    DataType data_type = DataType::U16;
    ByteOrder byte_order = ByteOrder::Little;
    std::size_t header_offset = 0;  // bytes skipped in the payload file
    std::vector<double> wavelengths;  // nm, strictly increasing, one per band
    // Unknown keys, preserved verbatim for round-trip.
    std::map<std::string, std::string> extra;

    std::size_t payload_bytes() const {
        return samples * lines * bands * sample_size(data_type) + header_offset;
    }
    std::size_t pixel_count() const { return samples * lines; }
};

/// Hyperspectral cube, canonical in-memory order (line, sample, band).
/// Values are stored as double regardless of the on-disk sample type, so
/// DN counts and f32 samples are exactly representable and calibration
/// arithmetic keeps full precision.
struct HyperCube {
    CubeHeader header;
    Units units = Units::DigitalNumber;
    std::vector<double> values;  // lines * samples * bands, band fastest

    double at(std::size_t line, std::size_t sample, std::size_t band) const {
        return values[(line * header.samples + sample) * header.bands + band];
    }
    double& at(std::size_t line, std::size_t sample, std::size_t band) {
        return values[(line * header.samples + sample) * header.bands + band];
    }
    const double* spectrum(std::size_t line, std::size_t sample) const {
        return &values[(line * header.samples + sample) * header.bands];
    }

    /// Index of the band whose center wavelength is nearest to nm.
    /// Ties go to the shorter wavelength.
    std::size_t nearest_band(double nm) const;
};

struct BandImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;  // 1 = scalar, 3 = RGB
    std::vector<float> pixels;  // height * width * channels, row-major

    float at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }
    float& at(std::size_t x, std::size_t y, std::size_t c = 0) {
        return pixels[(y * width + x) * channels + c];
    }
};

}  // namespace hyperfuse

#endif
