#ifndef HYPERFUSE_ERRORS_HPP
#define HYPERFUSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hyperfuse {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// cube_io
struct MissingKey : Error {
    explicit MissingKey(const std::string& key)
        : Error("missing header key: " + key), key(key) {}
    std::string key;
};
struct MalformedValue : Error {
    explicit MalformedValue(const std::string& key)
        : Error("malformed value for key: " + key), key(key) {}
    std::string key;
};
struct WavelengthCountMismatch : Error {
    WavelengthCountMismatch(std::size_t got, std::size_t expected)
        : Error("wavelength count " + std::to_string(got) +
                " does not match bands " + std::to_string(expected)) {}
};
struct SizeMismatch : Error {
    SizeMismatch(std::size_t got, std::size_t expected)
        : Error("payload size " + std::to_string(got) + " bytes, expected " +
                std::to_string(expected)) {}
};
struct UnsupportedDataType : Error {
    explicit UnsupportedDataType(int envi_code)
        : Error("unsupported ENVI data type " + std::to_string(envi_code)) {}
};
struct WavelengthOutOfRange : Error {
    explicit WavelengthOutOfRange(double nm)
        : Error("wavelength " + std::to_string(nm) + " nm outside cube range") {}
};

// radiometry
struct TargetOutOfRange : Error {
    explicit TargetOutOfRange(double nm)
        : Error("resample target " + std::to_string(nm) +
                " nm outside source spectrum range") {}
};
struct RoiOutOfBounds : Error {
    RoiOutOfBounds() : Error("ROI exceeds cube spatial extent") {}
};
struct ZeroTarpSignal : Error {
    explicit ZeroTarpSignal(std::size_t band)
        : Error("tarp ROI mean is not positive in band " + std::to_string(band)),
          band(band) {}
    std::size_t band;
};
struct UnitsMismatch : Error {
    explicit UnitsMismatch(const std::string& msg) : Error(msg) {}
};

// cloud
struct MalformedHeader : Error {
    explicit MalformedHeader(const std::string& msg)
        : Error("malformed PLY: " + msg) {}
};
struct UnsupportedProperty : Error {
    explicit UnsupportedProperty(const std::string& msg)
        : Error("unsupported PLY property: " + msg) {}
};
struct TruncatedPayload : Error {
    explicit TruncatedPayload(const std::string& msg)
        : Error("truncated payload: " + msg) {}
};
struct TooFewPoints : Error {
    TooFewPoints(std::size_t n, std::size_t k)
        : Error("k-means needs n >= k, got n=" + std::to_string(n) +
                " k=" + std::to_string(k)) {}
};
struct NoDescriptors : Error {
    NoDescriptors() : Error("point cloud carries no feature descriptors") {}
};
struct CountExceedsVocabulary : Error {
    CountExceedsVocabulary(std::size_t count, std::size_t k)
        : Error("knn count " + std::to_string(count) + " exceeds vocabulary size " +
                std::to_string(k)) {}
};

// features
struct ImageTooSmall : Error {
    ImageTooSmall(std::size_t w, std::size_t h)
        : Error("image " + std::to_string(w) + "x" + std::to_string(h) +
                " below 32x32 minimum") {}
};

// registration
struct VocabularyTooSmall : Error {
    VocabularyTooSmall() : Error("vocabulary needs at least 2 words") {}
};
struct DegenerateConfiguration : Error {
    explicit DegenerateConfiguration(const std::string& msg)
        : Error("degenerate correspondence configuration: " + msg) {}
};
struct TooFewCorrespondences : Error {
    TooFewCorrespondences(std::size_t n, std::size_t need)
        : Error("need at least " + std::to_string(need) + " correspondences, got " +
                std::to_string(n)) {}
};

// fusion
struct ModelNotAccepted : Error {
    ModelNotAccepted() : Error("projection model was not accepted by registration") {}
};
struct NonInvertibleGeoTransform : Error {
    NonInvertibleGeoTransform() : Error("geotransform is not invertible") {}
};

struct IoFailure : Error {
    explicit IoFailure(const std::string& path)
        : Error("I/O failure: " + path) {}
};

}  // namespace hyperfuse

#endif
