#include "hyperfuse/envi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        const long long v = std::stoll(trim(value));
        if (v < 0) throw MalformedValue(key);
        return static_cast<std::size_t>(v);
    } catch (const MalformedValue&) {
        throw;
    } catch (...) {
        throw MalformedValue(key);
    }
}

std::vector<double> parse_number_list(const std::string& key, const std::string& value) {
    // value is the brace-stripped comma-separated list
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw MalformedValue(key);
        } catch (...) {
            throw MalformedValue(key);
        }
    }
    return out;
}

// Raw-payload linear index for one (line, sample, band) triple.
std::size_t raw_index(const CubeHeader& h, std::size_t line, std::size_t sample,
                      std::size_t band) {
    switch (h.interleave) {
        case Interleave::BIL:
            return (line * h.bands + band) * h.samples + sample;
        case Interleave::BSQ:
            return (band * h.lines + line) * h.samples + sample;
        case Interleave::BIP:
        default:
            return (line * h.samples + sample) * h.bands + band;
    }
}

bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    std::uint8_t byte;
    std::memcpy(&byte, &probe, 1);
    return byte == 1;
}

}  // namespace

std::size_t HyperCube::nearest_band(double nm) const {
    const auto& w = header.wavelengths;
    const auto it = std::lower_bound(w.begin(), w.end(), nm);
    if (it == w.begin()) return 0;
    if (it == w.end()) return w.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - w.begin());
    const std::size_t lo = hi - 1;
    // tie goes to the shorter wavelength
    return (nm - w[lo] <= w[hi] - nm) ? lo : hi;
}

CubeHeader parse_envi_header(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "ENVI")
        throw MalformedValue("ENVI magic");

    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw MalformedValue(line);
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value = trim(line.substr(eq + 1));
        if (!value.empty() && value.front() == '{') {
            // brace block, possibly spanning lines
            while (value.find('}') == std::string::npos) {
                std::string more;
                if (!std::getline(in, more)) throw MalformedValue(key);
                value += " " + trim(more);
            }
            value = trim(value.substr(1, value.find('}') - 1));
        }
        kv[key] = value;
    }

    for (const char* required :
         {"samples", "lines", "bands", "interleave", "data type", "wavelength"}) {
        if (!kv.count(required)) throw MissingKey(required);
    }

    CubeHeader h;
    h.samples = parse_size("samples", kv["samples"]);
    h.lines = parse_size("lines", kv["lines"]);
    h.bands = parse_size("bands", kv["bands"]);
    if (h.samples == 0 || h.lines == 0 || h.bands == 0)
        throw MalformedValue("dimensions must be positive");

    const std::string il = lower(kv["interleave"]);
    if (il == "bil") h.interleave = Interleave::BIL;
    else if (il == "bsq") h.interleave = Interleave::BSQ;
    else if (il == "bip") h.interleave = Interleave::BIP;
    else throw MalformedValue("interleave");

    const std::size_t dt = parse_size("data type", kv["data type"]);
    if (dt == 12) h.data_type = DataType::U16;
    else if (dt == 4) h.data_type = DataType::F32;
    else throw UnsupportedDataType(static_cast<int>(dt));

    if (kv.count("byte order"))
        h.byte_order = parse_size("byte order", kv["byte order"]) == 0
                           ? ByteOrder::Little
                           : ByteOrder::Big;
    if (kv.count("header offset"))
        h.header_offset = parse_size("header offset", kv["header offset"]);

    h.wavelengths = parse_number_list("wavelength", kv["wavelength"]);
    if (h.wavelengths.size() != h.bands)
        throw WavelengthCountMismatch(h.wavelengths.size(), h.bands);
    for (std::size_t i = 1; i < h.wavelengths.size(); ++i)
        if (!(h.wavelengths[i] > h.wavelengths[i - 1]))
            throw MalformedValue("wavelength (not strictly increasing)");

    for (const auto& [k, v] : kv) {
        static const std::set<std::string> known = {
            "samples", "lines", "bands", "interleave", "data type",
            "byte order", "header offset", "wavelength"};
        if (!known.count(k)) h.extra[k] = v;
    }
    return h;
}

std::string write_envi_header(const CubeHeader& h) {
    std::ostringstream out;
    out << "ENVI\n";
    out << "samples = " << h.samples << "\n";
    out << "lines = " << h.lines << "\n";
    out << "bands = " << h.bands << "\n";
    out << "header offset = " << h.header_offset << "\n";
    out << "data type = " << (h.data_type == DataType::U16 ? 12 : 4) << "\n";
    out << "interleave = "
        << (h.interleave == Interleave::BIL   ? "bil"
            : h.interleave == Interleave::BSQ ? "bsq"
                                              : "bip")
        << "\n";
    out << "byte order = " << (h.byte_order == ByteOrder::Little ? 0 : 1) << "\n";
    for (const auto& [k, v] : h.extra) out << k << " = " << v << "\n";
    out << "wavelength = { ";
    for (std::size_t i = 0; i < h.wavelengths.size(); ++i) {
        if (i) out << ", ";
        std::ostringstream num;
        num.precision(17);
        num << h.wavelengths[i];
        out << num.str();
    }
    out << " }\n";
    return out.str();
}

HyperCube load_cube(const CubeHeader& header, const std::vector<std::uint8_t>& payload) {
    if (payload.size() != header.payload_bytes())
        throw SizeMismatch(payload.size(), header.payload_bytes());

    HyperCube cube;
    cube.header = header;
    cube.units = Units::DigitalNumber;
    cube.values.resize(header.samples * header.lines * header.bands);

    const std::uint8_t* base = payload.data() + header.header_offset;
    const bool swap = (header.byte_order == ByteOrder::Little) != host_is_little_endian();
    const std::size_t sz = sample_size(header.data_type);

    for (std::size_t l = 0; l < header.lines; ++l)
        for (std::size_t s = 0; s < header.samples; ++s)
            for (std::size_t b = 0; b < header.bands; ++b) {
                const std::uint8_t* p = base + raw_index(header, l, s, b) * sz;
                if (header.data_type == DataType::U16) {
                    std::uint16_t u;
                    std::memcpy(&u, p, 2);
                    if (swap) u = static_cast<std::uint16_t>((u >> 8) | (u << 8));
                    cube.at(l, s, b) = static_cast<double>(u);
                } else {
                    std::uint32_t u;
                    std::memcpy(&u, p, 4);
                    if (swap) u = __builtin_bswap32(u);
                    float v;
                    std::memcpy(&v, &u, 4);
                    cube.at(l, s, b) = static_cast<double>(v);
                }
            }
    return cube;
}

std::vector<std::uint8_t> write_cube(const HyperCube& cube) {
    const CubeHeader& h = cube.header;
    std::vector<std::uint8_t> payload(h.payload_bytes(), 0);
    std::uint8_t* base = payload.data() + h.header_offset;
    const bool swap = (h.byte_order == ByteOrder::Little) != host_is_little_endian();
    const std::size_t sz = sample_size(h.data_type);
    const bool clamp = cube.units == Units::Reflectance;

    for (std::size_t l = 0; l < h.lines; ++l)
        for (std::size_t s = 0; s < h.samples; ++s)
            for (std::size_t b = 0; b < h.bands; ++b) {
                double v = cube.at(l, s, b);
                if (clamp) v = std::clamp(v, -0.5, 2.0);
                std::uint8_t* p = base + raw_index(h, l, s, b) * sz;
                if (h.data_type == DataType::U16) {
                    const double r = std::clamp(std::round(v), 0.0, 65535.0);
                    std::uint16_t u = static_cast<std::uint16_t>(r);
                    if (swap) u = static_cast<std::uint16_t>((u >> 8) | (u << 8));
                    std::memcpy(p, &u, 2);
                } else {
                    const float f = static_cast<float>(v);
                    std::uint32_t u;
                    std::memcpy(&u, &f, 4);
                    if (swap) u = __builtin_bswap32(u);
                    std::memcpy(p, &u, 4);
                }
            }
    return payload;
}

namespace {

std::string payload_path_for(const std::string& hdr_path, bool must_exist) {
    namespace fs = std::filesystem;
    fs::path p(hdr_path);
    for (const char* ext : {".img", ".raw", ".dat"}) {
        fs::path cand = p;
        cand.replace_extension(ext);
        if (!must_exist || fs::exists(cand)) return cand.string();
    }
    throw IoFailure("no payload file next to " + hdr_path);
}

}  // namespace

HyperCube load_cube_file(const std::string& hdr_path) {
    std::ifstream hdr(hdr_path);
    if (!hdr) throw IoFailure(hdr_path);
    std::stringstream text;
    text << hdr.rdbuf();
    const CubeHeader header = parse_envi_header(text.str());

    const std::string data_path = payload_path_for(hdr_path, true);
    std::ifstream raw(data_path, std::ios::binary);
    if (!raw) throw IoFailure(data_path);
    std::vector<std::uint8_t> payload((std::istreambuf_iterator<char>(raw)),
                                      std::istreambuf_iterator<char>());
    HyperCube cube = load_cube(header, payload);
    // units flag round-trips through an auxiliary key
    auto it = header.extra.find("hyperfuse units");
    if (it != header.extra.end() && it->second == "reflectance")
        cube.units = Units::Reflectance;
    return cube;
}

void save_cube_file(const HyperCube& cube, const std::string& hdr_path) {
    HyperCube out = cube;
    if (cube.units == Units::Reflectance)
        out.header.extra["hyperfuse units"] = "reflectance";
    else
        out.header.extra.erase("hyperfuse units");

    std::ofstream hdr(hdr_path, std::ios::binary);
    if (!hdr) throw IoFailure(hdr_path);
    hdr << write_envi_header(out.header);

    const std::string data_path = payload_path_for(hdr_path, false);
    std::ofstream raw(data_path, std::ios::binary);
    if (!raw) throw IoFailure(data_path);
    const auto payload = write_cube(out);
    raw.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
}

namespace {

// 2nd-98th percentile stretch of one channel to [0,255]; constant channels
// render mid-gray.
void stretch_channel(std::vector<float>& values) {
    std::vector<float> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    const double p2 = quantile(0.02), p98 = quantile(0.98);
    if (p98 <= p2) {
        std::fill(values.begin(), values.end(), 127.0f);
        return;
    }
    for (float& v : values)
        v = static_cast<float>(
            std::clamp((v - p2) / (p98 - p2) * 255.0, 0.0, 255.0));
}

}  // namespace

BandImage rgb_composite(const HyperCube& cube, double red_nm, double green_nm,
                        double blue_nm) {
    const auto& w = cube.header.wavelengths;
    for (double nm : {red_nm, green_nm, blue_nm})
        if (nm < w.front() || nm > w.back()) throw WavelengthOutOfRange(nm);

    const std::size_t bands[3] = {cube.nearest_band(red_nm),
                                  cube.nearest_band(green_nm),
                                  cube.nearest_band(blue_nm)};
    BandImage img;
    img.width = cube.header.samples;
    img.height = cube.header.lines;
    img.channels = 3;
    img.pixels.resize(img.width * img.height * 3);

    std::vector<float> channel(cube.header.pixel_count());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t l = 0; l < cube.header.lines; ++l)
            for (std::size_t s = 0; s < cube.header.samples; ++s)
                channel[l * cube.header.samples + s] =
                    static_cast<float>(cube.at(l, s, bands[c]));
        stretch_channel(channel);
        for (std::size_t i = 0; i < channel.size(); ++i)
            img.pixels[i * 3 + c] = channel[i];
    }
    return img;
}

}  // namespace hyperfuse
