#include "hyperfuse/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hyperfuse/errors.hpp"

namespace hyperfuse {

namespace {

enum class PlyFormat { Ascii, BinaryLE };

struct Property {
    std::string name;
    std::string type;
    std::size_t byte_size = 0;
};

std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
        type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    return 0;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

double parse_binary_scalar(const std::uint8_t* p, const std::string& type) {
    if (type == "float" || type == "float32") {
        float v;
        std::memcpy(&v, p, 4);
        return v;
    }
    if (type == "double" || type == "float64") {
        double v;
        std::memcpy(&v, p, 8);
        return v;
    }
    if (type == "uchar" || type == "uint8") return *p;
    if (type == "char" || type == "int8") return static_cast<std::int8_t>(*p);
    if (type == "ushort" || type == "uint16") {
        std::uint16_t v;
        std::memcpy(&v, p, 2);
        return v;
    }
    if (type == "short" || type == "int16") {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        return v;
    }
    if (type == "uint" || type == "uint32") {
        std::uint32_t v;
        std::memcpy(&v, p, 4);
        return v;
    }
    std::int32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

}  // namespace

std::uint8_t quantize_descriptor(float v) {
    const long q = std::lround(v * 512.0f);
    return static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
}

PointCloud load_ply(const std::vector<std::uint8_t>& bytes) {
    // locate end_header
    const std::string marker = "end_header";
    const char* data = reinterpret_cast<const char*>(bytes.data());
    std::string head(data, std::min<std::size_t>(bytes.size(), 65536));
    const auto pos = head.find(marker);
    if (pos == std::string::npos) throw MalformedHeader("no end_header");
    std::size_t body_off = pos + marker.size();
    while (body_off < bytes.size() &&
           (bytes[body_off] == '\r' || bytes[body_off] == '\n')) {
        ++body_off;
        if (bytes[body_off - 1] == '\n') break;
    }

    std::istringstream header(head.substr(0, pos));
    std::string line;
    if (!std::getline(header, line) || line.substr(0, 3) != "ply")
        throw MalformedHeader("missing ply magic");

    PlyFormat format = PlyFormat::Ascii;
    std::size_t vertex_count = 0;
    bool in_vertex = false, seen_vertex = false;
    std::vector<Property> props;

    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii") format = PlyFormat::Ascii;
            else if (fmt == "binary_little_endian") format = PlyFormat::BinaryLE;
            else throw MalformedHeader("unsupported format " + fmt);
        } else if (tok == "element") {
            std::string name;
            std::size_t count;
            ss >> name >> count;
            if (name == "vertex") {
                if (seen_vertex) throw MalformedHeader("duplicate vertex element");
                vertex_count = count;
                in_vertex = true;
                seen_vertex = true;
            } else {
                in_vertex = false;  // trailing elements are ignored
            }
        } else if (tok == "property") {
            if (!in_vertex) continue;
            std::string type;
            ss >> type;
            if (type == "list")
                throw UnsupportedProperty("list property on vertex element");
            Property p;
            p.type = type;
            p.byte_size = scalar_size(type);
            if (p.byte_size == 0) throw UnsupportedProperty("type " + type);
            ss >> p.name;
            props.push_back(p);
        }
    }
    if (!seen_vertex) throw MalformedHeader("no vertex element");

    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (std::size_t i = 0; i < props.size(); ++i) {
        const auto& p = props[i];
        const int idx = static_cast<int>(i);
        if (p.name == "x") ix = idx;
        else if (p.name == "y") iy = idx;
        else if (p.name == "z") iz = idx;
        else if (p.name == "red") ir = idx;
        else if (p.name == "green") ig = idx;
        else if (p.name == "blue") ib = idx;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw MalformedHeader("vertex lacks x/y/z");
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    if (has_color) cloud.colors.reserve(vertex_count);

    if (format == PlyFormat::Ascii) {
        std::istringstream body(
            std::string(data + body_off, bytes.size() - body_off));
        std::vector<double> row(props.size());
        for (std::size_t v = 0; v < vertex_count; ++v) {
            for (std::size_t i = 0; i < props.size(); ++i)
                if (!(body >> row[i]))
                    throw TruncatedPayload("ascii vertex " + std::to_string(v));
            cloud.points.push_back({static_cast<float>(row[ix]),
                                    static_cast<float>(row[iy]),
                                    static_cast<float>(row[iz])});
            if (has_color)
                cloud.colors.push_back({static_cast<std::uint8_t>(row[ir]),
                                        static_cast<std::uint8_t>(row[ig]),
                                        static_cast<std::uint8_t>(row[ib])});
        }
    } else {
        std::size_t stride = 0;
        std::vector<std::size_t> offsets(props.size());
        for (std::size_t i = 0; i < props.size(); ++i) {
            offsets[i] = stride;
            stride += props[i].byte_size;
        }
        if (body_off + stride * vertex_count > bytes.size())
            throw TruncatedPayload("binary vertex data");
        for (std::size_t v = 0; v < vertex_count; ++v) {
            const std::uint8_t* rec = bytes.data() + body_off + v * stride;
            const auto get = [&](int i) {
                return parse_binary_scalar(rec + offsets[i], props[i].type);
            };
            cloud.points.push_back({static_cast<float>(get(ix)),
                                    static_cast<float>(get(iy)),
                                    static_cast<float>(get(iz))});
            if (has_color)
                cloud.colors.push_back({static_cast<std::uint8_t>(get(ir)),
                                        static_cast<std::uint8_t>(get(ig)),
                                        static_cast<std::uint8_t>(get(ib))});
        }
    }
    return cloud;
}

PointCloud load_ply_file(const std::string& path) { return load_ply(read_file(path)); }

std::vector<std::uint8_t> write_ply(const PointCloud& cloud) {
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    header << "element vertex " << cloud.points.size() << "\n";
    header << "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_colors())
        header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    header << "end_header\n";

    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const auto& p = cloud.points[i];
        const std::size_t at = out.size();
        out.resize(at + 12 + (cloud.has_colors() ? 3 : 0));
        std::memcpy(out.data() + at, p.data(), 12);
        if (cloud.has_colors()) std::memcpy(out.data() + at + 12, cloud.colors[i].data(), 3);
    }
    return out;
}

void write_ply_file(const PointCloud& cloud, const std::string& path) {
    write_file(write_ply(cloud), path);
}

void load_descriptor_sidecar(PointCloud& cloud, const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "HFD1", 4) != 0)
        throw MalformedHeader("descriptor sidecar lacks HFD1 magic");
    const std::size_t record = 4 + kDescriptorDim;
    if ((bytes.size() - 4) % record != 0)
        throw TruncatedPayload("descriptor sidecar record boundary");
    const std::size_t n = (bytes.size() - 4) / record;

    cloud.descriptors.clear();
    cloud.descriptor_point.clear();
    cloud.descriptors.reserve(n * kDescriptorDim);
    cloud.descriptor_point.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + 4 + i * record;
        std::uint32_t point_id;
        std::memcpy(&point_id, rec, 4);
        if (point_id >= cloud.points.size())
            throw MalformedHeader("sidecar point id " + std::to_string(point_id) +
                                  " beyond vertex count");
        cloud.descriptor_point.push_back(point_id);
        for (std::size_t d = 0; d < kDescriptorDim; ++d)
            cloud.descriptors.push_back(dequantize_descriptor(rec[4 + d]));
    }
}

void load_descriptor_sidecar_file(PointCloud& cloud, const std::string& path) {
    load_descriptor_sidecar(cloud, read_file(path));
}

std::vector<std::uint8_t> write_descriptor_sidecar(const PointCloud& cloud) {
    std::vector<std::uint8_t> out = {'H', 'F', 'D', '1'};
    for (std::size_t i = 0; i < cloud.descriptor_count(); ++i) {
        const std::size_t at = out.size();
        out.resize(at + 4 + kDescriptorDim);
        std::memcpy(out.data() + at, &cloud.descriptor_point[i], 4);
        const float* d = cloud.descriptor(i);
        for (std::size_t c = 0; c < kDescriptorDim; ++c)
            out[at + 4 + c] = quantize_descriptor(d[c]);
    }
    return out;
}

void write_descriptor_sidecar_file(const PointCloud& cloud, const std::string& path) {
    write_file(write_descriptor_sidecar(cloud), path);
}

}  // namespace hyperfuse
