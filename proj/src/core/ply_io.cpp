#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace mvdrag {

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct PlyProperty {
    std::string name;
    PlyType type;
    std::size_t offset;
};

std::size_t type_size(PlyType t) {
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

PlyType parse_type(const std::string& s) {
    static const std::map<std::string, PlyType> kTypes = {
        {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
        {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
        {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
        {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
        {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
        {"float64", PlyType::Float64}};
    const auto it = kTypes.find(s);
    if (it == kTypes.end()) throw FormatError("unsupported PLY property type '" + s + "'");
    return it->second;
}

template <typename T>
T read_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double read_value(const char* p, PlyType t) {
    switch (t) {
    case PlyType::Int8: return read_le<std::int8_t>(p);
    case PlyType::UInt8: return read_le<std::uint8_t>(p);
    case PlyType::Int16: return read_le<std::int16_t>(p);
    case PlyType::UInt16: return read_le<std::uint16_t>(p);
    case PlyType::Int32: return read_le<std::int32_t>(p);
    case PlyType::UInt32: return read_le<std::uint32_t>(p);
    case PlyType::Float32: return read_le<float>(p);
    case PlyType::Float64: return read_le<double>(p);
    }
    return 0.0;
}

int degree_from_rest_count(std::size_t rest) {
    for (int d = 0; d <= kMaxShDegree; ++d) {
        if (rest == static_cast<std::size_t>(3 * (sh_coeff_count(d) - 1))) return d;
    }
    throw FormatError("f_rest column count " + std::to_string(rest) + " does not match an SH degree <= 3");
}

} // namespace

GaussianCloud load_gaussians(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open gaussian file " + path.string());

    std::string line;
    std::getline(in, line);
    if (line != "ply") throw FormatError(path.string() + " is not a PLY file");

    Eigen::Index count = -1;
    bool in_vertex = false;
    bool seen_other = false;
    std::vector<PlyProperty> props;
    std::size_t stride = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "end_header") break;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "binary_little_endian") throw FormatError("only binary_little_endian PLY is supported, got " + fmt);
        } else if (tag == "element") {
            std::string name;
            long long n = 0;
            ss >> name >> n;
            if (name == "vertex") {
                if (seen_other) throw FormatError("the vertex element must come first");
                in_vertex = true;
                count = static_cast<Eigen::Index>(n);
            } else {
                in_vertex = false;
                seen_other = true;
            }
        } else if (tag == "property" && in_vertex) {
            std::string type, name;
            ss >> type;
            if (type == "list") throw FormatError("list properties are not supported in the vertex element");
            ss >> name;
            const PlyType t = parse_type(type);
            props.push_back({name, t, stride});
            stride += type_size(t);
        }
    }
    if (count < 0) throw FormatError("PLY has no vertex element");

    std::map<std::string, const PlyProperty*> by_name;
    for (const auto& p : props) by_name[p.name] = &p;
    auto require = [&](const std::string& name) -> const PlyProperty& {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("PLY is missing property '" + name + "'");
        return *it->second;
    };

    std::size_t rest = 0;
    while (by_name.count("f_rest_" + std::to_string(rest))) ++rest;
    const int degree = degree_from_rest_count(rest);
    const int k = sh_coeff_count(degree);

    const PlyProperty* pos[3] = {&require("x"), &require("y"), &require("z")};
    const PlyProperty* dc[3] = {&require("f_dc_0"), &require("f_dc_1"), &require("f_dc_2")};
    const PlyProperty& opacity = require("opacity");
    const PlyProperty* scale[3] = {&require("scale_0"), &require("scale_1"), &require("scale_2")};
    const PlyProperty* rot[4] = {&require("rot_0"), &require("rot_1"), &require("rot_2"), &require("rot_3")};
    std::vector<const PlyProperty*> rest_props;
    for (std::size_t r = 0; r < rest; ++r) rest_props.push_back(&require("f_rest_" + std::to_string(r)));
    const auto view_it = by_name.find("view_id");

    std::vector<char> buffer(static_cast<std::size_t>(count) * stride);
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size())) throw FormatError("PLY body is truncated");

    GaussianCloud cloud(count, degree);
    if (view_it != by_name.end()) cloud.view_ids.resize(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        const char* row = buffer.data() + static_cast<std::size_t>(i) * stride;
        auto value = [&](const PlyProperty& p) { return read_value(row + p.offset, p.type); };
        for (int a = 0; a < 3; ++a) {
            cloud.positions(i, a) = value(*pos[a]);
            cloud.log_scales(i, a) = value(*scale[a]);
            cloud.sh(i, a) = value(*dc[a]);
        }
        for (int a = 0; a < 4; ++a) cloud.rotations(i, a) = value(*rot[a]);
        cloud.opacity_logits(i) = value(opacity);
        // f_rest is channel-major: all red coefficients, then green, then blue.
        for (int c = 0; c < 3; ++c) {
            for (int j = 1; j < k; ++j) {
                cloud.sh(i, j * 3 + c) = value(*rest_props[static_cast<std::size_t>(c * (k - 1) + j - 1)]);
            }
        }
        if (view_it != by_name.end()) cloud.view_ids[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(value(*view_it->second));
    }
    validate(cloud);
    normalize_rotations(cloud);
    return cloud;
}

void save_gaussians(const GaussianCloud& cloud, const std::filesystem::path& path) {
    validate(cloud);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write gaussian file " + path.string());

    const int k = cloud.coeffs_per_channel();
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size() << '\n';
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
        header << "property float " << name << '\n';
    }
    for (int r = 0; r < 3 * (k - 1); ++r) header << "property float f_rest_" << r << '\n';
    header << "property float opacity\n";
    for (int a = 0; a < 3; ++a) header << "property float scale_" << a << '\n';
    for (int a = 0; a < 4; ++a) header << "property float rot_" << a << '\n';
    if (cloud.tagged()) header << "property uchar view_id\n";
    header << "end_header\n";
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));

    std::vector<char> row;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        row.clear();
        auto put = [&](double v) {
            const float f = static_cast<float>(v);
            const char* p = reinterpret_cast<const char*>(&f);
            row.insert(row.end(), p, p + sizeof(float));
        };
        for (int a = 0; a < 3; ++a) put(cloud.positions(i, a));
        for (int a = 0; a < 3; ++a) put(0.0);
        for (int a = 0; a < 3; ++a) put(cloud.sh(i, a));
        for (int c = 0; c < 3; ++c) {
            for (int j = 1; j < k; ++j) put(cloud.sh(i, j * 3 + c));
        }
        put(cloud.opacity_logits(i));
        for (int a = 0; a < 3; ++a) put(cloud.log_scales(i, a));
        const Eigen::Vector4d q = cloud.rotations.row(i).transpose().normalized();
        for (int a = 0; a < 4; ++a) put(q(a));
        if (cloud.tagged()) row.push_back(static_cast<char>(cloud.view_ids[static_cast<std::size_t>(i)]));
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("failed while writing " + path.string());
}

} // namespace mvdrag
