#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <regex>
#include <vector>

namespace mvdrag {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

std::vector<std::uint8_t> pack_rgb(const Rgb& rgb) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(rgb.rows()) * 3);
    for (Eigen::Index i = 0; i < rgb.rows(); ++i) {
        for (int c = 0; c < 3; ++c) bytes[static_cast<std::size_t>(i * 3 + c)] = to_byte(rgb(i, c));
    }
    return bytes;
}

png_image make_image(int width, int height, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    return image;
}

void write_png_bytes(const std::vector<std::uint8_t>& bytes, int width, int height, png_uint_32 format,
                     const fs::path& path) {
    png_image image = make_image(width, height, format);
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
        throw std::runtime_error("png write failed for " + path.string() + ": " + image.message);
    }
}

std::vector<std::uint8_t> read_png_bytes(const fs::path& path, png_uint_32 format, int& width, int& height) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw FormatError("cannot read png " + path.string() + ": " + image.message);
    }
    image.format = format;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        throw FormatError("cannot decode png " + path.string() + ": " + image.message);
    }
    width = static_cast<int>(image.width);
    height = static_cast<int>(image.height);
    return bytes;
}

std::string npy_header(int width, int height) {
    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + std::to_string(height) + ", " +
                       std::to_string(width) + "), }";
    // magic(6) + version(2) + header length(2) + dict, padded with spaces and a
    // trailing newline to a multiple of 64 bytes.
    const std::size_t unpadded = 10 + dict.size() + 1;
    dict.append((64 - unpadded % 64) % 64, ' ');
    dict.push_back('\n');
    std::string out("\x93NUMPY\x01\x00", 8);
    out.push_back(static_cast<char>(dict.size() & 0xff));
    out.push_back(static_cast<char>((dict.size() >> 8) & 0xff));
    return out + dict;
}

} // namespace

void write_png(const Rgb& rgb, int width, int height, const fs::path& path) {
    if (rgb.rows() != Eigen::Index(width) * height) throw ValidationError("png size mismatch");
    write_png_bytes(pack_rgb(rgb), width, height, PNG_FORMAT_RGB, path);
}

void write_png_gray(const Eigen::VectorXd& plane, int width, int height, const fs::path& path) {
    if (plane.size() != Eigen::Index(width) * height) throw ValidationError("png size mismatch");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(plane.size()));
    for (Eigen::Index i = 0; i < plane.size(); ++i) bytes[static_cast<std::size_t>(i)] = to_byte(plane(i));
    write_png_bytes(bytes, width, height, PNG_FORMAT_GRAY, path);
}

std::string encode_png(const Rgb& rgb, int width, int height) {
    const auto bytes = pack_rgb(rgb);
    png_image image = make_image(width, height, PNG_FORMAT_RGB);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

Rgb read_png(const fs::path& path, int& width, int& height) {
    const auto bytes = read_png_bytes(path, PNG_FORMAT_RGB, width, height);
    Rgb rgb(Eigen::Index(width) * height, 3);
    for (Eigen::Index i = 0; i < rgb.rows(); ++i) {
        for (int c = 0; c < 3; ++c) rgb(i, c) = bytes[static_cast<std::size_t>(i * 3 + c)] / 255.0;
    }
    return rgb;
}

Eigen::VectorXd read_png_gray(const fs::path& path, int& width, int& height) {
    const auto bytes = read_png_bytes(path, PNG_FORMAT_GRAY, width, height);
    Eigen::VectorXd plane(Eigen::Index(width) * height);
    for (Eigen::Index i = 0; i < plane.size(); ++i) plane(i) = bytes[static_cast<std::size_t>(i)] / 255.0;
    return plane;
}

std::string encode_npy(const Eigen::VectorXd& plane, int width, int height) {
    if (plane.size() != Eigen::Index(width) * height) throw ValidationError("npy size mismatch");
    std::string out = npy_header(width, height);
    const Eigen::VectorXf f = plane.cast<float>();
    out.append(reinterpret_cast<const char*>(f.data()), static_cast<std::size_t>(f.size()) * sizeof(float));
    return out;
}

void write_npy(const Eigen::VectorXd& plane, int width, int height, const fs::path& path) {
    const std::string bytes = encode_npy(plane, width, height);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Eigen::VectorXd read_npy(const fs::path& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[10];
    in.read(magic, 10);
    if (in.gcount() != 10 || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw FormatError(path.string() + " is not an NPY file");
    const std::size_t header_len =
        static_cast<std::uint8_t>(magic[8]) | (static_cast<std::size_t>(static_cast<std::uint8_t>(magic[9])) << 8);
    std::string dict(header_len, '\0');
    in.read(dict.data(), static_cast<std::streamsize>(header_len));
    if (dict.find("'<f4'") == std::string::npos) throw FormatError(path.string() + ": only little-endian float32 is supported");
    if (dict.find("'fortran_order': False") == std::string::npos) throw FormatError(path.string() + ": fortran order not supported");
    std::smatch m;
    static const std::regex shape_re(R"('shape':\s*\((\d+),\s*(\d+)\))");
    if (!std::regex_search(dict, m, shape_re)) throw FormatError(path.string() + ": expected a 2-D shape");
    height = std::stoi(m[1]);
    width = std::stoi(m[2]);
    Eigen::VectorXf f(Eigen::Index(width) * height);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(f.size() * sizeof(float))) throw FormatError(path.string() + ": truncated data");
    return f.cast<double>();
}

void save_views(const MultiViewImageSet& set, const fs::path& dir) {
    validate(set);
    fs::create_directories(dir);
    for (int i = 0; i < kNumViews; ++i) {
        const auto& v = set.views[static_cast<std::size_t>(i)];
        const std::string s = std::to_string(i);
        write_png(v.rgb, v.width, v.height, dir / ("view_" + s + ".png"));
        if (v.has_depth()) write_npy(v.depth, v.width, v.height, dir / ("depth_" + s + ".raw"));
        if (v.has_alpha()) write_png_gray(v.alpha, v.width, v.height, dir / ("alpha_" + s + ".png"));
    }
}

MultiViewImageSet load_views(const fs::path& dir) {
    MultiViewImageSet set;
    for (int i = 0; i < kNumViews; ++i) {
        auto& v = set.views[static_cast<std::size_t>(i)];
        const std::string s = std::to_string(i);
        const fs::path png = dir / ("view_" + s + ".png");
        if (!fs::exists(png)) throw ValidationError("view directory " + dir.string() + " is missing " + png.filename().string());
        v.rgb = read_png(png, v.width, v.height);
        const fs::path depth = dir / ("depth_" + s + ".raw");
        if (fs::exists(depth)) {
            int w = 0, h = 0;
            v.depth = read_npy(depth, w, h);
            if (w != v.width || h != v.height) throw ValidationError("depth map size differs from " + png.string());
        }
        const fs::path alpha = dir / ("alpha_" + s + ".png");
        if (fs::exists(alpha)) {
            int w = 0, h = 0;
            v.alpha = read_png_gray(alpha, w, h);
            if (w != v.width || h != v.height) throw ValidationError("alpha map size differs from " + png.string());
        } else if (v.has_depth()) {
            v.alpha = v.depth.unaryExpr([](double z) { return std::isfinite(z) ? 1.0 : 0.0; });
        }
    }
    validate(set);
    return set;
}

} // namespace mvdrag
