#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/image.hpp"

#include <filesystem>
#include <string>

namespace mvdrag {

/// Reads a binary little-endian splat PLY with the usual column names
/// (x, y, z, f_dc_*, f_rest_*, opacity, scale_*, rot_*; optional view_id).
/// Quaternions are renormalized. Positions are left in the file frame; call
/// normalize_to_unit_sphere() for pipeline use.
GaussianCloud load_gaussians(const std::filesystem::path& path);

/// Writes the same layout as load_gaussians() reads, float32 columns,
/// quaternions normalized. A `view_id` uchar column is added for tagged clouds.
void save_gaussians(const GaussianCloud& cloud, const std::filesystem::path& path);

/// 8-bit RGB PNG; values are clamped to [0,1] and rounded.
void write_png(const Rgb& rgb, int width, int height, const std::filesystem::path& path);
/// 8-bit grayscale PNG.
void write_png_gray(const Eigen::VectorXd& plane, int width, int height, const std::filesystem::path& path);
/// Reads RGB, RGBA or gray PNGs into [0,1] RGB.
Rgb read_png(const std::filesystem::path& path, int& width, int& height);
Eigen::VectorXd read_png_gray(const std::filesystem::path& path, int& width, int& height);

/// Encodes a PNG into memory (used by the HTTP service).
std::string encode_png(const Rgb& rgb, int width, int height);

/// float32 array in NPY v1.0 format: `\x93NUMPY` header + row-major data,
/// shape (height, width). Background depth is stored as +inf.
void write_npy(const Eigen::VectorXd& plane, int width, int height, const std::filesystem::path& path);
Eigen::VectorXd read_npy(const std::filesystem::path& path, int& width, int& height);
std::string encode_npy(const Eigen::VectorXd& plane, int width, int height);

/// View directory layout: view_{i}.png, depth_{i}.raw (NPY), alpha_{i}.png.
void save_views(const MultiViewImageSet& set, const std::filesystem::path& dir);
/// Loads what save_views wrote. Missing depth leaves the plane empty;
/// missing alpha is derived from finite depth when available.
MultiViewImageSet load_views(const std::filesystem::path& dir);

} // namespace mvdrag
