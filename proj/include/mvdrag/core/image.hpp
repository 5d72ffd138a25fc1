#pragma once

#include "mvdrag/core/dragset.hpp"

#include <Eigen/Core>

#include <array>
#include <limits>

namespace mvdrag {

using Rgb = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// One rendered view. Pixel (x, y) lives at row y * width + x of every plane.
///
/// depth is camera-space z (+inf where nothing was hit); alpha is the
/// accumulated opacity in [0,1].
struct ViewImage {
    int width = 0;
    int height = 0;
    Rgb rgb;
    Eigen::VectorXd depth;
    Eigen::VectorXd alpha;

    ViewImage() = default;
    ViewImage(int w, int h, double background)
        : width(w), height(h), rgb(Rgb::Constant(Eigen::Index(w) * h, 3, background)),
          depth(Eigen::VectorXd::Constant(Eigen::Index(w) * h, std::numeric_limits<double>::infinity())),
          alpha(Eigen::VectorXd::Zero(Eigen::Index(w) * h)) {}

    Eigen::Index pixels() const { return Eigen::Index(width) * height; }
    Eigen::Index index(int x, int y) const { return Eigen::Index(y) * width + x; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    bool has_depth() const { return depth.size() == pixels(); }
    bool has_alpha() const { return alpha.size() == pixels(); }
};

using RenderOutput = ViewImage;

/// Four views in azimuth order 0, 90, 180, 270 degrees.
struct MultiViewImageSet {
    std::array<ViewImage, kNumViews> views;

    int width() const { return views[0].width; }
    int height() const { return views[0].height; }
    ViewImage& operator[](std::size_t i) { return views[i]; }
    const ViewImage& operator[](std::size_t i) const { return views[i]; }
};

/// Throws ValidationError unless all four views share a non-empty resolution
/// and carry an rgb plane of matching size.
void validate(const MultiViewImageSet& set);

/// Copy of `base` whose rgb planes are replaced by `colors` (depth/alpha kept).
MultiViewImageSet with_colors(const MultiViewImageSet& base, const MultiViewImageSet& colors);

/// Multi-view latent tensor of shape 4 x H x W x C stored as a (4HW) x C
/// matrix; row (v * H + y) * W + x holds the channels of view v at (x, y).
struct LatentStack {
    int height = 0;
    int width = 0;
    int channels = 0;
    int timestep = 0;
    Eigen::MatrixXd data;

    LatentStack() = default;
    LatentStack(int h, int w, int c) : height(h), width(w), channels(c), data(Eigen::MatrixXd::Zero(Eigen::Index(kNumViews) * h * w, c)) {}

    Eigen::Index cells_per_view() const { return Eigen::Index(height) * width; }
    auto view(int v) { return data.middleRows(v * cells_per_view(), cells_per_view()); }
    auto view(int v) const { return data.middleRows(v * cells_per_view(), cells_per_view()); }
    bool same_shape(const LatentStack& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

} // namespace mvdrag
