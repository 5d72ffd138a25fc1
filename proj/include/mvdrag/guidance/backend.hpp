#pragma once

#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/guidance/schedule.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvdrag {

/// What the denoiser is conditioned on. `text` is an opaque token forwarded
/// to the backend; `image` is the reference view for image-conditioned
/// models; `poses` are the cameras of the four latent views.
struct Condition {
    std::string text;
    std::optional<ViewImage> image;
    std::vector<Camera> poses;

    bool empty() const { return text.empty() && !image.has_value(); }
};

/// One decoder feature layer over all four views: (4 h w) x channels, rows
/// ordered like LatentStack. `stride` is measured in image pixels.
struct FeatureMap {
    int stride = 1;
    int height = 0;
    int width = 0;
    Eigen::MatrixXd data;

    Eigen::Index cells_per_view() const { return Eigen::Index(height) * width; }
    auto view(int v) { return data.middleRows(v * cells_per_view(), cells_per_view()); }
    auto view(int v) const { return data.middleRows(v * cells_per_view(), cells_per_view()); }
};

using FeatureSet = std::vector<FeatureMap>;

/// Zero-filled set with the same layer shapes.
FeatureSet zeros_like(const FeatureSet& features);

struct DenoiserOutput {
    LatentStack epsilon;
    FeatureSet features;
};

/// Maps between image sets and latent stacks.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;
    virtual LatentStack encode(const MultiViewImageSet& images) const = 0;
    virtual MultiViewImageSet decode(const LatentStack& latents) const = 0;
    /// dL/d(rgb) given dL/d(latent) for the encoding of `images`.
    virtual std::array<Rgb, kNumViews> encode_vjp(const MultiViewImageSet& images, const LatentStack& grad) const = 0;
    /// Image pixels per latent cell along each axis.
    virtual int stride() const = 0;
};

/// Latent = RGB, one cell per pixel.
class IdentityCodec final : public LatentCodec {
public:
    LatentStack encode(const MultiViewImageSet& images) const override;
    MultiViewImageSet decode(const LatentStack& latents) const override;
    std::array<Rgb, kNumViews> encode_vjp(const MultiViewImageSet& images, const LatentStack& grad) const override;
    int stride() const override { return 1; }
};

/// A multi-view noise-prediction model over four-view latent stacks.
class DenoiserBackend {
public:
    virtual ~DenoiserBackend() = default;

    virtual const NoiseSchedule& schedule() const = 0;
    virtual const LatentCodec& codec() const = 0;
    /// Image-pixel strides of the feature layers returned by predict().
    virtual std::vector<int> feature_strides() const = 0;

    /// Noise prediction for z at timestep t plus per-layer decoder features.
    virtual DenoiserOutput predict(const LatentStack& z, int t, const Condition& y) const = 0;

    /// Pulls a gradient on predict(z, t, y).features back to z.
    virtual LatentStack feature_vjp(const LatentStack& z, int t, const Condition& y, const FeatureSet& grad) const = 0;
};

/// Classifier-free guidance: eps_u + scale (eps_c - eps_u). With an empty
/// condition or scale 1 a single conditional evaluation is made. Features
/// come from the conditional branch.
DenoiserOutput predict_with_cfg(const DenoiserBackend& backend, const LatentStack& z, int t, const Condition& y,
                                double cfg_scale);

/// Factories for out-of-tree model adapters, addressed as "adapter:<name>[:args]".
using DenoiserFactory = std::function<std::unique_ptr<DenoiserBackend>(const std::string& args)>;

void register_denoiser_adapter(const std::string& name, DenoiserFactory factory);
/// Throws ValidationError for unknown adapter names.
std::unique_ptr<DenoiserBackend> make_denoiser_adapter(const std::string& spec);
std::vector<std::string> registered_denoiser_adapters();

} // namespace mvdrag
