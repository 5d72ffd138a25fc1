#pragma once

#include "mvdrag/core/image.hpp"

#include <memory>
#include <string>

namespace mvdrag {

/// Image distance, differentiable in its first argument.
class PerceptualLoss {
public:
    virtual ~PerceptualLoss() = default;
    /// Loss of `image` against `reference`; fills dL/d(image.rgb) when requested.
    virtual double loss(const ViewImage& image, const ViewImage& reference, Rgb* grad = nullptr) const = 0;
};

/// Mean squared RGB difference.
class L2Loss final : public PerceptualLoss {
public:
    double loss(const ViewImage& image, const ViewImage& reference, Rgb* grad = nullptr) const override;
};

/// Loss by name; only "l2" is built in. Throws ValidationError otherwise.
std::unique_ptr<PerceptualLoss> make_perceptual_loss(const std::string& name);

} // namespace mvdrag
