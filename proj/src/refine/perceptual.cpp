#include "mvdrag/refine/perceptual.hpp"

#include "mvdrag/core/errors.hpp"

namespace mvdrag {

double L2Loss::loss(const ViewImage& image, const ViewImage& reference, Rgb* grad) const {
    if (image.rgb.rows() != reference.rgb.rows()) throw ValidationError("images differ in size");
    const Rgb diff = image.rgb - reference.rgb;
    const double n = static_cast<double>(diff.size());
    if (grad) *grad = (2.0 / n) * diff;
    return diff.squaredNorm() / n;
}

std::unique_ptr<PerceptualLoss> make_perceptual_loss(const std::string& name) {
    if (name == "l2") return std::make_unique<L2Loss>();
    throw ValidationError("unknown perceptual loss '" + name + "'; this build provides 'l2'");
}

} // namespace mvdrag
