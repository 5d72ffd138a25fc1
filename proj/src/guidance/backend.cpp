#include "mvdrag/guidance/backend.hpp"

#include "mvdrag/core/errors.hpp"

#include <map>
#include <mutex>

namespace mvdrag {

FeatureSet zeros_like(const FeatureSet& features) {
    FeatureSet out = features;
    for (auto& layer : out) layer.data.setZero();
    return out;
}

LatentStack IdentityCodec::encode(const MultiViewImageSet& images) const {
    validate(images);
    LatentStack z(images.height(), images.width(), 3);
    for (int v = 0; v < kNumViews; ++v) z.view(v) = images.views[static_cast<std::size_t>(v)].rgb;
    return z;
}

MultiViewImageSet IdentityCodec::decode(const LatentStack& latents) const {
    if (latents.channels != 3) throw ValidationError("identity codec expects 3-channel latents");
    MultiViewImageSet out;
    for (int v = 0; v < kNumViews; ++v) {
        auto& view = out.views[static_cast<std::size_t>(v)];
        view.width = latents.width;
        view.height = latents.height;
        view.rgb = latents.view(v);
    }
    return out;
}

std::array<Rgb, kNumViews> IdentityCodec::encode_vjp(const MultiViewImageSet&, const LatentStack& grad) const {
    std::array<Rgb, kNumViews> out;
    for (int v = 0; v < kNumViews; ++v) out[static_cast<std::size_t>(v)] = grad.view(v);
    return out;
}

DenoiserOutput predict_with_cfg(const DenoiserBackend& backend, const LatentStack& z, int t, const Condition& y,
                                double cfg_scale) {
    DenoiserOutput cond = backend.predict(z, t, y);
    if (y.empty() || cfg_scale == 1.0) return cond;
    Condition uncond;
    uncond.poses = y.poses;
    const DenoiserOutput un = backend.predict(z, t, uncond);
    cond.epsilon.data = un.epsilon.data + cfg_scale * (cond.epsilon.data - un.epsilon.data);
    return cond;
}

namespace {

struct Registry {
    std::mutex mutex;
    std::map<std::string, DenoiserFactory> factories;
};

Registry& registry() {
    static Registry r;
    return r;
}

} // namespace

void register_denoiser_adapter(const std::string& name, DenoiserFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[name] = std::move(factory);
}

std::unique_ptr<DenoiserBackend> make_denoiser_adapter(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    DenoiserFactory factory;
    {
        auto& r = registry();
        std::lock_guard lock(r.mutex);
        const auto it = r.factories.find(name);
        if (it == r.factories.end()) {
            throw ValidationError("no denoiser adapter named '" + name + "' is registered in this build");
        }
        factory = it->second;
    }
    return factory(args);
}

std::vector<std::string> registered_denoiser_adapters() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [name, _] : r.factories) names.push_back(name);
    return names;
}

} // namespace mvdrag
