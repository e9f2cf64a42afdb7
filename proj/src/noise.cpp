#include "noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "losses.hpp"
#include "rng.hpp"

namespace dna {

void NoiseSpec::validate() const {
    if (!(sigma_8bit > 0.0))
        throw ConfigError("noise: sigma must be > 0");
}

Image add_gaussian_noise(const Image& x, const NoiseSpec& spec, bool clip) {
    spec.validate();
    SplitMix64 rng(spec.seed);
    const double sigma = spec.sigma_8bit / 255.0;
    Image y = x;
    for (double& v : y.data)
        v += sigma * rng.next_gaussian();
    if (clip)
        for (double& v : y.data)
            v = std::clamp(v, 0.0, 1.0);
    return y;
}

Image clip01(const Image& x) {
    Image y = x;
    for (double& v : y.data)
        v = std::clamp(v, 0.0, 1.0);
    return y;
}

double psnr(const Image& a, const Image& b, double peak) {
    require_same_shape(a, b, "psnr");
    if (!(peak > 0.0))
        throw ConfigError("psnr: peak must be > 0");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

struct TvObjective {
    double fidelity = 0.0;
    double weighted_tv = 0.0;
    double total() const { return fidelity + weighted_tv; }
};

TvObjective tv_objective(const Image& x, const Image& y, double lambda,
                         double gamma) {
    TvObjective o;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data[i] - y.data[i];
        o.fidelity += d * d;
    }
    o.weighted_tv = lambda * smoothed_tv_value(x, gamma);
    return o;
}

} // namespace

Image tv_denoise_classical(const Image& y, double lambda, int steps,
                           double step_size, double gamma,
                           const TvStepObserver& on_step) {
    if (!(lambda > 0.0))
        throw ConfigError("tv_denoise_classical: lambda must be > 0");
    if (steps < 1)
        throw ConfigError("tv_denoise_classical: steps must be >= 1");
    if (!(step_size > 0.0))
        throw ConfigError("tv_denoise_classical: step_size must be > 0");
    if (!(gamma > 0.0))
        throw ConfigError("tv_denoise_classical: gamma must be > 0");

    Image x = y;
    TvObjective obj = tv_objective(x, y, lambda, gamma);
    if (on_step)
        on_step(0, obj.total(), obj.fidelity, obj.weighted_tv);
    for (int s = 1; s <= steps; ++s) {
        std::vector<double> g = smoothed_tv_grad(x, gamma);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double full = 2.0 * (x.data[i] - y.data[i]) + lambda * g[i];
            x.data[i] -= step_size * full;
        }
        const TvObjective next = tv_objective(x, y, lambda, gamma);
        if (next.total() > obj.total() + 1e-9)
            throw ConfigError(
                "tv_denoise_classical: objective increased at step " +
                std::to_string(s) + " (" + std::to_string(obj.total()) +
                " -> " + std::to_string(next.total()) + "); reduce step_size");
        obj = next;
        if (on_step)
            on_step(s, obj.total(), obj.fidelity, obj.weighted_tv);
    }
    return x;
}

PhantomKind phantom_kind_from_string(const std::string& name) {
    if (name == "flat")
        return PhantomKind::Flat;
    if (name == "step")
        return PhantomKind::Step;
    if (name == "circles")
        return PhantomKind::Circles;
    if (name == "ramp")
        return PhantomKind::Ramp;
    throw ConfigError("unknown phantom kind '" + name +
                      "' (expected flat, step, circles or ramp)");
}

const char* to_string(PhantomKind kind) {
    switch (kind) {
    case PhantomKind::Flat:
        return "flat";
    case PhantomKind::Step:
        return "step";
    case PhantomKind::Circles:
        return "circles";
    case PhantomKind::Ramp:
        return "ramp";
    }
    return "?";
}

Image make_phantom(PhantomKind kind, int height, int width, int channels) {
    Image img(channels, height, width);
    auto fill_channel0 = [&](auto&& f) {
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j)
                img.at(0, i, j) = f(i, j);
    };
    switch (kind) {
    case PhantomKind::Flat:
        fill_channel0([](int, int) { return 0.5; });
        break;
    case PhantomKind::Step:
        fill_channel0(
            [width](int, int j) { return j < width / 2 ? 0.25 : 0.75; });
        break;
    case PhantomKind::Ramp:
        fill_channel0([width](int, int j) {
            return width > 1 ? static_cast<double>(j) / (width - 1) : 0.5;
        });
        break;
    case PhantomKind::Circles: {
        struct Disk {
            double cy, cx, r, value;
        };
        const double m = std::min(height, width);
        const Disk disks[] = {{0.35 * height, 0.30 * width, 0.18 * m, 0.85},
                              {0.40 * height, 0.70 * width, 0.12 * m, 0.60},
                              {0.72 * height, 0.50 * width, 0.20 * m, 0.45}};
        fill_channel0([&](int i, int j) {
            double v = 0.2;
            for (const Disk& d : disks) {
                const double dy = i + 0.5 - d.cy;
                const double dx = j + 0.5 - d.cx;
                if (dy * dy + dx * dx <= d.r * d.r)
                    v = d.value;
            }
            return v;
        });
        break;
    }
    }
    for (int c = 1; c < channels; ++c)
        std::copy(img.data.begin(), img.data.begin() + img.plane(),
                  img.data.begin() + c * img.plane());
    return img;
}

} // namespace dna
