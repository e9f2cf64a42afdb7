#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "image.hpp"

namespace dna {

// Additive white Gaussian degradation y = x + eps, eps ~ N(0, sigma^2 I).
// sigma is given on the 8-bit scale (the conventional sigma = 15/25/50), so
// the effective standard deviation on [0,1] images is sigma_8bit/255.
struct NoiseSpec {
    double sigma_8bit = 25.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Seeded Box-Muller noise over SplitMix64. Not clipped by default: the
// additive model keeps y - x exactly Gaussian. Pass clip=true to clamp the
// result to [0,1].
Image add_gaussian_noise(const Image& x, const NoiseSpec& spec,
                         bool clip = false);

Image clip01(const Image& x);

// 10*log10(peak^2 / MSE) in dB, MSE over all channels and pixels. Identical
// images return +infinity (the sentinel for "no error").
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Explicit-prior baseline: gradient descent on
//   ||x - y||^2 + lambda * sum sqrt(dx^2 + dy^2 + gamma^2)
// for exactly `steps` fixed-size steps. The objective must not increase by
// more than 1e-9 per step; a larger increase aborts with a step-size error.
// `on_step` (when set) receives (step, objective, fidelity, weighted TV)
// after every update, step 0 being the state before the first one.
using TvStepObserver = std::function<void(int, double, double, double)>;
Image tv_denoise_classical(const Image& y, double lambda, int steps,
                           double step_size, double gamma = 1e-2,
                           const TvStepObserver& on_step = {});

enum class PhantomKind { Flat, Step, Circles, Ramp };

PhantomKind phantom_kind_from_string(const std::string& name);
const char* to_string(PhantomKind kind);

// Deterministic analytic test images in [0,1], identical across channels.
//   flat    constant 0.5
//   step    left half 0.25, right half 0.75
//   circles three disks on a 0.2 background
//   ramp    horizontal ramp j/(W-1)
Image make_phantom(PhantomKind kind, int height, int width, int channels);

} // namespace dna
