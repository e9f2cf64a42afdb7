#pragma once

#include <vector>

#include "image.hpp"

namespace dna {

// Unnormalised 2-D DFT of a real image, one transform per channel, same
// [C,H,W] layout as Image. The inverse carries the 1/(H*W) factor so
// ifft2(fft2(x)) == x. Under this convention Parseval reads
// ||F(x)||^2 = H*W*||x||^2.
struct ComplexSpectrum {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> re;
    std::vector<double> im;

    ComplexSpectrum() = default;
    ComplexSpectrum(int c, int h, int w)
        : channels(c), height(h), width(w),
          re(static_cast<std::size_t>(c) * h * w, 0.0),
          im(static_cast<std::size_t>(c) * h * w, 0.0) {}

    std::size_t size() const { return re.size(); }
};

// Direct O((H*W)^2) evaluation of X(u,v) = sum x(h,w) e^{-2pi i(uh/H + vw/W)}.
// Deliberately naive; this is the oracle fft2 is tested against.
ComplexSpectrum dft2_reference(const Image& x);

// Row-column transform; radix-2 Cooley-Tukey along any power-of-two axis,
// direct 1-D DFT along the rest. No padding: arbitrary sizes are transformed
// exactly.
ComplexSpectrum fft2(const Image& x);

// Inverse transform with 1/(H*W) normalisation; returns the real part.
Image ifft2(const ComplexSpectrum& X);

// Sum of squared complex moduli over every channel and frequency.
double spectrum_energy(const ComplexSpectrum& X);

// ||F(a) - F(b)||^2 summed over channels. Gradient w.r.t. `a` is
// 2*H*W*(a - b) by Parseval; the differentiable wrapper lives in losses.
double spectral_sq_distance(const Image& a, const Image& b);

} // namespace dna
