#include "fft.hpp"

#include <cmath>
#include <cstdint>

namespace dna {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey, length must be a power of two.
// sign = -1 for the forward transform, +1 for the inverse (unscaled).
void fft_radix2(std::vector<double>& re, std::vector<double>& im, int sign) {
    const int n = static_cast<int>(re.size());
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const double base = sign * kTwoPi / len;
        for (int j = 0; j < half; ++j) {
            const double wr = std::cos(base * j);
            const double wi = std::sin(base * j);
            for (int i = j; i < n; i += len) {
                const int m = i + half;
                const double tr = re[m] * wr - im[m] * wi;
                const double ti = re[m] * wi + im[m] * wr;
                re[m] = re[i] - tr;
                im[m] = im[i] - ti;
                re[i] += tr;
                im[i] += ti;
            }
        }
    }
}

// Direct 1-D DFT for sizes the radix-2 path cannot take.
void dft_direct(std::vector<double>& re, std::vector<double>& im, int sign) {
    const int n = static_cast<int>(re.size());
    std::vector<double> or_(n), oi(n);
    for (int k = 0; k < n; ++k) {
        double ar = 0.0, ai = 0.0;
        for (int t = 0; t < n; ++t) {
            const std::int64_t m = (static_cast<std::int64_t>(k) * t) % n;
            const double ang = sign * kTwoPi * static_cast<double>(m) / n;
            const double c = std::cos(ang);
            const double s = std::sin(ang);
            ar += re[t] * c - im[t] * s;
            ai += re[t] * s + im[t] * c;
        }
        or_[k] = ar;
        oi[k] = ai;
    }
    re.swap(or_);
    im.swap(oi);
}

void transform_1d(std::vector<double>& re, std::vector<double>& im, int sign) {
    if (is_pow2(static_cast<int>(re.size())))
        fft_radix2(re, im, sign);
    else
        dft_direct(re, im, sign);
}

// Row-column 2-D transform of one channel held in spectrum arrays.
void transform_channel(double* re, double* im, int h, int w, int sign) {
    std::vector<double> br(w), bi(w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            br[j] = re[i * w + j];
            bi[j] = im[i * w + j];
        }
        transform_1d(br, bi, sign);
        for (int j = 0; j < w; ++j) {
            re[i * w + j] = br[j];
            im[i * w + j] = bi[j];
        }
    }
    br.assign(h, 0.0);
    bi.assign(h, 0.0);
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) {
            br[i] = re[i * w + j];
            bi[i] = im[i * w + j];
        }
        transform_1d(br, bi, sign);
        for (int i = 0; i < h; ++i) {
            re[i * w + j] = br[i];
            im[i * w + j] = bi[i];
        }
    }
}

} // namespace

ComplexSpectrum dft2_reference(const Image& x) {
    const int h = x.height, w = x.width;
    ComplexSpectrum X(x.channels, h, w);
    for (int c = 0; c < x.channels; ++c) {
        const double* in = x.data.data() + c * x.plane();
        double* re = X.re.data() + c * x.plane();
        double* im = X.im.data() + c * x.plane();
        for (int u = 0; u < h; ++u) {
            for (int v = 0; v < w; ++v) {
                double ar = 0.0, ai = 0.0;
                for (int hh = 0; hh < h; ++hh) {
                    const std::int64_t mu =
                        (static_cast<std::int64_t>(u) * hh) % h;
                    for (int ww = 0; ww < w; ++ww) {
                        const std::int64_t mv =
                            (static_cast<std::int64_t>(v) * ww) % w;
                        const double ang =
                            -kTwoPi * (static_cast<double>(mu) / h +
                                       static_cast<double>(mv) / w);
                        ar += in[hh * w + ww] * std::cos(ang);
                        ai += in[hh * w + ww] * std::sin(ang);
                    }
                }
                re[u * w + v] = ar;
                im[u * w + v] = ai;
            }
        }
    }
    return X;
}

ComplexSpectrum fft2(const Image& x) {
    ComplexSpectrum X(x.channels, x.height, x.width);
    std::copy(x.data.begin(), x.data.end(), X.re.begin());
    for (int c = 0; c < x.channels; ++c)
        transform_channel(X.re.data() + c * x.plane(),
                          X.im.data() + c * x.plane(), x.height, x.width, -1);
    return X;
}

Image ifft2(const ComplexSpectrum& X) {
    Image out(X.channels, X.height, X.width);
    ComplexSpectrum tmp = X;
    const std::size_t plane =
        static_cast<std::size_t>(X.height) * X.width;
    const double norm = 1.0 / (static_cast<double>(X.height) * X.width);
    for (int c = 0; c < X.channels; ++c) {
        transform_channel(tmp.re.data() + c * plane, tmp.im.data() + c * plane,
                          X.height, X.width, +1);
        double* dst = out.data.data() + c * plane;
        const double* src = tmp.re.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = src[i] * norm;
    }
    return out;
}

double spectrum_energy(const ComplexSpectrum& X) {
    double acc = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i)
        acc += X.re[i] * X.re[i] + X.im[i] * X.im[i];
    return acc;
}

double spectral_sq_distance(const Image& a, const Image& b) {
    require_same_shape(a, b, "spectral_sq_distance");
    const ComplexSpectrum A = fft2(a);
    const ComplexSpectrum B = fft2(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        const double dr = A.re[i] - B.re[i];
        const double di = A.im[i] - B.im[i];
        acc += dr * dr + di * di;
    }
    return acc;
}

} // namespace dna
