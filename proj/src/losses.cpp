#include "losses.hpp"

#include <cmath>

namespace dna {

void ObjectiveConfig::validate() const {
    // alpha/beta may be zero to switch a term off; the stabilisers may not.
    if (!(alpha >= 0.0))
        throw ConfigError("objective: alpha must be >= 0");
    if (!(beta >= 0.0))
        throw ConfigError("objective: beta must be >= 0");
    if (!(gamma_spec > 0.0))
        throw ConfigError("objective: gamma_spec must be > 0");
    if (!(gamma_tv > 0.0))
        throw ConfigError("objective: gamma_tv must be > 0");
}

namespace {

// Shared TV kernels over raw [C,H,W] buffers so the image functions and the
// tape op agree bit for bit.

double tv_value_raw(const double* x, int c, int h, int w, double gamma) {
    const double g2 = gamma * gamma;
    double acc = 0.0;
    for (int ch = 0; ch < c; ++ch) {
        const double* p = x + static_cast<std::size_t>(ch) * h * w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double v = p[i * w + j];
                const double dx = j + 1 < w ? p[i * w + j + 1] - v : 0.0;
                const double dy = i + 1 < h ? p[(i + 1) * w + j] - v : 0.0;
                acc += std::sqrt(dx * dx + dy * dy + g2);
            }
        }
    }
    return acc;
}

// grad += upstream * dTV/dx
void tv_grad_accum_raw(const double* x, int c, int h, int w, double gamma,
                       double upstream, double* grad) {
    const double g2 = gamma * gamma;
    for (int ch = 0; ch < c; ++ch) {
        const double* p = x + static_cast<std::size_t>(ch) * h * w;
        double* g = grad + static_cast<std::size_t>(ch) * h * w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double v = p[i * w + j];
                const double dx = j + 1 < w ? p[i * w + j + 1] - v : 0.0;
                const double dy = i + 1 < h ? p[(i + 1) * w + j] - v : 0.0;
                const double r = std::sqrt(dx * dx + dy * dy + g2);
                const double s = upstream / r;
                g[i * w + j] -= s * (dx + dy);
                if (j + 1 < w)
                    g[i * w + j + 1] += s * dx;
                if (i + 1 < h)
                    g[(i + 1) * w + j] += s * dy;
            }
        }
    }
}

void require_gamma(double gamma, const char* who) {
    if (!(gamma > 0.0))
        throw ConfigError(std::string(who) + ": gamma must be > 0");
}

} // namespace

FiniteDifferenceField finite_differences(const Image& x) {
    FiniteDifferenceField f;
    f.channels = x.channels;
    f.height = x.height;
    f.width = x.width;
    f.dx.assign(x.size(), 0.0);
    f.dy.assign(x.size(), 0.0);
    for (int c = 0; c < x.channels; ++c) {
        const std::size_t base = c * x.plane();
        for (int i = 0; i < x.height; ++i) {
            for (int j = 0; j < x.width; ++j) {
                const std::size_t k = base + i * x.width + j;
                if (j + 1 < x.width)
                    f.dx[k] = x.data[k + 1] - x.data[k];
                if (i + 1 < x.height)
                    f.dy[k] = x.data[k + x.width] - x.data[k];
            }
        }
    }
    return f;
}

double smoothed_tv_value(const Image& x, double gamma_tv) {
    require_gamma(gamma_tv, "smoothed_tv");
    return tv_value_raw(x.data.data(), x.channels, x.height, x.width, gamma_tv);
}

std::vector<double> smoothed_tv_grad(const Image& x, double gamma_tv) {
    require_gamma(gamma_tv, "smoothed_tv");
    std::vector<double> g(x.size(), 0.0);
    tv_grad_accum_raw(x.data.data(), x.channels, x.height, x.width, gamma_tv,
                      1.0, g.data());
    return g;
}

double normalized_tv_value(const Image& x, double gamma_tv) {
    require_gamma(gamma_tv, "normalized_tv");
    double sq = 0.0;
    for (double v : x.data)
        sq += v * v;
    return smoothed_tv_value(x, gamma_tv) / (sq + gamma_tv);
}

double spectral_fidelity_value(const Image& xhat, const Image& y,
                               double gamma_spec) {
    require_same_shape(xhat, y, "spectral_fidelity");
    require_gamma(gamma_spec, "spectral_fidelity");
    return spectral_sq_distance(xhat, y) /
           (spectrum_energy(fft2(y)) + gamma_spec);
}

double total_loss_value(const Image& xhat, const Image& y,
                        const ObjectiveConfig& cfg) {
    cfg.validate();
    return cfg.alpha * spectral_fidelity_value(xhat, y, cfg.gamma_spec) +
           cfg.beta * normalized_tv_value(xhat, cfg.gamma_tv);
}

std::shared_ptr<const SpectralCache> make_spectral_cache(const Image& y,
                                                         double gamma_spec) {
    require_gamma(gamma_spec, "spectral_fidelity");
    auto cache = std::make_shared<SpectralCache>();
    cache->y_values = y.data;
    cache->y_spectrum = fft2(y);
    cache->denom = spectrum_energy(cache->y_spectrum) + gamma_spec;
    cache->channels = y.channels;
    cache->height = y.height;
    cache->width = y.width;
    return cache;
}

TensorPtr smoothed_tv(Tape& tape, const TensorPtr& x, double gamma_tv) {
    require_gamma(gamma_tv, "smoothed_tv");
    if (x->rank() != 3)
        throw DimensionError("smoothed_tv expects a [C,H,W] tensor, got " +
                             x->shape_string());
    const int c = x->dim(0), h = x->dim(1), w = x->dim(2);
    auto forward = [c, h, w, gamma_tv](const Tape::Record& rec) {
        rec.output->values()[0] = tv_value_raw(rec.inputs[0]->values().data(),
                                               c, h, w, gamma_tv);
    };
    auto backward = [c, h, w, gamma_tv](const Tape::Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        tv_grad_accum_raw(rec.inputs[0]->values().data(), c, h, w, gamma_tv,
                          rec.output->grad()[0],
                          rec.inputs[0]->grad().data());
    };
    return tape.apply("smoothed_tv", {x}, {1}, forward, backward);
}

TensorPtr normalized_tv_loss(Tape& tape, const TensorPtr& x, double gamma_tv) {
    TensorPtr tv = smoothed_tv(tape, x, gamma_tv);
    TensorPtr den = tape.add_scalar(tape.sum(tape.mul(x, x)), gamma_tv);
    return tape.div(tv, den);
}

TensorPtr spectral_fidelity_loss(Tape& tape, const TensorPtr& xhat,
                                 std::shared_ptr<const SpectralCache> cache) {
    if (xhat->rank() != 3)
        throw DimensionError("spectral_fidelity expects a [C,H,W] tensor");
    if (xhat->dim(0) != cache->channels || xhat->dim(1) != cache->height ||
        xhat->dim(2) != cache->width)
        throw DimensionError(
            "spectral_fidelity: reconstruction shape " + xhat->shape_string() +
            " does not match observation " +
            Image::shape_string(cache->channels, cache->height, cache->width));
    const int c = cache->channels, h = cache->height, w = cache->width;

    auto forward = [cache, c, h, w](const Tape::Record& rec) {
        Image tmp(c, h, w);
        tmp.data = rec.inputs[0]->values();
        const ComplexSpectrum X = fft2(tmp);
        const ComplexSpectrum& Y = cache->y_spectrum;
        double num = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            const double dr = X.re[i] - Y.re[i];
            const double di = X.im[i] - Y.im[i];
            num += dr * dr + di * di;
        }
        rec.output->values()[0] = num / cache->denom;
    };
    auto backward = [cache, h, w](const Tape::Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        const double scale = rec.output->grad()[0] * 2.0 *
                             static_cast<double>(h) * w / cache->denom;
        const auto& xv = rec.inputs[0]->values();
        auto& g = rec.inputs[0]->grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += scale * (xv[i] - cache->y_values[i]);
    };
    return tape.apply("spectral_fidelity", {xhat}, {1}, forward, backward);
}

TensorPtr spectral_fidelity_loss(Tape& tape, const TensorPtr& xhat,
                                 const Image& y, double gamma_spec) {
    return spectral_fidelity_loss(tape, xhat, make_spectral_cache(y, gamma_spec));
}

LossNodes total_loss(Tape& tape, const TensorPtr& xhat,
                     const std::shared_ptr<const SpectralCache>& cache,
                     const ObjectiveConfig& cfg) {
    cfg.validate();
    LossNodes nodes;
    nodes.fidelity = spectral_fidelity_loss(tape, xhat, cache);
    nodes.regulariser = normalized_tv_loss(tape, xhat, cfg.gamma_tv);
    nodes.total = tape.add(tape.scale(nodes.fidelity, cfg.alpha),
                           tape.scale(nodes.regulariser, cfg.beta));
    return nodes;
}

} // namespace dna
