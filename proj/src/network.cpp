#include "network.hpp"

#include <cmath>

#include "rng.hpp"

namespace dna {

namespace {

constexpr double kLeakySlope = 0.1;

TensorPtr he_uniform_weight(int out_ch, int in_ch, int k, SplitMix64& rng,
                            const std::string& name) {
    auto w = Tensor::create({out_ch, in_ch, k, k}, true, name);
    const double bound = std::sqrt(6.0 / (static_cast<double>(in_ch) * k * k));
    for (double& v : w->values())
        v = rng.next_uniform(-bound, bound);
    return w;
}

TensorPtr zero_bias(int out_ch, const std::string& name) {
    return Tensor::create({out_ch}, true, name);
}

} // namespace

void NetworkConfig::validate() const {
    if (depth < 1)
        throw ConfigError("network: depth must be >= 1");
    if (depth > 16)
        throw ConfigError("network: depth too large");
    if (base_channels < 1)
        throw ConfigError("network: base_channels must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("network: kernel_size must be a positive odd number");
    if (skip_channels < 0)
        throw ConfigError("network: skip_channels must be >= 0");
    if (z_channels < 1)
        throw ConfigError("network: z_channels must be >= 1");
    if (!(z_noise_scale > 0.0))
        throw ConfigError("network: z_noise_scale must be > 0");
}

void NetworkConfig::validate_spatial(int height, int width) const {
    const int factor = 1 << depth;
    if (height < factor || width < factor || height % factor != 0 ||
        width % factor != 0)
        throw ConfigError("network: spatial size " + std::to_string(height) +
                          "x" + std::to_string(width) +
                          " must be divisible by 2^depth = " +
                          std::to_string(factor));
}

TensorPtr Network::sample_input(const NetworkConfig& cfg, int height,
                                int width) {
    cfg.validate();
    cfg.validate_spatial(height, width);
    SplitMix64 rng(derive_seed(cfg.seed, "input"));
    auto z = Tensor::create({cfg.z_channels, height, width}, false, "z");
    for (double& v : z->values())
        v = rng.next_uniform(0.0, cfg.z_noise_scale);
    return z;
}

Network::Network(const NetworkConfig& cfg, int out_channels, int height,
                 int width)
    : cfg_(cfg), out_channels_(out_channels), height_(height), width_(width) {
    cfg.validate();
    cfg.validate_spatial(height, width);
    if (out_channels < 1)
        throw ConfigError("network: out_channels must be >= 1");

    z_ = sample_input(cfg, height, width);

    SplitMix64 rng(derive_seed(cfg.seed, "weights"));
    const int k = cfg.kernel_size;
    const int pad = k / 2;
    auto push = [this](Conv c) {
        params_.push_back(c.weight);
        params_.push_back(c.bias);
        return c;
    };

    // Stage d downsamples the activation a_d (a_0 = z); its pre-downsample
    // channel count feeds both the encoder conv and the stage-d skip conv.
    std::vector<int> stage_in(cfg.depth);
    int ch = cfg.z_channels;
    for (int d = 0; d < cfg.depth; ++d) {
        stage_in[d] = ch;
        const std::string tag = "enc" + std::to_string(d);
        encoder_.push_back(push({he_uniform_weight(cfg.base_channels, ch, k,
                                                   rng, tag + ".weight"),
                                 zero_bias(cfg.base_channels, tag + ".bias"), 2,
                                 pad}));
        ch = cfg.base_channels;
    }
    if (cfg.skip_channels > 0) {
        for (int d = 0; d < cfg.depth; ++d) {
            const std::string tag = "skip" + std::to_string(d);
            skips_.push_back(push({he_uniform_weight(cfg.skip_channels,
                                                     stage_in[d], 1, rng,
                                                     tag + ".weight"),
                                   zero_bias(cfg.skip_channels, tag + ".bias"),
                                   1, 0}));
        }
    }
    const int dec_in = cfg.base_channels + cfg.skip_channels;
    for (int d = 0; d < cfg.depth; ++d) {
        const std::string tag = "dec" + std::to_string(d);
        decoder_.push_back(push({he_uniform_weight(cfg.base_channels, dec_in, k,
                                                   rng, tag + ".weight"),
                                 zero_bias(cfg.base_channels, tag + ".bias"), 1,
                                 pad}));
    }
    output_ = push({he_uniform_weight(out_channels, cfg.base_channels, 1, rng,
                                      "out.weight"),
                    zero_bias(out_channels, "out.bias"), 1, 0});
}

TensorPtr Network::forward(Tape& tape) const {
    std::vector<TensorPtr> stage_acts; // a_0 .. a_{depth-1}
    TensorPtr h = z_;
    for (int d = 0; d < cfg_.depth; ++d) {
        stage_acts.push_back(h);
        const Conv& c = encoder_[d];
        h = tape.leaky_relu(tape.conv2d(h, c.weight, c.bias, c.stride,
                                        c.padding),
                            kLeakySlope);
    }
    for (int d = cfg_.depth - 1; d >= 0; --d) {
        h = tape.upsample_nearest2x(h);
        if (cfg_.skip_channels > 0) {
            const Conv& sc = skips_[d];
            TensorPtr s = tape.conv2d(stage_acts[d], sc.weight, sc.bias,
                                      sc.stride, sc.padding);
            h = tape.concat_channels(h, s);
        }
        const Conv& c = decoder_[d];
        h = tape.leaky_relu(tape.conv2d(h, c.weight, c.bias, c.stride,
                                        c.padding),
                            kLeakySlope);
    }
    return tape.sigmoid(tape.conv2d(h, output_.weight, output_.bias,
                                    output_.stride, output_.padding));
}

} // namespace dna
