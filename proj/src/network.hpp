#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace dna {

// Shape of the convolutional encoder-decoder generator. The spatial dims of
// the image being fitted must be divisible by 2^depth.
struct NetworkConfig {
    int depth = 3;
    int base_channels = 16;
    int kernel_size = 3; // odd
    int skip_channels = 4;
    int z_channels = 8;
    double z_noise_scale = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    void validate_spatial(int height, int width) const;
};

// Generator x_hat = f_theta(z): `depth` stride-2 conv stages down, `depth`
// nearest-neighbour upsample + conv stages back up, a 1x1-conv skip from each
// encoder-side activation into the matching decoder stage, and a final 1x1
// conv + sigmoid onto (0,1). The input z is drawn once and never trained.
class Network {
public:
    Network(const NetworkConfig& cfg, int out_channels, int height, int width);

    // Records the whole generator onto the tape and returns the
    // [out_channels, height, width] reconstruction node.
    TensorPtr forward(Tape& tape) const;

    const std::vector<TensorPtr>& parameters() const { return params_; }
    const TensorPtr& input() const { return z_; }
    const NetworkConfig& config() const { return cfg_; }
    int out_channels() const { return out_channels_; }
    int height() const { return height_; }
    int width() const { return width_; }

    // i.i.d. uniform [0, z_noise_scale) tensor [z_channels, height, width],
    // fully determined by cfg.seed.
    static TensorPtr sample_input(const NetworkConfig& cfg, int height,
                                  int width);

private:
    struct Conv {
        TensorPtr weight;
        TensorPtr bias;
        int stride = 1;
        int padding = 0;
    };

    NetworkConfig cfg_;
    int out_channels_;
    int height_;
    int width_;
    TensorPtr z_;
    std::vector<Conv> encoder_;
    std::vector<Conv> skips_;
    std::vector<Conv> decoder_; // decoder_[d] consumes the skip of stage d
    Conv output_;
    std::vector<TensorPtr> params_;
};

} // namespace dna
