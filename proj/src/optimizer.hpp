#pragma once

#include <cstdint>
#include <vector>

#include "losses.hpp"
#include "network.hpp"

namespace dna {

struct TrainConfig {
    int iterations = 3000;
    double learning_rate = 1e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int log_every = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TraceRow {
    int iteration = 0;
    double total = 0.0;
    double fidelity = 0.0;    // L_IS for dna, pixel MSE for dip
    double regulariser = 0.0; // L_TV for dna, 0 for dip
};

struct DenoiseResult {
    Image xhat;
    std::vector<TraceRow> loss_trace;
    double elapsed_seconds = 0.0;
    ObjectiveConfig objective;
    NetworkConfig network;
    TrainConfig training;
};

// First/second moment buffers for Adam, one pair per parameter tensor.
class AdamState {
public:
    explicit AdamState(const std::vector<TensorPtr>& params);
    std::size_t count() const { return m_.size(); }
    friend void adam_step(const std::vector<TensorPtr>& params,
                          AdamState& state, int t, const TrainConfig& cfg);

private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

// One bias-corrected Adam update, t is the 1-based step index. Reads each
// parameter's accumulated gradient (missing gradient == zero) and updates the
// values in place. Throws NumericError naming the parameter on a non-finite
// gradient.
void adam_step(const std::vector<TensorPtr>& params, AdamState& state, int t,
               const TrainConfig& cfg);

// Raised when the training loop hits non-finite numbers; carries the
// iteration index and whatever trace rows were recorded before the abort.
class TrainingNumericError : public NumericError {
public:
    TrainingNumericError(const std::string& what, int iteration,
                         std::vector<TraceRow> partial)
        : NumericError(what), iteration(iteration),
          partial_trace(std::move(partial)) {}

    int iteration;
    std::vector<TraceRow> partial_trace;
};

// Fits the generator to y under alpha*L_IS + beta*L_TV for exactly
// `iterations` Adam steps (no early stopping) and returns the final
// reconstruction. F(y) and its energy are computed once up front. The trace
// holds the pre-step loss every log_every iterations plus the final loss.
DenoiseResult denoise(const Image& y, const ObjectiveConfig& obj,
                      const NetworkConfig& net_cfg,
                      const TrainConfig& train_cfg);

// Same loop with the pixel-space objective ||f_theta(z) - y||^2 / (H*W*C)
// and no explicit regulariser.
DenoiseResult denoise_dip_baseline(const Image& y, const NetworkConfig& net_cfg,
                                   const TrainConfig& train_cfg);

} // namespace dna
