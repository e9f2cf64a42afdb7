#pragma once

#include <memory>

#include "fft.hpp"
#include "image.hpp"
#include "tensor.hpp"

namespace dna {

// Weights and stabilisers of the dual-domain objective
//   L_total = alpha * L_IS + beta * L_TV
// with L_IS the spectral fidelity term and L_TV the scale-normalised smoothed
// TV. The two gamma constants are kept separate: gamma_spec stabilises the
// L_IS denominator, gamma_tv both smooths the TV seminorm and stabilises the
// L_TV denominator.
struct ObjectiveConfig {
    double alpha = 1.0;
    double beta = 1e-4;
    double gamma_spec = 1e-8;
    double gamma_tv = 1e-8;

    void validate() const;
};

enum class Boundary { Neumann };

// Forward differences dx(i,j) = x(i,j+1) - x(i,j), dy(i,j) = x(i+1,j) - x(i,j)
// per channel; the far boundary entries (last column of dx, last row of dy)
// are exactly zero.
struct FiniteDifferenceField {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> dx;
    std::vector<double> dy;
    Boundary boundary = Boundary::Neumann;
};

FiniteDifferenceField finite_differences(const Image& x);

// --- plain evaluation over images ------------------------------------------

// TV(x) = sum over channels and pixels of sqrt(dx^2 + dy^2 + gamma^2).
double smoothed_tv_value(const Image& x, double gamma_tv);

// Analytic gradient of smoothed_tv_value w.r.t. every pixel.
std::vector<double> smoothed_tv_grad(const Image& x, double gamma_tv);

// L_TV = TV(x) / (||x||^2 + gamma_tv).
double normalized_tv_value(const Image& x, double gamma_tv);

// L_IS = ||F(xhat) - F(y)||^2 / (||F(y)||^2 + gamma_spec).
double spectral_fidelity_value(const Image& xhat, const Image& y,
                               double gamma_spec);

double total_loss_value(const Image& xhat, const Image& y,
                        const ObjectiveConfig& cfg);

// --- differentiable tape ops -------------------------------------------------

// Everything about the observation y that the spectral loss needs, computed
// once per job: F(y) per channel, the flattened y itself (the Parseval
// adjoint works in pixel space) and the constant denominator.
struct SpectralCache {
    std::vector<double> y_values;
    ComplexSpectrum y_spectrum;
    double denom = 0.0; // ||F(y)||^2 + gamma_spec, constant w.r.t. xhat
    int channels = 0;
    int height = 0;
    int width = 0;
};

std::shared_ptr<const SpectralCache> make_spectral_cache(const Image& y,
                                                         double gamma_spec);

// Scalar node sum sqrt(dx^2 + dy^2 + gamma^2) with the smoothed-TV adjoint.
TensorPtr smoothed_tv(Tape& tape, const TensorPtr& x, double gamma_tv);

// Scalar node TV(x) / (||x||^2 + gamma_tv); the quotient-rule gradient falls
// out of the composed tape ops.
TensorPtr normalized_tv_loss(Tape& tape, const TensorPtr& x, double gamma_tv);

// Scalar node for L_IS. The forward pass transforms xhat and compares against
// the cached F(y); the backward pass is the Parseval form
// 2*H*W*(xhat - y)/denom, so no inverse transform is needed.
TensorPtr spectral_fidelity_loss(Tape& tape, const TensorPtr& xhat,
                                 std::shared_ptr<const SpectralCache> cache);
TensorPtr spectral_fidelity_loss(Tape& tape, const TensorPtr& xhat,
                                 const Image& y, double gamma_spec);

struct LossNodes {
    TensorPtr total;
    TensorPtr fidelity;
    TensorPtr regulariser;
};

LossNodes total_loss(Tape& tape, const TensorPtr& xhat,
                     const std::shared_ptr<const SpectralCache>& cache,
                     const ObjectiveConfig& cfg);

} // namespace dna
