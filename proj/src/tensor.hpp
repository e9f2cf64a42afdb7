#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "errors.hpp"

namespace dna {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense double tensor. Image-like tensors are [channel, height, width]
// row-major; conv weights are [out_ch, in_ch, k, k]. Gradients live next to
// the values and are filled in by Tape::backward.
class Tensor {
public:
    static TensorPtr create(std::vector<int> shape, bool requires_grad = false,
                            std::string name = "");
    static TensorPtr from_values(std::vector<int> shape,
                                 std::vector<double> values,
                                 bool requires_grad = false,
                                 std::string name = "");
    static TensorPtr scalar(double v, bool requires_grad = false);

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::size_t size() const { return values_.size(); }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    // Scalar convenience; throws unless size() == 1.
    double item() const;

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool rg) { requires_grad_ = rg; }

    bool has_grad() const { return !grad_.empty(); }
    // Allocates a zero gradient on first access.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad() { grad_.clear(); }

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    std::string shape_string() const;

private:
    Tensor() = default;
    std::vector<int> shape_;
    std::vector<double> values_;
    std::vector<double> grad_; // empty == not yet accumulated
    bool requires_grad_ = false;
    std::string name_;
};

// Dynamic tape: records ops during the forward pass, replays their adjoints
// in reverse on backward(). One backward per recording; a tape is cheap to
// rebuild, the training loop records a fresh one every iteration.
class Tape {
public:
    // Cross-correlation with zero padding. input [C,H,W], weight
    // [C_out,C,k,k], bias [C_out]. Output [C_out,H',W'] with
    // H' = floor((H + 2*padding - k)/stride) + 1.
    TensorPtr conv2d(const TensorPtr& input, const TensorPtr& weight,
                     const TensorPtr& bias, int stride, int padding);

    // [C,H,W] -> [C,2H,2W], each pixel replicated into a 2x2 block. The
    // adjoint sums each block's gradients.
    TensorPtr upsample_nearest2x(const TensorPtr& input);

    // Elementwise max(x, slope*x), slope in (0,1). The subgradient at exactly
    // 0 is the slope.
    TensorPtr leaky_relu(const TensorPtr& input, double slope);

    // Elementwise logistic, numerically stable for large |x|.
    TensorPtr sigmoid(const TensorPtr& input);

    // [Ca,H,W] + [Cb,H,W] -> [Ca+Cb,H,W].
    TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b);

    // Elementwise arithmetic on same-shape tensors.
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
    TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr div(const TensorPtr& a, const TensorPtr& b);
    TensorPtr scale(const TensorPtr& a, double s);
    TensorPtr add_scalar(const TensorPtr& a, double c);

    // Sum of all entries -> scalar.
    TensorPtr sum(const TensorPtr& a);

    // Record of one op; backward() walks these in reverse.
    struct Record {
        std::string op;
        std::vector<TensorPtr> inputs;
        TensorPtr output;
        std::function<void(const Record&)> backward;
    };

    // Extension point for fused ops (the loss terms live in losses.cpp).
    // `forward` fills the freshly allocated output from the inputs; `back`
    // reads output->grad() and accumulates into the inputs' grads. Both must
    // leave input values untouched. The record is kept only when some input
    // requires grad.
    TensorPtr apply(const std::string& op, std::vector<TensorPtr> inputs,
                    std::vector<int> out_shape,
                    const std::function<void(const Record&)>& forward,
                    std::function<void(const Record&)> back);

    // Reverse pass from a scalar loss produced by this tape. Seeds the loss
    // gradient with 1 and accumulates exact derivatives into every tensor on
    // a path to a requires_grad leaf. Throws ContractError on a non-scalar
    // loss or a second call, NumericError (naming the op) on NaN/Inf.
    void backward(const TensorPtr& loss);

    std::size_t num_records() const { return records_.size(); }
    // Read-only view of the recording, in topological order.
    const std::vector<Record>& records() const { return records_; }
    bool consumed() const { return consumed_; }

private:
    std::vector<Record> records_;
    bool consumed_ = false;
};

// Central finite differences (f(x+h e_i) - f(x-h e_i)) / (2h) per element.
// Forward-evaluation-only gradient oracle, independent of any adjoint code.
std::vector<double>
finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                 const std::vector<double>& x, double h);

} // namespace dna
