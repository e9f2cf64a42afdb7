#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace dna {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
    if (shape.empty())
        throw ConfigError("tensor shape must have at least one dimension");
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0)
            throw ConfigError("tensor dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

void check_finite(const std::vector<double>& v, const std::string& op,
                  const char* what) {
    for (double x : v) {
        if (!std::isfinite(x))
            throw NumericError("non-finite " + std::string(what) + " in op '" +
                               op + "'");
    }
}

std::string shape_to_string(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i)
            out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

void require_rank(const TensorPtr& t, int rank, const char* op) {
    if (t->rank() != rank)
        throw DimensionError(std::string(op) + ": expected rank " +
                             std::to_string(rank) + " tensor, got " +
                             t->shape_string());
}

} // namespace

TensorPtr Tensor::create(std::vector<int> shape, bool requires_grad,
                         std::string name) {
    auto t = TensorPtr(new Tensor());
    std::size_t n = shape_product(shape);
    t->shape_ = std::move(shape);
    t->values_.assign(n, 0.0);
    t->requires_grad_ = requires_grad;
    t->name_ = std::move(name);
    return t;
}

TensorPtr Tensor::from_values(std::vector<int> shape,
                              std::vector<double> values, bool requires_grad,
                              std::string name) {
    std::size_t n = shape_product(shape);
    if (values.size() != n)
        throw DimensionError("tensor value count " +
                             std::to_string(values.size()) +
                             " does not match shape " + shape_to_string(shape));
    auto t = TensorPtr(new Tensor());
    t->shape_ = std::move(shape);
    t->values_ = std::move(values);
    t->requires_grad_ = requires_grad;
    t->name_ = std::move(name);
    return t;
}

TensorPtr Tensor::scalar(double v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

double Tensor::item() const {
    if (values_.size() != 1)
        throw ContractError("item() on non-scalar tensor " + shape_string());
    return values_[0];
}

std::vector<double>& Tensor::grad() {
    if (grad_.empty())
        grad_.assign(values_.size(), 0.0);
    return grad_;
}

const std::vector<double>& Tensor::grad() const {
    if (grad_.empty())
        throw ContractError("gradient of '" + name_ + "' was never computed");
    return grad_;
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

TensorPtr Tape::apply(const std::string& op, std::vector<TensorPtr> inputs,
                      std::vector<int> out_shape,
                      const std::function<void(const Record&)>& forward,
                      std::function<void(const Record&)> back) {
    bool needs_grad = false;
    for (const auto& in : inputs) {
        if (!in)
            throw ContractError(op + ": null input tensor");
        needs_grad = needs_grad || in->requires_grad();
    }
    Record rec;
    rec.op = op;
    rec.inputs = std::move(inputs);
    rec.output = Tensor::create(std::move(out_shape), needs_grad);
    forward(rec);
    check_finite(rec.output->values(), op, "values");
    if (needs_grad) {
        rec.backward = std::move(back);
        TensorPtr out = rec.output;
        records_.push_back(std::move(rec));
        return out;
    }
    return rec.output;
}

void Tape::backward(const TensorPtr& loss) {
    if (!loss || loss->size() != 1)
        throw ContractError("backward requires a scalar loss");
    if (consumed_)
        throw ContractError(
            "backward already ran on this tape; record a fresh graph first");
    bool produced_here = false;
    for (const auto& rec : records_) {
        if (rec.output == loss) {
            produced_here = true;
            break;
        }
    }
    if (!produced_here)
        throw ContractError("loss tensor was not produced by this tape");
    consumed_ = true;

    loss->grad()[0] = 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        const Record& rec = *it;
        // Branches that never reached the loss have no incoming gradient.
        if (!rec.output->has_grad())
            continue;
        rec.backward(rec);
        for (const auto& in : rec.inputs) {
            if (in->requires_grad() && in->has_grad())
                check_finite(in->grad(), rec.op, "gradient");
        }
    }
}

// ---------------------------------------------------------------------------
// conv2d

namespace {

struct ConvDims {
    int cin, h, w;        // input
    int cout, k;          // weight
    int oh, ow;           // output
    int stride, padding;
};

ConvDims conv_dims(const TensorPtr& input, const TensorPtr& weight,
                   const TensorPtr& bias, int stride, int padding) {
    require_rank(input, 3, "conv2d");
    require_rank(weight, 4, "conv2d");
    require_rank(bias, 1, "conv2d");
    ConvDims d;
    d.cin = input->dim(0);
    d.h = input->dim(1);
    d.w = input->dim(2);
    d.cout = weight->dim(0);
    d.k = weight->dim(2);
    if (weight->dim(3) != d.k)
        throw DimensionError("conv2d: only square kernels are supported, got " +
                             weight->shape_string());
    if (weight->dim(1) != d.cin)
        throw DimensionError("conv2d: weight expects " +
                             std::to_string(weight->dim(1)) +
                             " input channels, input has " +
                             std::to_string(d.cin));
    if (bias->dim(0) != d.cout)
        throw DimensionError("conv2d: bias size " + std::to_string(bias->dim(0)) +
                             " does not match " + std::to_string(d.cout) +
                             " output channels");
    if (stride < 1)
        throw ConfigError("conv2d: stride must be >= 1");
    if (padding < 0)
        throw ConfigError("conv2d: padding must be >= 0");
    d.stride = stride;
    d.padding = padding;
    d.oh = (d.h + 2 * padding - d.k) / stride + 1;
    d.ow = (d.w + 2 * padding - d.k) / stride + 1;
    if (d.h + 2 * padding < d.k || d.w + 2 * padding < d.k || d.oh < 1 ||
        d.ow < 1)
        throw ConfigError("conv2d: non-positive output size for input " +
                          input->shape_string() + ", kernel " +
                          std::to_string(d.k) + ", stride " +
                          std::to_string(stride) + ", padding " +
                          std::to_string(padding));
    return d;
}

// Valid output index range [lo, hi] such that o*stride - padding + kpos stays
// inside [0, in_size). Empty range reported as lo > hi.
inline void valid_range(int kpos, int in_size, int out_size, int stride,
                        int padding, int& lo, int& hi) {
    int num = padding - kpos;
    lo = num > 0 ? (num + stride - 1) / stride : 0;
    int top = in_size - 1 + padding - kpos;
    hi = top < 0 ? -1 : std::min(out_size - 1, top / stride);
}

} // namespace

TensorPtr Tape::conv2d(const TensorPtr& input, const TensorPtr& weight,
                       const TensorPtr& bias, int stride, int padding) {
    ConvDims d = conv_dims(input, weight, bias, stride, padding);

    auto forward = [d](const Record& rec) {
        const double* in = rec.inputs[0]->values().data();
        const double* wv = rec.inputs[1]->values().data();
        const double* bv = rec.inputs[2]->values().data();
        double* out = rec.output->values().data();
        const std::size_t iplane = static_cast<std::size_t>(d.h) * d.w;
        const std::size_t oplane = static_cast<std::size_t>(d.oh) * d.ow;
        for (int oc = 0; oc < d.cout; ++oc) {
            double* op = out + oc * oplane;
            std::fill(op, op + oplane, bv[oc]);
            for (int ic = 0; ic < d.cin; ++ic) {
                const double* ip = in + ic * iplane;
                const double* wp =
                    wv + (static_cast<std::size_t>(oc) * d.cin + ic) * d.k * d.k;
                for (int kh = 0; kh < d.k; ++kh) {
                    int oh_lo, oh_hi;
                    valid_range(kh, d.h, d.oh, d.stride, d.padding, oh_lo, oh_hi);
                    for (int kw = 0; kw < d.k; ++kw) {
                        int ow_lo, ow_hi;
                        valid_range(kw, d.w, d.ow, d.stride, d.padding, ow_lo,
                                    ow_hi);
                        if (ow_lo > ow_hi)
                            continue;
                        const double wgt = wp[kh * d.k + kw];
                        for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                            const double* irow =
                                ip + (oh * d.stride - d.padding + kh) * d.w +
                                (ow_lo * d.stride - d.padding + kw);
                            double* orow = op + oh * d.ow + ow_lo;
                            const int n = ow_hi - ow_lo + 1;
                            for (int t = 0; t < n; ++t)
                                orow[t] += wgt * irow[t * d.stride];
                        }
                    }
                }
            }
        }
    };

    auto backward = [d](const Record& rec) {
        const TensorPtr& x = rec.inputs[0];
        const TensorPtr& w = rec.inputs[1];
        const TensorPtr& b = rec.inputs[2];
        const double* go = rec.output->grad().data();
        const double* in = x->values().data();
        const double* wv = w->values().data();
        const std::size_t iplane = static_cast<std::size_t>(d.h) * d.w;
        const std::size_t oplane = static_cast<std::size_t>(d.oh) * d.ow;

        if (b->requires_grad()) {
            double* gb = b->grad().data();
            for (int oc = 0; oc < d.cout; ++oc) {
                const double* gp = go + oc * oplane;
                double acc = 0.0;
                for (std::size_t i = 0; i < oplane; ++i)
                    acc += gp[i];
                gb[oc] += acc;
            }
        }
        const bool need_gw = w->requires_grad();
        const bool need_gx = x->requires_grad();
        if (!need_gw && !need_gx)
            return;
        double* gw = need_gw ? w->grad().data() : nullptr;
        double* gx = need_gx ? x->grad().data() : nullptr;
        for (int oc = 0; oc < d.cout; ++oc) {
            const double* gp = go + oc * oplane;
            for (int ic = 0; ic < d.cin; ++ic) {
                const double* ip = in + ic * iplane;
                const std::size_t wbase =
                    (static_cast<std::size_t>(oc) * d.cin + ic) * d.k * d.k;
                for (int kh = 0; kh < d.k; ++kh) {
                    int oh_lo, oh_hi;
                    valid_range(kh, d.h, d.oh, d.stride, d.padding, oh_lo, oh_hi);
                    for (int kw = 0; kw < d.k; ++kw) {
                        int ow_lo, ow_hi;
                        valid_range(kw, d.w, d.ow, d.stride, d.padding, ow_lo,
                                    ow_hi);
                        if (ow_lo > ow_hi || oh_lo > oh_hi)
                            continue;
                        const int n = ow_hi - ow_lo + 1;
                        if (need_gw) {
                            double acc = 0.0;
                            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                                const double* irow =
                                    ip +
                                    (oh * d.stride - d.padding + kh) * d.w +
                                    (ow_lo * d.stride - d.padding + kw);
                                const double* grow = gp + oh * d.ow + ow_lo;
                                for (int t = 0; t < n; ++t)
                                    acc += grow[t] * irow[t * d.stride];
                            }
                            gw[wbase + kh * d.k + kw] += acc;
                        }
                        if (need_gx) {
                            const double wgt = wv[wbase + kh * d.k + kw];
                            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                                double* xrow =
                                    gx + ic * iplane +
                                    (oh * d.stride - d.padding + kh) * d.w +
                                    (ow_lo * d.stride - d.padding + kw);
                                const double* grow = gp + oh * d.ow + ow_lo;
                                for (int t = 0; t < n; ++t)
                                    xrow[t * d.stride] += wgt * grow[t];
                            }
                        }
                    }
                }
            }
        }
    };

    return apply("conv2d", {input, weight, bias}, {d.cout, d.oh, d.ow}, forward,
                 backward);
}

TensorPtr Tape::upsample_nearest2x(const TensorPtr& input) {
    require_rank(input, 3, "upsample_nearest2x");
    const int c = input->dim(0), h = input->dim(1), w = input->dim(2);

    auto forward = [c, h, w](const Record& rec) {
        const double* in = rec.inputs[0]->values().data();
        double* out = rec.output->values().data();
        const int ow = 2 * w;
        for (int ch = 0; ch < c; ++ch) {
            const double* ip = in + static_cast<std::size_t>(ch) * h * w;
            double* op = out + static_cast<std::size_t>(ch) * 4 * h * w;
            for (int i = 0; i < h; ++i) {
                double* r0 = op + (2 * i) * ow;
                double* r1 = r0 + ow;
                const double* irow = ip + i * w;
                for (int j = 0; j < w; ++j) {
                    const double v = irow[j];
                    r0[2 * j] = v;
                    r0[2 * j + 1] = v;
                    r1[2 * j] = v;
                    r1[2 * j + 1] = v;
                }
            }
        }
    };

    auto backward = [c, h, w](const Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        double* gi = rec.inputs[0]->grad().data();
        const double* go = rec.output->grad().data();
        const int ow = 2 * w;
        for (int ch = 0; ch < c; ++ch) {
            double* ip = gi + static_cast<std::size_t>(ch) * h * w;
            const double* op = go + static_cast<std::size_t>(ch) * 4 * h * w;
            for (int i = 0; i < h; ++i) {
                const double* r0 = op + (2 * i) * ow;
                const double* r1 = r0 + ow;
                double* irow = ip + i * w;
                for (int j = 0; j < w; ++j)
                    irow[j] += r0[2 * j] + r0[2 * j + 1] + r1[2 * j] +
                               r1[2 * j + 1];
            }
        }
    };

    return apply("upsample_nearest2x", {input}, {c, 2 * h, 2 * w}, forward,
                 backward);
}

TensorPtr Tape::leaky_relu(const TensorPtr& input, double slope) {
    if (!(slope > 0.0 && slope < 1.0))
        throw ConfigError("leaky_relu: slope must lie in (0,1)");
    auto forward = [slope](const Record& rec) {
        const auto& in = rec.inputs[0]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < in.size(); ++i)
            out[i] = in[i] > 0.0 ? in[i] : slope * in[i];
    };
    auto backward = [slope](const Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        const auto& in = rec.inputs[0]->values();
        const auto& go = rec.output->grad();
        auto& gi = rec.inputs[0]->grad();
        for (std::size_t i = 0; i < in.size(); ++i)
            gi[i] += go[i] * (in[i] > 0.0 ? 1.0 : slope);
    };
    return apply("leaky_relu", {input}, input->shape(), forward, backward);
}

TensorPtr Tape::sigmoid(const TensorPtr& input) {
    auto forward = [](const Record& rec) {
        const auto& in = rec.inputs[0]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < in.size(); ++i) {
            const double x = in[i];
            if (x >= 0.0) {
                out[i] = 1.0 / (1.0 + std::exp(-x));
            } else {
                const double e = std::exp(x);
                out[i] = e / (1.0 + e);
            }
        }
    };
    auto backward = [](const Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        const auto& s = rec.output->values();
        const auto& go = rec.output->grad();
        auto& gi = rec.inputs[0]->grad();
        for (std::size_t i = 0; i < s.size(); ++i)
            gi[i] += go[i] * s[i] * (1.0 - s[i]);
    };
    return apply("sigmoid", {input}, input->shape(), forward, backward);
}

TensorPtr Tape::concat_channels(const TensorPtr& a, const TensorPtr& b) {
    require_rank(a, 3, "concat_channels");
    require_rank(b, 3, "concat_channels");
    if (a->dim(1) != b->dim(1) || a->dim(2) != b->dim(2))
        throw DimensionError("concat_channels: spatial shapes differ, " +
                             a->shape_string() + " vs " + b->shape_string());
    const std::size_t na = a->size();
    auto forward = [na](const Record& rec) {
        auto& out = rec.output->values();
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        std::copy(av.begin(), av.end(), out.begin());
        std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(na));
    };
    auto backward = [na](const Record& rec) {
        const auto& go = rec.output->grad();
        if (rec.inputs[0]->requires_grad()) {
            auto& ga = rec.inputs[0]->grad();
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga[i] += go[i];
        }
        if (rec.inputs[1]->requires_grad()) {
            auto& gb = rec.inputs[1]->grad();
            for (std::size_t i = 0; i < gb.size(); ++i)
                gb[i] += go[na + i];
        }
    };
    return apply("concat_channels", {a, b},
                 {a->dim(0) + b->dim(0), a->dim(1), a->dim(2)}, forward,
                 backward);
}

namespace {
void require_same_tensor_shape(const TensorPtr& a, const TensorPtr& b,
                               const char* op) {
    if (a->shape() != b->shape())
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             a->shape_string() + " vs " + b->shape_string());
}
} // namespace

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
    require_same_tensor_shape(a, b, "add");
    auto forward = [](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] + bv[i];
    };
    auto backward = [](const Record& rec) {
        const auto& go = rec.output->grad();
        for (int s = 0; s < 2; ++s) {
            if (!rec.inputs[s]->requires_grad())
                continue;
            auto& g = rec.inputs[s]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += go[i];
        }
    };
    return apply("add", {a, b}, a->shape(), forward, backward);
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_tensor_shape(a, b, "sub");
    auto forward = [](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] - bv[i];
    };
    auto backward = [](const Record& rec) {
        const auto& go = rec.output->grad();
        if (rec.inputs[0]->requires_grad()) {
            auto& g = rec.inputs[0]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += go[i];
        }
        if (rec.inputs[1]->requires_grad()) {
            auto& g = rec.inputs[1]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] -= go[i];
        }
    };
    return apply("sub", {a, b}, a->shape(), forward, backward);
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_tensor_shape(a, b, "mul");
    auto forward = [](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] * bv[i];
    };
    auto backward = [](const Record& rec) {
        const auto& go = rec.output->grad();
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        if (rec.inputs[0]->requires_grad()) {
            auto& g = rec.inputs[0]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += go[i] * bv[i];
        }
        if (rec.inputs[1]->requires_grad()) {
            auto& g = rec.inputs[1]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += go[i] * av[i];
        }
    };
    return apply("mul", {a, b}, a->shape(), forward, backward);
}

TensorPtr Tape::div(const TensorPtr& a, const TensorPtr& b) {
    require_same_tensor_shape(a, b, "div");
    auto forward = [](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] / bv[i];
    };
    auto backward = [](const Record& rec) {
        const auto& go = rec.output->grad();
        const auto& av = rec.inputs[0]->values();
        const auto& bv = rec.inputs[1]->values();
        if (rec.inputs[0]->requires_grad()) {
            auto& g = rec.inputs[0]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += go[i] / bv[i];
        }
        if (rec.inputs[1]->requires_grad()) {
            auto& g = rec.inputs[1]->grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] -= go[i] * av[i] / (bv[i] * bv[i]);
        }
    };
    return apply("div", {a, b}, a->shape(), forward, backward);
}

TensorPtr Tape::scale(const TensorPtr& a, double s) {
    auto forward = [s](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = s * av[i];
    };
    auto backward = [s](const Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        const auto& go = rec.output->grad();
        auto& g = rec.inputs[0]->grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += s * go[i];
    };
    return apply("scale", {a}, a->shape(), forward, backward);
}

TensorPtr Tape::add_scalar(const TensorPtr& a, double c) {
    auto forward = [c](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        auto& out = rec.output->values();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = av[i] + c;
    };
    auto backward = [](const Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        const auto& go = rec.output->grad();
        auto& g = rec.inputs[0]->grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += go[i];
    };
    return apply("add_scalar", {a}, a->shape(), forward, backward);
}

TensorPtr Tape::sum(const TensorPtr& a) {
    auto forward = [](const Record& rec) {
        const auto& av = rec.inputs[0]->values();
        double acc = 0.0;
        for (double v : av)
            acc += v;
        rec.output->values()[0] = acc;
    };
    auto backward = [](const Record& rec) {
        if (!rec.inputs[0]->requires_grad())
            return;
        const double go = rec.output->grad()[0];
        auto& g = rec.inputs[0]->grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += go;
    };
    return apply("sum", {a}, {1}, forward, backward);
}

std::vector<double>
finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                 const std::vector<double>& x, double h) {
    if (!(h > 0.0))
        throw ConfigError("finite_diff_grad: h must be positive");
    std::vector<double> grad(x.size());
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace dna
