#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "banis/errors.hpp"
#include "banis/gemm.hpp"
#include "banis/rng.hpp"
#include "banis/tensor.hpp"

namespace banis::nn {

// A trainable tensor plus its gradient accumulator. Parameter storage is
// shared between layer clones (shared_ptr), which is how the Successor shares
// its generator with the Pioneer: two layer instances, one ParamTensor.
template <typename T>
struct ParamTensor {
    Tensor<T> value;
    Tensor<T> grad;

    explicit ParamTensor(std::vector<int> shape)
        : value(shape), grad(std::move(shape)) {}
};

// Introspection record; unit tests rebuild forward passes from these.
struct LayerInfo {
    std::string kind;
    int in_ch = 0, out_ch = 0, ksize = 0, stride = 0;
    double alpha = 0.0; // leaky slope or dropout rate
    std::vector<int> out_tail; // reshape target
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual LayerInfo info() const = 0;
    // y is resized by the callee; buffers are reused across calls.
    virtual void forward(const Tensor<T>& x, Tensor<T>& y, bool train, Rng& rng) = 0;
    // Accumulates parameter gradients, writes input gradient into dx.
    virtual void backward(const Tensor<T>& dy, Tensor<T>& dx) = 0;
    virtual std::vector<ParamTensor<T>*> params() { return {}; }
    virtual std::vector<Tensor<T>*> state_buffers() { return {}; } // non-trainable state
    // New instance sharing parameters and state buffers, with fresh caches.
    virtual std::shared_ptr<Layer<T>> clone_shared() const = 0;
};

namespace detail {

template <typename T>
void init_normal(Tensor<T>& t, Rng& rng, double sigma) {
    for (auto& x : t.v) x = static_cast<T>(rng.normal(0.0, sigma));
}

// Gathers k x k patches from the `hi` grid into rows indexed by positions of
// the `lo` grid: cols[(n,oh,ow), (kh,kw,c)] = hi[n, oh*s+kh-pad, ow*s+kw-pad, c]
// (zero outside). Shared by conv forward and transposed-conv backward.
template <typename T>
void im2col_gather(const T* hi, int n, int hi_h, int hi_w, int c, int lo_h, int lo_w, int k,
                   int s, int pad, T* cols) {
    const int row_len = k * k * c;
    for (int in = 0; in < n; ++in) {
        const T* img = hi + static_cast<std::size_t>(in) * hi_h * hi_w * c;
        T* crow = cols + static_cast<std::size_t>(in) * lo_h * lo_w * row_len;
        for (int oh = 0; oh < lo_h; ++oh) {
            for (int ow = 0; ow < lo_w; ++ow, crow += row_len) {
                T* dst = crow;
                for (int kh = 0; kh < k; ++kh) {
                    const int ih = oh * s + kh - pad;
                    if (ih < 0 || ih >= hi_h) {
                        std::memset(dst, 0, sizeof(T) * static_cast<std::size_t>(k) * c);
                        dst += k * c;
                        continue;
                    }
                    for (int kw = 0; kw < k; ++kw, dst += c) {
                        const int iw = ow * s + kw - pad;
                        if (iw < 0 || iw >= hi_w) {
                            std::memset(dst, 0, sizeof(T) * c);
                        } else {
                            std::memcpy(dst, img + (static_cast<std::size_t>(ih) * hi_w + iw) * c,
                                        sizeof(T) * c);
                        }
                    }
                }
            }
        }
    }
}

// Adjoint of im2col_gather: scatter-adds cols back onto the `hi` grid.
// Shared by conv backward (input grads) and transposed-conv forward.
template <typename T>
void col2im_scatter(const T* cols, int n, int hi_h, int hi_w, int c, int lo_h, int lo_w, int k,
                    int s, int pad, T* hi) {
    const int row_len = k * k * c;
    std::memset(hi, 0, sizeof(T) * static_cast<std::size_t>(n) * hi_h * hi_w * c);
    for (int in = 0; in < n; ++in) {
        T* img = hi + static_cast<std::size_t>(in) * hi_h * hi_w * c;
        const T* crow = cols + static_cast<std::size_t>(in) * lo_h * lo_w * row_len;
        for (int oh = 0; oh < lo_h; ++oh) {
            for (int ow = 0; ow < lo_w; ++ow, crow += row_len) {
                const T* src = crow;
                for (int kh = 0; kh < k; ++kh) {
                    const int ih = oh * s + kh - pad;
                    if (ih < 0 || ih >= hi_h) {
                        src += k * c;
                        continue;
                    }
                    for (int kw = 0; kw < k; ++kw, src += c) {
                        const int iw = ow * s + kw - pad;
                        if (iw < 0 || iw >= hi_w) continue;
                        T* dst = img + (static_cast<std::size_t>(ih) * hi_w + iw) * c;
                        for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                    }
                }
            }
        }
    }
}

template <typename T>
void add_bias_rows(T* y, std::size_t rows, const T* b, std::size_t n) {
    for (std::size_t r = 0; r < rows; ++r) {
        T* yr = y + r * n;
        for (std::size_t i = 0; i < n; ++i) yr[i] += b[i];
    }
}

template <typename T>
void col_sum_acc(const T* dy, std::size_t rows, std::size_t n, T* db) {
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = dy + r * n;
        for (std::size_t i = 0; i < n; ++i) db[i] += row[i];
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

template <typename T>
class Dense : public Layer<T> {
public:
    struct State {
        ParamTensor<T> w, b;
        State(int in, int out, Rng& rng, double init_sigma)
            : w({in, out}), b({out}) {
            detail::init_normal(w.value, rng, init_sigma);
        }
    };

    Dense(int in, int out, Rng& rng, double init_sigma = 0.02)
        : in_(in), out_(out), st_(std::make_shared<State>(in, out, rng, init_sigma)) {}

    LayerInfo info() const override { return {"dense", in_, out_, 0, 0, 0.0, {}}; }

    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        if (x.rank() != 2 || x.dim(1) != in_)
            throw ValidationError("dense: expected (N," + std::to_string(in_) + "), got " +
                                  x.shape_str());
        x_ = x;
        const std::size_t n = static_cast<std::size_t>(x.dim(0));
        y.resize({x.dim(0), out_});
        gemm_nn<T>(n, in_, out_, x.data(), st_->w.value.data(), y.data());
        detail::add_bias_rows(y.data(), n, st_->b.value.data(), out_);
    }

    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        const std::size_t n = static_cast<std::size_t>(x_.dim(0));
        detail::col_sum_acc(dy.data(), n, out_, st_->b.grad.data());
        gemm_tn_acc<T>(n, in_, out_, x_.data(), dy.data(), st_->w.grad.data());
        wt_.resize(st_->w.value.numel());
        transpose<T>(in_, out_, st_->w.value.data(), wt_.data());
        dx.resize(x_.shape);
        gemm_nn<T>(n, out_, in_, dy.data(), wt_.data(), dx.data());
    }

    std::vector<ParamTensor<T>*> params() override { return {&st_->w, &st_->b}; }

    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<Dense>(*this);
        c->x_ = Tensor<T>();
        c->wt_.clear();
        return c;
    }

private:
    int in_, out_;
    std::shared_ptr<State> st_;
    Tensor<T> x_;
    std::vector<T> wt_;
};

// ---------------------------------------------------------------------------
// Conv2d: 5x5 stride-2 convolution, TF-style SAME padding (out = ceil(in/s))
// ---------------------------------------------------------------------------

template <typename T>
class Conv2d : public Layer<T> {
public:
    struct State {
        ParamTensor<T> w, b; // w: (k*k*in_ch, out_ch)
        State(int in_ch, int out_ch, int k, Rng& rng, double init_sigma)
            : w({k * k * in_ch, out_ch}), b({out_ch}) {
            detail::init_normal(w.value, rng, init_sigma);
        }
    };

    Conv2d(int in_ch, int out_ch, int k, int stride, Rng& rng, double init_sigma = 0.02)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), s_(stride),
          st_(std::make_shared<State>(in_ch, out_ch, k, rng, init_sigma)) {}

    LayerInfo info() const override { return {"conv", in_ch_, out_ch_, k_, s_, 0.0, {}}; }

    static int out_size(int in, int s) { return (in + s - 1) / s; }
    static int pad_begin(int in, int out, int k, int s) {
        const int total = std::max((out - 1) * s + k - in, 0);
        return total / 2;
    }

    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        if (x.rank() != 4 || x.dim(3) != in_ch_)
            throw ValidationError("conv: expected NHWC with C=" + std::to_string(in_ch_) +
                                  ", got " + x.shape_str());
        n_ = x.dim(0); h_ = x.dim(1); w_ = x.dim(2);
        oh_ = out_size(h_, s_); ow_ = out_size(w_, s_);
        pad_ = pad_begin(h_, oh_, k_, s_);
        const std::size_t rows = static_cast<std::size_t>(n_) * oh_ * ow_;
        const int klen = k_ * k_ * in_ch_;
        cols_.resize(rows * klen);
        detail::im2col_gather(x.data(), n_, h_, w_, in_ch_, oh_, ow_, k_, s_, pad_, cols_.data());
        y.resize({n_, oh_, ow_, out_ch_});
        gemm_nn<T>(rows, klen, out_ch_, cols_.data(), st_->w.value.data(), y.data());
        detail::add_bias_rows(y.data(), rows, st_->b.value.data(), out_ch_);
    }

    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        const std::size_t rows = static_cast<std::size_t>(n_) * oh_ * ow_;
        const int klen = k_ * k_ * in_ch_;
        detail::col_sum_acc(dy.data(), rows, out_ch_, st_->b.grad.data());
        gemm_tn_acc<T>(rows, klen, out_ch_, cols_.data(), dy.data(), st_->w.grad.data());
        wt_.resize(st_->w.value.numel());
        transpose<T>(klen, out_ch_, st_->w.value.data(), wt_.data());
        dcols_.resize(rows * klen);
        gemm_nn<T>(rows, out_ch_, klen, dy.data(), wt_.data(), dcols_.data());
        dx.resize({n_, h_, w_, in_ch_});
        detail::col2im_scatter(dcols_.data(), n_, h_, w_, in_ch_, oh_, ow_, k_, s_, pad_,
                               dx.data());
    }

    std::vector<ParamTensor<T>*> params() override { return {&st_->w, &st_->b}; }

    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<Conv2d>(*this);
        c->cols_.clear();
        c->dcols_.clear();
        c->wt_.clear();
        return c;
    }

private:
    int in_ch_, out_ch_, k_, s_;
    std::shared_ptr<State> st_;
    int n_ = 0, h_ = 0, w_ = 0, oh_ = 0, ow_ = 0, pad_ = 0;
    std::vector<T> cols_, dcols_, wt_;
};

// ---------------------------------------------------------------------------
// ConvTranspose2d: 5x5 stride-2 upsampling, exact adjoint of the SAME conv
// that maps (2H -> H); output is exactly (2H, 2W).
// ---------------------------------------------------------------------------

template <typename T>
class ConvTranspose2d : public Layer<T> {
public:
    struct State {
        ParamTensor<T> w, b; // w: (in_ch, k*k*out_ch)
        State(int in_ch, int out_ch, int k, Rng& rng, double init_sigma)
            : w({in_ch, k * k * out_ch}), b({out_ch}) {
            detail::init_normal(w.value, rng, init_sigma);
        }
    };

    ConvTranspose2d(int in_ch, int out_ch, int k, int stride, Rng& rng, double init_sigma = 0.02)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), s_(stride),
          st_(std::make_shared<State>(in_ch, out_ch, k, rng, init_sigma)) {}

    LayerInfo info() const override { return {"convT", in_ch_, out_ch_, k_, s_, 0.0, {}}; }

    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        if (x.rank() != 4 || x.dim(3) != in_ch_)
            throw ValidationError("convT: expected NHWC with C=" + std::to_string(in_ch_) +
                                  ", got " + x.shape_str());
        n_ = x.dim(0); h_ = x.dim(1); w_ = x.dim(2);
        out_h_ = h_ * s_; out_w_ = w_ * s_;
        pad_ = Conv2d<T>::pad_begin(out_h_, h_, k_, s_);
        x_ = x;
        const std::size_t rows = static_cast<std::size_t>(n_) * h_ * w_;
        const int klen = k_ * k_ * out_ch_;
        cols_.resize(rows * klen);
        gemm_nn<T>(rows, in_ch_, klen, x.data(), st_->w.value.data(), cols_.data());
        y.resize({n_, out_h_, out_w_, out_ch_});
        detail::col2im_scatter(cols_.data(), n_, out_h_, out_w_, out_ch_, h_, w_, k_, s_, pad_,
                               y.data());
        detail::add_bias_rows(y.data(), static_cast<std::size_t>(n_) * out_h_ * out_w_,
                              st_->b.value.data(), out_ch_);
    }

    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        const std::size_t rows = static_cast<std::size_t>(n_) * h_ * w_;
        const int klen = k_ * k_ * out_ch_;
        detail::col_sum_acc(dy.data(), static_cast<std::size_t>(n_) * out_h_ * out_w_, out_ch_,
                            st_->b.grad.data());
        dcols_.resize(rows * klen);
        detail::im2col_gather(dy.data(), n_, out_h_, out_w_, out_ch_, h_, w_, k_, s_, pad_,
                              dcols_.data());
        gemm_tn_acc<T>(rows, in_ch_, klen, x_.data(), dcols_.data(), st_->w.grad.data());
        wt_.resize(st_->w.value.numel());
        transpose<T>(in_ch_, klen, st_->w.value.data(), wt_.data());
        dx.resize({n_, h_, w_, in_ch_});
        gemm_nn<T>(rows, klen, in_ch_, dcols_.data(), wt_.data(), dx.data());
    }

    std::vector<ParamTensor<T>*> params() override { return {&st_->w, &st_->b}; }

    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<ConvTranspose2d>(*this);
        c->x_ = Tensor<T>();
        c->cols_.clear();
        c->dcols_.clear();
        c->wt_.clear();
        return c;
    }

private:
    int in_ch_, out_ch_, k_, s_;
    std::shared_ptr<State> st_;
    int n_ = 0, h_ = 0, w_ = 0, out_h_ = 0, out_w_ = 0, pad_ = 0;
    Tensor<T> x_;
    std::vector<T> cols_, dcols_, wt_;
};

// ---------------------------------------------------------------------------
// BatchNorm over all axes but the last (per-channel). Training mode uses
// biased batch statistics and keeps exponential running averages for
// inference. Running stats live in shared state so Pioneer/Successor clones
// see one set.
// ---------------------------------------------------------------------------

template <typename T>
class BatchNorm : public Layer<T> {
public:
    struct State {
        ParamTensor<T> gamma, beta;
        Tensor<T> run_mean, run_var;
        explicit State(int ch)
            : gamma({ch}), beta({ch}), run_mean({ch}), run_var({ch}, T(1)) {
            gamma.value.fill(T(1));
        }
    };

    explicit BatchNorm(int ch, double momentum = 0.9, double eps = 1e-5)
        : ch_(ch), momentum_(static_cast<T>(momentum)), eps_(static_cast<T>(eps)),
          st_(std::make_shared<State>(ch)) {}

    LayerInfo info() const override { return {"batchnorm", ch_, ch_, 0, 0, 0.0, {}}; }

    void forward(const Tensor<T>& x, Tensor<T>& y, bool train, Rng&) override {
        if (x.dim(x.rank() - 1) != ch_)
            throw ValidationError("batchnorm: channel mismatch, expected " + std::to_string(ch_) +
                                  ", got " + x.shape_str());
        const std::size_t m = x.numel() / static_cast<std::size_t>(ch_);
        train_ = train;
        m_ = m;
        mean_.resize({ch_});
        inv_std_.resize({ch_});
        if (train) {
            mean_.zero();
            for (std::size_t r = 0; r < m; ++r) {
                const T* row = x.data() + r * ch_;
                for (int c = 0; c < ch_; ++c) mean_[static_cast<std::size_t>(c)] += row[c];
            }
            for (int c = 0; c < ch_; ++c) mean_[static_cast<std::size_t>(c)] /= static_cast<T>(m);
            var_.resize({ch_});
            var_.zero();
            for (std::size_t r = 0; r < m; ++r) {
                const T* row = x.data() + r * ch_;
                for (int c = 0; c < ch_; ++c) {
                    const T d = row[c] - mean_[static_cast<std::size_t>(c)];
                    var_[static_cast<std::size_t>(c)] += d * d;
                }
            }
            for (int c = 0; c < ch_; ++c) var_[static_cast<std::size_t>(c)] /= static_cast<T>(m);
            for (int c = 0; c < ch_; ++c) {
                st_->run_mean[static_cast<std::size_t>(c)] =
                    momentum_ * st_->run_mean[static_cast<std::size_t>(c)] +
                    (T(1) - momentum_) * mean_[static_cast<std::size_t>(c)];
                st_->run_var[static_cast<std::size_t>(c)] =
                    momentum_ * st_->run_var[static_cast<std::size_t>(c)] +
                    (T(1) - momentum_) * var_[static_cast<std::size_t>(c)];
            }
            for (int c = 0; c < ch_; ++c)
                inv_std_[static_cast<std::size_t>(c)] =
                    T(1) / std::sqrt(var_[static_cast<std::size_t>(c)] + eps_);
        } else {
            for (int c = 0; c < ch_; ++c) {
                mean_[static_cast<std::size_t>(c)] = st_->run_mean[static_cast<std::size_t>(c)];
                inv_std_[static_cast<std::size_t>(c)] =
                    T(1) / std::sqrt(st_->run_var[static_cast<std::size_t>(c)] + eps_);
            }
        }
        xhat_.resize(x.shape);
        y.resize(x.shape);
        for (std::size_t r = 0; r < m; ++r) {
            const T* row = x.data() + r * ch_;
            T* hr = xhat_.data() + r * ch_;
            T* yr = y.data() + r * ch_;
            for (int c = 0; c < ch_; ++c) {
                const std::size_t ci = static_cast<std::size_t>(c);
                hr[c] = (row[c] - mean_[ci]) * inv_std_[ci];
                yr[c] = st_->gamma.value[ci] * hr[c] + st_->beta.value[ci];
            }
        }
    }

    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        const std::size_t m = m_;
        dgsum_.resize({ch_});
        dbsum_.resize({ch_});
        dgsum_.zero();
        dbsum_.zero();
        for (std::size_t r = 0; r < m; ++r) {
            const T* dyr = dy.data() + r * ch_;
            const T* hr = xhat_.data() + r * ch_;
            for (int c = 0; c < ch_; ++c) {
                dgsum_[static_cast<std::size_t>(c)] += dyr[c] * hr[c];
                dbsum_[static_cast<std::size_t>(c)] += dyr[c];
            }
        }
        for (int c = 0; c < ch_; ++c) {
            st_->gamma.grad[static_cast<std::size_t>(c)] += dgsum_[static_cast<std::size_t>(c)];
            st_->beta.grad[static_cast<std::size_t>(c)] += dbsum_[static_cast<std::size_t>(c)];
        }
        dx.resize(xhat_.shape);
        if (train_) {
            // dx = g*istd * (dy - mean(dy) - xhat * mean(dy*xhat))
            for (std::size_t r = 0; r < m; ++r) {
                const T* dyr = dy.data() + r * ch_;
                const T* hr = xhat_.data() + r * ch_;
                T* dxr = dx.data() + r * ch_;
                for (int c = 0; c < ch_; ++c) {
                    const std::size_t ci = static_cast<std::size_t>(c);
                    const T gi = st_->gamma.value[ci] * inv_std_[ci];
                    dxr[c] = gi * (dyr[c] - dbsum_[ci] / static_cast<T>(m) -
                                   hr[c] * dgsum_[ci] / static_cast<T>(m));
                }
            }
        } else {
            for (std::size_t r = 0; r < m; ++r) {
                const T* dyr = dy.data() + r * ch_;
                T* dxr = dx.data() + r * ch_;
                for (int c = 0; c < ch_; ++c) {
                    const std::size_t ci = static_cast<std::size_t>(c);
                    dxr[c] = dyr[c] * st_->gamma.value[ci] * inv_std_[ci];
                }
            }
        }
    }

    std::vector<ParamTensor<T>*> params() override { return {&st_->gamma, &st_->beta}; }
    std::vector<Tensor<T>*> state_buffers() override {
        return {&st_->run_mean, &st_->run_var};
    }

    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<BatchNorm>(*this);
        c->xhat_ = Tensor<T>();
        return c;
    }

private:
    int ch_;
    T momentum_, eps_;
    std::shared_ptr<State> st_;
    bool train_ = true;
    std::size_t m_ = 0;
    Tensor<T> mean_, var_, inv_std_, xhat_, dgsum_, dbsum_;
};

// ---------------------------------------------------------------------------
// Activations and dropout
// ---------------------------------------------------------------------------

template <typename T>
class LeakyReLU : public Layer<T> {
public:
    explicit LeakyReLU(double slope = 0.2) : slope_(static_cast<T>(slope)) {}
    LayerInfo info() const override {
        return {"leaky_relu", 0, 0, 0, 0, static_cast<double>(slope_), {}};
    }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        y.resize(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i)
            y[i] = x[i] > T(0) ? x[i] : slope_ * x[i];
        y_ = y;
    }
    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        dx.resize(y_.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            dx[i] = dy[i] * (y_[i] > T(0) ? T(1) : slope_);
    }
    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<LeakyReLU>(*this);
        c->y_ = Tensor<T>();
        return c;
    }

private:
    T slope_;
    Tensor<T> y_;
};

template <typename T>
class Tanh : public Layer<T> {
public:
    LayerInfo info() const override { return {"tanh", 0, 0, 0, 0, 0.0, {}}; }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        y.resize(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
        y_ = y;
    }
    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        dx.resize(y_.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * (T(1) - y_[i] * y_[i]);
    }
    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<Tanh>(*this);
        c->y_ = Tensor<T>();
        return c;
    }

private:
    Tensor<T> y_;
};

template <typename T>
class Sigmoid : public Layer<T> {
public:
    LayerInfo info() const override { return {"sigmoid", 0, 0, 0, 0, 0.0, {}}; }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        y.resize(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
        y_ = y;
    }
    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        dx.resize(y_.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * y_[i] * (T(1) - y_[i]);
    }
    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<Sigmoid>(*this);
        c->y_ = Tensor<T>();
        return c;
    }

private:
    Tensor<T> y_;
};

// Inverted dropout: active only in train mode; identity at inference.
template <typename T>
class Dropout : public Layer<T> {
public:
    explicit Dropout(double rate) : rate_(static_cast<T>(rate)) {
        if (rate < 0.0 || rate >= 1.0) throw ValidationError("dropout rate must be in [0,1)");
    }
    LayerInfo info() const override {
        return {"dropout", 0, 0, 0, 0, static_cast<double>(rate_), {}};
    }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool train, Rng& rng) override {
        y.resize(x.shape);
        active_ = train && rate_ > T(0);
        if (!active_) {
            y = x;
            return;
        }
        mask_.resize(x.shape);
        const T keep_scale = T(1) / (T(1) - rate_);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            mask_[i] = static_cast<T>(rng.uniform01()) >= rate_ ? keep_scale : T(0);
            y[i] = x[i] * mask_[i];
        }
    }
    void backward(const Tensor<T>& dy, Tensor<T>& dx) override {
        dx.resize(dy.shape);
        if (!active_) {
            dx = dy;
            return;
        }
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * mask_[i];
    }
    std::shared_ptr<Layer<T>> clone_shared() const override {
        auto c = std::make_shared<Dropout>(*this);
        c->mask_ = Tensor<T>();
        return c;
    }

private:
    T rate_;
    bool active_ = false;
    Tensor<T> mask_;
};

// Reshape (N, ...) -> (N, tail...); backward restores the input shape.
template <typename T>
class Reshape : public Layer<T> {
public:
    explicit Reshape(std::vector<int> tail) : tail_(std::move(tail)) {}
    LayerInfo info() const override { return {"reshape", 0, 0, 0, 0, 0.0, tail_}; }
    void forward(const Tensor<T>& x, Tensor<T>& y, bool, Rng&) override {
        in_shape_ = x.shape;
        std::vector<int> s{x.dim(0)};
        s.insert(s.end(), tail_.begin(), tail_.end());
        if (Tensor<T>::count(s) != x.numel())
            throw ValidationError("reshape: incompatible target for input " + x.shape_str());
        y = x.reshaped(s);
    }
    void backward(const Tensor<T>& dy, Tensor<T>& dx) override { dx = dy.reshaped(in_shape_); }
    std::shared_ptr<Layer<T>> clone_shared() const override {
        return std::make_shared<Reshape>(*this);
    }

private:
    std::vector<int> tail_;
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Network: a layer pipeline with activation buffers reused across steps.
// ---------------------------------------------------------------------------

template <typename T>
class Network {
public:
    std::vector<std::shared_ptr<Layer<T>>> layers;

    const Tensor<T>& forward(const Tensor<T>& x, bool train, Rng& rng) {
        bufs_.resize(layers.size() + 1);
        bufs_[0] = x;
        for (std::size_t i = 0; i < layers.size(); ++i)
            layers[i]->forward(bufs_[i], bufs_[i + 1], train, rng);
        return bufs_.back();
    }

    // Seeds the chain with d(loss)/d(output); returns d(loss)/d(input).
    // Parameter gradients accumulate until zero_grad().
    Tensor<T> backward(const Tensor<T>& dout) {
        Tensor<T> d = dout;
        Tensor<T> dprev;
        for (std::size_t i = layers.size(); i-- > 0;) {
            layers[i]->backward(d, dprev);
            std::swap(d, dprev);
        }
        return d;
    }

    std::vector<ParamTensor<T>*> params() const {
        std::vector<ParamTensor<T>*> ps;
        for (const auto& l : layers)
            for (auto* p : l->params()) ps.push_back(p);
        return ps;
    }

    std::vector<Tensor<T>*> state_buffers() const {
        std::vector<Tensor<T>*> bs;
        for (const auto& l : layers)
            for (auto* b : l->state_buffers()) bs.push_back(b);
        return bs;
    }

    void zero_grad() {
        for (auto* p : params()) p->grad.zero();
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (auto* p : params()) n += p->value.numel();
        return n;
    }

    // Raw parameter bytes, used for byte-identity assertions and hashing.
    std::vector<unsigned char> param_bytes() const {
        std::vector<unsigned char> out;
        for (auto* p : params()) {
            const auto* src = reinterpret_cast<const unsigned char*>(p->value.data());
            out.insert(out.end(), src, src + p->value.numel() * sizeof(T));
        }
        return out;
    }

    // Same parameters and state buffers, fresh activation caches. Lets two
    // compositions (e.g. Pioneer and Successor holding one generator) run
    // forward/backward without clobbering each other's caches.
    Network clone_shared() const {
        Network c;
        c.layers.reserve(layers.size());
        for (const auto& l : layers) c.layers.push_back(l->clone_shared());
        return c;
    }

private:
    std::vector<Tensor<T>> bufs_;
};

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

template <typename T>
class Sgd {
public:
    explicit Sgd(std::vector<ParamTensor<T>*> params, T lr) : params_(std::move(params)), lr_(lr) {
        if (lr <= T(0)) throw ValidationError("sgd: learning rate must be > 0");
    }

    void step() {
        for (auto* p : params_)
            for (std::size_t i = 0; i < p->value.numel(); ++i) p->value[i] -= lr_ * p->grad[i];
    }

    T lr() const { return lr_; }
    void set_lr(T lr) { lr_ = lr; }

private:
    std::vector<ParamTensor<T>*> params_;
    T lr_;
};

template <typename T>
class Adam {
public:
    Adam(std::vector<ParamTensor<T>*> params, T lr, T beta1 = T(0.5), T beta2 = T(0.999),
         T eps = T(1e-8))
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= T(0)) throw ValidationError("adam: learning rate must be > 0");
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (auto* p : params_) {
            m_.emplace_back(p->value.shape);
            v_.emplace_back(p->value.shape);
        }
    }

    void step() {
        ++t_;
        const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            auto& p = *params_[pi];
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (std::size_t i = 0; i < p.value.numel(); ++i) {
                const T g = p.grad[i];
                m[i] = beta1_ * m[i] + (T(1) - beta1_) * g;
                v[i] = beta2_ * v[i] + (T(1) - beta2_) * g * g;
                const T mhat = m[i] / bc1;
                const T vhat = v[i] / bc2;
                p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    T lr() const { return lr_; }
    void set_lr(T lr) { lr_ = lr; }
    long step_count() const { return t_; }

    // Checkpoint access: moment buffers and step counter.
    std::vector<Tensor<T>>& moments1() { return m_; }
    std::vector<Tensor<T>>& moments2() { return v_; }
    void set_step_count(long t) { t_ = t; }

private:
    std::vector<ParamTensor<T>*> params_;
    T lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

} // namespace banis::nn
