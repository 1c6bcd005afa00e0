#pragma once

#include <cstddef>
#include <vector>

namespace diffsr::nn {

// Dense NCHW activation tensor. Parameters are passed to the primitives as
// raw arrays with explicit dimensions.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

    std::size_t size() const { return v.size(); }
    std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
    T* sample(int i) { return v.data() + i * sample_size(); }
    const T* sample(int i) const { return v.data() + i * sample_size(); }
    T& at(int ni, int ci, int y, int x) {
        return v[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
    }
    T at(int ni, int ci, int y, int x) const {
        return v[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
    }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C. Dispatches to
// cblas_{s,d}gemm.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

// All backward primitives ACCUMULATE (+=) into their output buffers, which
// the caller supplies pre-zeroed (or pre-accumulated). Any gradient output
// pointer may be null to skip that gradient.

// -- 2-D convolution, square kernel, zero padding --------------------------
// weights: co x ci x k x k (row-major), bias: co (may be null).
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const T* weights, const T* bias, int co,
                          int k, int stride, int pad);

template <typename T>
void conv2d_backward(const Tensor4<T>& x, const T* weights, int co, int k, int stride,
                     int pad, const Tensor4<T>& dy, Tensor4<T>* dx, T* dweights, T* dbias);

// -- Group normalization ----------------------------------------------------
// gamma/beta: per-channel scale/offset. Saves normalized values and inverse
// stddevs for the backward pass. eps = 1e-5.
template <typename T>
struct GroupNormCache {
    std::vector<T> xhat;   // normalized input, same layout as x
    std::vector<T> invstd; // n * groups
};

template <typename T>
Tensor4<T> group_norm_forward(const Tensor4<T>& x, const T* gamma, const T* beta,
                              int groups, GroupNormCache<T>* cache);

template <typename T>
void group_norm_backward(const T* gamma, const GroupNormCache<T>& cache,
                         const Tensor4<T>& dy, int groups, Tensor4<T>* dx, T* dgamma,
                         T* dbeta);

// -- SiLU (x * sigmoid(x)) ---------------------------------------------------
template <typename T>
Tensor4<T> silu_forward(const Tensor4<T>& x);

template <typename T>
void silu_backward(const Tensor4<T>& x, const Tensor4<T>& dy, Tensor4<T>* dx);

// -- Fully connected over (N, D, 1, 1) tensors -------------------------------
// weights: out x in (row-major), bias: out (may be null).
template <typename T>
Tensor4<T> linear_forward(const Tensor4<T>& x, const T* weights, const T* bias, int out);

template <typename T>
void linear_backward(const Tensor4<T>& x, const T* weights, int out, const Tensor4<T>& dy,
                     Tensor4<T>* dx, T* dweights, T* dbias);

// -- Nearest-neighbor 2x upsampling ------------------------------------------
template <typename T>
Tensor4<T> upsample2x_forward(const Tensor4<T>& x);

template <typename T>
void upsample2x_backward(const Tensor4<T>& dy, Tensor4<T>* dx);

// -- Channel concat / per-channel bias / elementwise add ----------------------
template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b);

template <typename T>
void concat_channels_backward(const Tensor4<T>& dy, int ca, Tensor4<T>* da, Tensor4<T>* db);

// e is (N, C, 1, 1); broadcast-added over the spatial extent of x.
template <typename T>
Tensor4<T> add_channel_bias(const Tensor4<T>& x, const Tensor4<T>& e);

template <typename T>
void add_channel_bias_backward(const Tensor4<T>& dy, Tensor4<T>* dx, Tensor4<T>* de);

template <typename T>
Tensor4<T> add(const Tensor4<T>& a, const Tensor4<T>& b);

// -- Mean absolute error -----------------------------------------------------
// loss = mean(|pred - target|); d(pred) = sign(pred - target)/count with
// sign(0) = 0 (the L1 subgradient at ties).
template <typename T>
T l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target);

template <typename T>
void l1_loss_backward(const Tensor4<T>& pred, const Tensor4<T>& target, Tensor4<T>* dpred);

} // namespace diffsr::nn
