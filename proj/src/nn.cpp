#include "diffsr/nn.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>

#include "diffsr/error.hpp"

namespace diffsr::nn {

template <>
void gemm<float>(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
                 const float* a, int lda, const float* b, int ldb, float beta, float* c,
                 int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta,
                c, ldc);
}

template <>
void gemm<double>(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                  const double* a, int lda, const double* b, int ldb, double beta,
                  double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta,
                c, ldc);
}

namespace {

inline int conv_out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Unpacks one sample into a (ci*k*k) x (oh*ow) column matrix.
template <typename T>
void im2col(const T* x, int ci, int h, int w, int k, int stride, int pad, int oh, int ow,
            T* cols) {
    for (int c = 0; c < ci; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) *
                                    (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        std::memset(row + static_cast<std::size_t>(oy) * ow, 0,
                                    sizeof(T) * ow);
                        continue;
                    }
                    const T* src = x + (static_cast<std::size_t>(c) * h + iy) * w;
                    T* dst = row + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

// Scatter-adds a column matrix back onto one input sample.
template <typename T>
void col2im_add(const T* cols, int ci, int h, int w, int k, int stride, int pad, int oh,
                int ow, T* dx) {
    for (int c = 0; c < ci; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) *
                                          (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = dx + (static_cast<std::size_t>(c) * h + iy) * w;
                    const T* src = row + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

} // namespace

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const T* weights, const T* bias, int co,
                          int k, int stride, int pad) {
    int oh = conv_out_extent(x.h, k, stride, pad);
    int ow = conv_out_extent(x.w, k, stride, pad);
    if (oh <= 0 || ow <= 0) fail(ErrorCategory::shape, "convolution output is empty");
    Tensor4<T> y(x.n, co, oh, ow);
    int kk = x.c * k * k;
    int spatial = oh * ow;
    std::vector<T> cols(static_cast<std::size_t>(kk) * spatial);
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), x.c, x.h, x.w, k, stride, pad, oh, ow, cols.data());
        gemm<T>(false, false, co, spatial, kk, T(1), weights, kk, cols.data(), spatial,
                T(0), y.sample(i), spatial);
        if (bias) {
            T* out = y.sample(i);
            for (int c = 0; c < co; ++c)
                for (int s = 0; s < spatial; ++s)
                    out[static_cast<std::size_t>(c) * spatial + s] += bias[c];
        }
    }
    return y;
}

template <typename T>
void conv2d_backward(const Tensor4<T>& x, const T* weights, int co, int k, int stride,
                     int pad, const Tensor4<T>& dy, Tensor4<T>* dx, T* dweights, T* dbias) {
    int oh = dy.h, ow = dy.w;
    int kk = x.c * k * k;
    int spatial = oh * ow;
    std::vector<T> cols(static_cast<std::size_t>(kk) * spatial);
    std::vector<T> dcols(dx ? cols.size() : 0);
    for (int i = 0; i < x.n; ++i) {
        if (dweights || dx)
            im2col(x.sample(i), x.c, x.h, x.w, k, stride, pad, oh, ow, cols.data());
        if (dweights)
            gemm<T>(false, true, co, kk, spatial, T(1), dy.sample(i), spatial, cols.data(),
                    spatial, T(1), dweights, kk);
        if (dx) {
            gemm<T>(true, false, kk, spatial, co, T(1), weights, kk, dy.sample(i), spatial,
                    T(0), dcols.data(), spatial);
            col2im_add(dcols.data(), x.c, x.h, x.w, k, stride, pad, oh, ow, dx->sample(i));
        }
        if (dbias) {
            const T* g = dy.sample(i);
            for (int c = 0; c < co; ++c) {
                T acc = 0;
                for (int s = 0; s < spatial; ++s)
                    acc += g[static_cast<std::size_t>(c) * spatial + s];
                dbias[c] += acc;
            }
        }
    }
}

template <typename T>
Tensor4<T> group_norm_forward(const Tensor4<T>& x, const T* gamma, const T* beta,
                              int groups, GroupNormCache<T>* cache) {
    if (x.c % groups != 0)
        fail(ErrorCategory::shape, "channel count not divisible by group count");
    const T eps = static_cast<T>(1e-5);
    int per = x.c / groups;
    std::size_t gsize = static_cast<std::size_t>(per) * x.h * x.w;
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    if (cache) {
        cache->xhat.resize(x.size());
        cache->invstd.resize(static_cast<std::size_t>(x.n) * groups);
    }
    for (int i = 0; i < x.n; ++i) {
        for (int g = 0; g < groups; ++g) {
            const T* xs = x.sample(i) + static_cast<std::size_t>(g) * gsize;
            T mean = 0;
            for (std::size_t j = 0; j < gsize; ++j) mean += xs[j];
            mean /= static_cast<T>(gsize);
            T var = 0;
            for (std::size_t j = 0; j < gsize; ++j) {
                T d = xs[j] - mean;
                var += d * d;
            }
            var /= static_cast<T>(gsize);
            T invstd = T(1) / std::sqrt(var + eps);
            if (cache) cache->invstd[static_cast<std::size_t>(i) * groups + g] = invstd;
            T* ys = y.sample(i) + static_cast<std::size_t>(g) * gsize;
            T* xh = cache ? cache->xhat.data() + (x.sample(i) - x.v.data()) +
                                static_cast<std::size_t>(g) * gsize
                          : nullptr;
            std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
            for (int cc = 0; cc < per; ++cc) {
                int c = g * per + cc;
                for (std::size_t s = 0; s < hw; ++s) {
                    T norm = (xs[cc * hw + s] - mean) * invstd;
                    if (xh) xh[cc * hw + s] = norm;
                    ys[cc * hw + s] = norm * gamma[c] + beta[c];
                }
            }
        }
    }
    return y;
}

template <typename T>
void group_norm_backward(const T* gamma, const GroupNormCache<T>& cache,
                         const Tensor4<T>& dy, int groups, Tensor4<T>* dx, T* dgamma,
                         T* dbeta) {
    int per = dy.c / groups;
    std::size_t hw = static_cast<std::size_t>(dy.h) * dy.w;
    std::size_t gsize = static_cast<std::size_t>(per) * hw;
    for (int i = 0; i < dy.n; ++i) {
        const T* xh_s = cache.xhat.data() + static_cast<std::size_t>(i) * dy.sample_size();
        const T* dy_s = dy.sample(i);
        if (dgamma || dbeta) {
            for (int c = 0; c < dy.c; ++c) {
                T sg = 0, sb = 0;
                for (std::size_t s = 0; s < hw; ++s) {
                    sg += dy_s[c * hw + s] * xh_s[c * hw + s];
                    sb += dy_s[c * hw + s];
                }
                if (dgamma) dgamma[c] += sg;
                if (dbeta) dbeta[c] += sb;
            }
        }
        if (!dx) continue;
        // dx = invstd * (g - mean(g) - xhat * mean(g * xhat)), g = dy * gamma
        for (int g = 0; g < groups; ++g) {
            const T* xh = xh_s + static_cast<std::size_t>(g) * gsize;
            const T* dys = dy_s + static_cast<std::size_t>(g) * gsize;
            T invstd = cache.invstd[static_cast<std::size_t>(i) * groups + g];
            T mean_g = 0, mean_gx = 0;
            for (int cc = 0; cc < per; ++cc) {
                T gm = gamma[g * per + cc];
                for (std::size_t s = 0; s < hw; ++s) {
                    T gv = dys[cc * hw + s] * gm;
                    mean_g += gv;
                    mean_gx += gv * xh[cc * hw + s];
                }
            }
            mean_g /= static_cast<T>(gsize);
            mean_gx /= static_cast<T>(gsize);
            T* dxs = dx->sample(i) + static_cast<std::size_t>(g) * gsize;
            for (int cc = 0; cc < per; ++cc) {
                T gm = gamma[g * per + cc];
                for (std::size_t s = 0; s < hw; ++s) {
                    T gv = dys[cc * hw + s] * gm;
                    dxs[cc * hw + s] +=
                        invstd * (gv - mean_g - xh[cc * hw + s] * mean_gx);
                }
            }
        }
    }
}

template <typename T>
Tensor4<T> silu_forward(const Tensor4<T>& x) {
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    for (std::size_t i = 0; i < x.size(); ++i) {
        T s = T(1) / (T(1) + std::exp(-x.v[i]));
        y.v[i] = x.v[i] * s;
    }
    return y;
}

template <typename T>
void silu_backward(const Tensor4<T>& x, const Tensor4<T>& dy, Tensor4<T>* dx) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        T s = T(1) / (T(1) + std::exp(-x.v[i]));
        dx->v[i] += dy.v[i] * s * (T(1) + x.v[i] * (T(1) - s));
    }
}

template <typename T>
Tensor4<T> linear_forward(const Tensor4<T>& x, const T* weights, const T* bias, int out) {
    Tensor4<T> y(x.n, out, 1, 1);
    // y = x * W^T; x is n x in, W is out x in
    gemm<T>(false, true, x.n, out, x.c, T(1), x.v.data(), x.c, weights, x.c, T(0),
            y.v.data(), out);
    if (bias)
        for (int i = 0; i < x.n; ++i)
            for (int o = 0; o < out; ++o) y.v[static_cast<std::size_t>(i) * out + o] += bias[o];
    return y;
}

template <typename T>
void linear_backward(const Tensor4<T>& x, const T* weights, int out, const Tensor4<T>& dy,
                     Tensor4<T>* dx, T* dweights, T* dbias) {
    if (dx)
        gemm<T>(false, false, x.n, x.c, out, T(1), dy.v.data(), out, weights, x.c, T(1),
                dx->v.data(), x.c);
    if (dweights)
        gemm<T>(true, false, out, x.c, x.n, T(1), dy.v.data(), out, x.v.data(), x.c, T(1),
                dweights, x.c);
    if (dbias)
        for (int i = 0; i < x.n; ++i)
            for (int o = 0; o < out; ++o) dbias[o] += dy.v[static_cast<std::size_t>(i) * out + o];
}

template <typename T>
Tensor4<T> upsample2x_forward(const Tensor4<T>& x) {
    Tensor4<T> y(x.n, x.c, x.h * 2, x.w * 2);
    for (int i = 0; i < x.n; ++i)
        for (int c = 0; c < x.c; ++c)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx)
                    y.at(i, c, yy, xx) = x.at(i, c, yy / 2, xx / 2);
    return y;
}

template <typename T>
void upsample2x_backward(const Tensor4<T>& dy, Tensor4<T>* dx) {
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx)
                    dx->at(i, c, yy / 2, xx / 2) += dy.at(i, c, yy, xx);
}

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        fail(ErrorCategory::shape, "channel concat operands disagree on batch or extent");
    Tensor4<T> y(a.n, a.c + b.c, a.h, a.w);
    std::size_t hw = static_cast<std::size_t>(a.h) * a.w;
    for (int i = 0; i < a.n; ++i) {
        std::memcpy(y.sample(i), a.sample(i), sizeof(T) * a.c * hw);
        std::memcpy(y.sample(i) + a.c * hw, b.sample(i), sizeof(T) * b.c * hw);
    }
    return y;
}

template <typename T>
void concat_channels_backward(const Tensor4<T>& dy, int ca, Tensor4<T>* da, Tensor4<T>* db) {
    std::size_t hw = static_cast<std::size_t>(dy.h) * dy.w;
    int cb = dy.c - ca;
    for (int i = 0; i < dy.n; ++i) {
        const T* g = dy.sample(i);
        if (da) {
            T* d = da->sample(i);
            for (std::size_t j = 0; j < ca * hw; ++j) d[j] += g[j];
        }
        if (db) {
            T* d = db->sample(i);
            for (std::size_t j = 0; j < cb * hw; ++j) d[j] += g[ca * hw + j];
        }
    }
}

template <typename T>
Tensor4<T> add_channel_bias(const Tensor4<T>& x, const Tensor4<T>& e) {
    if (e.n != x.n || e.c != x.c || e.h != 1 || e.w != 1)
        fail(ErrorCategory::shape, "channel bias operand must be (n, c, 1, 1)");
    Tensor4<T> y = x;
    std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    for (int i = 0; i < x.n; ++i) {
        T* ys = y.sample(i);
        const T* es = e.sample(i);
        for (int c = 0; c < x.c; ++c)
            for (std::size_t s = 0; s < hw; ++s) ys[c * hw + s] += es[c];
    }
    return y;
}

template <typename T>
void add_channel_bias_backward(const Tensor4<T>& dy, Tensor4<T>* dx, Tensor4<T>* de) {
    std::size_t hw = static_cast<std::size_t>(dy.h) * dy.w;
    if (dx)
        for (std::size_t i = 0; i < dy.size(); ++i) dx->v[i] += dy.v[i];
    if (de)
        for (int i = 0; i < dy.n; ++i) {
            const T* g = dy.sample(i);
            T* d = de->sample(i);
            for (int c = 0; c < dy.c; ++c) {
                T acc = 0;
                for (std::size_t s = 0; s < hw; ++s) acc += g[c * hw + s];
                d[c] += acc;
            }
        }
}

template <typename T>
Tensor4<T> add(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (!a.same_shape(b)) fail(ErrorCategory::shape, "elementwise add shape mismatch");
    Tensor4<T> y = a;
    for (std::size_t i = 0; i < b.size(); ++i) y.v[i] += b.v[i];
    return y;
}

template <typename T>
T l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
    if (!pred.same_shape(target)) fail(ErrorCategory::shape, "loss shape mismatch");
    T acc = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred.v[i] - target.v[i]);
    return acc / static_cast<T>(pred.size());
}

template <typename T>
void l1_loss_backward(const Tensor4<T>& pred, const Tensor4<T>& target, Tensor4<T>* dpred) {
    T inv = T(1) / static_cast<T>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        T d = pred.v[i] - target.v[i];
        dpred->v[i] += d > 0 ? inv : (d < 0 ? -inv : T(0));
    }
}

#define DIFFSR_INSTANTIATE_NN(T)                                                          \
    template Tensor4<T> conv2d_forward<T>(const Tensor4<T>&, const T*, const T*, int,    \
                                          int, int, int);                                 \
    template void conv2d_backward<T>(const Tensor4<T>&, const T*, int, int, int, int,    \
                                     const Tensor4<T>&, Tensor4<T>*, T*, T*);             \
    template Tensor4<T> group_norm_forward<T>(const Tensor4<T>&, const T*, const T*,     \
                                              int, GroupNormCache<T>*);                  \
    template void group_norm_backward<T>(const T*, const GroupNormCache<T>&,             \
                                         const Tensor4<T>&, int, Tensor4<T>*, T*, T*);   \
    template Tensor4<T> silu_forward<T>(const Tensor4<T>&);                              \
    template void silu_backward<T>(const Tensor4<T>&, const Tensor4<T>&, Tensor4<T>*);   \
    template Tensor4<T> linear_forward<T>(const Tensor4<T>&, const T*, const T*, int);   \
    template void linear_backward<T>(const Tensor4<T>&, const T*, int, const Tensor4<T>&,\
                                     Tensor4<T>*, T*, T*);                                \
    template Tensor4<T> upsample2x_forward<T>(const Tensor4<T>&);                        \
    template void upsample2x_backward<T>(const Tensor4<T>&, Tensor4<T>*);                \
    template Tensor4<T> concat_channels<T>(const Tensor4<T>&, const Tensor4<T>&);        \
    template void concat_channels_backward<T>(const Tensor4<T>&, int, Tensor4<T>*,       \
                                              Tensor4<T>*);                              \
    template Tensor4<T> add_channel_bias<T>(const Tensor4<T>&, const Tensor4<T>&);       \
    template void add_channel_bias_backward<T>(const Tensor4<T>&, Tensor4<T>*,           \
                                               Tensor4<T>*);                             \
    template Tensor4<T> add<T>(const Tensor4<T>&, const Tensor4<T>&);                    \
    template T l1_loss<T>(const Tensor4<T>&, const Tensor4<T>&);                         \
    template void l1_loss_backward<T>(const Tensor4<T>&, const Tensor4<T>&, Tensor4<T>*);

DIFFSR_INSTANTIATE_NN(float)
DIFFSR_INSTANTIATE_NN(double)

} // namespace diffsr::nn
