#include "diffsr/unet.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "diffsr/error.hpp"

namespace diffsr {

void ArchitectureConfig::validate() const {
    if (base_channels <= 0) fail(ErrorCategory::usage, "base_channels must be positive");
    if (channel_multipliers.empty())
        fail(ErrorCategory::usage, "channel_multipliers must be non-empty");
    for (int m : channel_multipliers)
        if (m <= 0) fail(ErrorCategory::usage, "channel multipliers must be positive");
    if (num_res_blocks < 1)
        fail(ErrorCategory::usage, "num_res_blocks must be at least 1");
    if (time_embed_dim <= 0 || time_embed_dim % 2 != 0)
        fail(ErrorCategory::usage, "time_embed_dim must be positive and even");
    if (image_channels != 1 && image_channels != 3)
        fail(ErrorCategory::usage, "image_channels must be 1 or 3");
    if (base_channels % kNormGroups != 0)
        fail(ErrorCategory::usage, "base_channels must be divisible by the norm group count");
    for (int i = 0; i < levels(); ++i)
        if (level_channels(i) % kNormGroups != 0)
            fail(ErrorCategory::usage,
                 "every level width must be divisible by the norm group count");
}

std::vector<double> time_embedding(int t, const NoiseSchedule& schedule, int dim) {
    if (dim <= 0 || dim % 2 != 0)
        fail(ErrorCategory::usage, "embedding dimension must be positive and even");
    if (t < 0 || t > schedule.timesteps)
        fail(ErrorCategory::usage, "timestep outside the schedule range");
    double x = static_cast<double>(t) / schedule.timesteps;
    std::vector<double> e(dim);
    for (int k = 0; k < dim / 2; ++k) {
        double omega = std::numbers::pi * std::pow(10000.0, 2.0 * k / dim);
        e[2 * k] = std::sin(x * omega);
        e[2 * k + 1] = std::cos(x * omega);
    }
    return e;
}

template <typename T>
std::size_t ParamSet<T>::total_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.count();
    return n;
}

template <typename T>
int ParamSet<T>::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].name == name) return static_cast<int>(i);
    return -1;
}

template <typename T>
ParamSet<T> zeros_like(const ParamSet<T>& p) {
    ParamSet<T> z;
    z.tensors.reserve(p.tensors.size());
    for (const auto& t : p.tensors)
        z.tensors.push_back({t.name, t.shape, std::vector<T>(t.v.size(), T(0))});
    return z;
}

template struct ParamSet<float>;
template struct ParamSet<double>;
template ParamSet<float> zeros_like<float>(const ParamSet<float>&);
template ParamSet<double> zeros_like<double>(const ParamSet<double>&);

// ---------------------------------------------------------------------------
// Static graph description: parameter indices per layer, built once per
// config. Values are scalar-type independent.

namespace {

enum class InitKind { fan_in_uniform, zero, one };

struct ParamSpec {
    std::string name;
    std::vector<int> shape;
    InitKind kind;
    std::size_t count() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
    // Receptive field size feeding one output unit; the init bound is
    // 1/sqrt(fan_in).
    std::size_t fan_in() const {
        std::size_t n = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) n *= static_cast<std::size_t>(shape[i]);
        return n;
    }
};

struct ConvDef {
    int w = -1, b = -1;
    int co = 0, k = 3, stride = 1, pad = 1;
};

struct LinearDef {
    int w = -1, b = -1;
    int out = 0;
};

struct NormDef {
    int scale = -1, offset = -1;
};

struct ResBlockDef {
    NormDef norm1;
    ConvDef conv1;
    LinearDef embed;
    NormDef norm2;
    ConvDef conv2;
    ConvDef skip;
    bool has_skip = false;
};

} // namespace

struct UnetGraph {
    std::vector<ParamSpec> specs;
    LinearDef fc1, fc2;
    ConvDef stem;
    struct DownLevel {
        std::vector<ResBlockDef> blocks;
        ConvDef down;
        bool has_down = false;
    };
    struct UpLevel {
        std::vector<ResBlockDef> blocks;
        ConvDef up;
        bool has_up = false;
    };
    std::vector<DownLevel> down;  // index = level
    ResBlockDef mid;
    std::vector<UpLevel> up;      // index = level
    NormDef head_norm;
    ConvDef head_conv;
};

namespace {

struct GraphBuilder {
    UnetGraph g;

    int add(std::string name, std::vector<int> shape, InitKind kind) {
        g.specs.push_back({std::move(name), std::move(shape), kind});
        return static_cast<int>(g.specs.size()) - 1;
    }

    ConvDef conv(const std::string& prefix, int ci, int co, int k, int stride, int pad,
                 InitKind wkind = InitKind::fan_in_uniform) {
        ConvDef d;
        d.co = co;
        d.k = k;
        d.stride = stride;
        d.pad = pad;
        d.w = add(prefix + ".weight", {co, ci, k, k}, wkind);
        d.b = add(prefix + ".bias", {co}, InitKind::zero);
        return d;
    }

    LinearDef linear(const std::string& prefix, int in, int out) {
        LinearDef d;
        d.out = out;
        d.w = add(prefix + ".weight", {out, in}, InitKind::fan_in_uniform);
        d.b = add(prefix + ".bias", {out}, InitKind::zero);
        return d;
    }

    NormDef norm(const std::string& prefix, int c) {
        NormDef d;
        d.scale = add(prefix + ".scale", {c}, InitKind::one);
        d.offset = add(prefix + ".offset", {c}, InitKind::zero);
        return d;
    }

    ResBlockDef resblock(const std::string& prefix, int cin, int cout, int temb_dim) {
        ResBlockDef d;
        d.norm1 = norm(prefix + ".norm1", cin);
        d.conv1 = conv(prefix + ".conv1", cin, cout, 3, 1, 1);
        d.embed = linear(prefix + ".embed", temb_dim, cout);
        d.norm2 = norm(prefix + ".norm2", cout);
        d.conv2 = conv(prefix + ".conv2", cout, cout, 3, 1, 1);
        d.has_skip = cin != cout;
        if (d.has_skip) d.skip = conv(prefix + ".skip", cin, cout, 1, 1, 0);
        return d;
    }
};

std::shared_ptr<const UnetGraph> build_graph(const ArchitectureConfig& cfg) {
    cfg.validate();
    GraphBuilder b;
    int L = cfg.levels();
    int dim = cfg.time_embed_dim;

    b.g.fc1 = b.linear("time.fc1", dim, dim);
    b.g.fc2 = b.linear("time.fc2", dim, dim);
    b.g.stem = b.conv("stem", 2 * cfg.image_channels, cfg.base_channels, 3, 1, 1);

    b.g.down.resize(L);
    for (int i = 0; i < L; ++i) {
        int ci = cfg.level_channels(i);
        for (int r = 0; r < cfg.num_res_blocks; ++r) {
            int cin = r == 0 ? (i == 0 ? cfg.base_channels : cfg.level_channels(i - 1)) : ci;
            std::ostringstream name;
            name << "down" << i << ".block" << r;
            b.g.down[i].blocks.push_back(b.resblock(name.str(), cin, ci, dim));
        }
        if (i < L - 1) {
            std::ostringstream name;
            name << "down" << i << ".down";
            b.g.down[i].down = b.conv(name.str(), ci, ci, 3, 2, 1);
            b.g.down[i].has_down = true;
        }
    }

    int cm = cfg.level_channels(L - 1);
    b.g.mid = b.resblock("mid.block0", cm, cm, dim);

    b.g.up.resize(L);
    for (int i = L - 1; i >= 0; --i) {
        int ci = cfg.level_channels(i);
        for (int r = 0; r < cfg.num_res_blocks; ++r) {
            int cin = r == 0 ? 2 * ci : ci;
            std::ostringstream name;
            name << "up" << i << ".block" << r;
            b.g.up[i].blocks.push_back(b.resblock(name.str(), cin, ci, dim));
        }
        if (i > 0) {
            std::ostringstream name;
            name << "up" << i << ".up";
            b.g.up[i].up = b.conv(name.str(), ci, cfg.level_channels(i - 1), 3, 1, 1);
            b.g.up[i].has_up = true;
        }
    }

    b.g.head_norm = b.norm("head.norm", cfg.level_channels(0));
    b.g.head_conv =
        b.conv("head.conv", cfg.level_channels(0), cfg.image_channels, 3, 1, 1, InitKind::zero);

    return std::make_shared<const UnetGraph>(std::move(b.g));
}

// ---------------------------------------------------------------------------
// Tape execution. Forward ops run eagerly; when recording, each op pushes a
// closure that accumulates gradients, and closures run in reverse order.

template <typename T>
struct Node {
    nn::Tensor4<T> val;
    nn::Tensor4<T> grad;
};

template <typename T>
using Ref = std::shared_ptr<Node<T>>;

template <typename T>
struct Runner {
    const ParamSet<T>& P;
    ParamSet<T>* G;
    bool rec;
    std::vector<std::function<void()>> tape;

    Ref<T> node(nn::Tensor4<T> val) {
        auto n = std::make_shared<Node<T>>();
        n->val = std::move(val);
        if (rec) n->grad = nn::Tensor4<T>(n->val.n, n->val.c, n->val.h, n->val.w);
        return n;
    }
    const T* pw(int i) const { return P.tensors[i].v.data(); }
    T* gw(int i) const { return G ? G->tensors[i].v.data() : nullptr; }

    Ref<T> conv(Ref<T> x, const ConvDef& d) {
        auto y = node(nn::conv2d_forward(x->val, pw(d.w), pw(d.b), d.co, d.k, d.stride, d.pad));
        if (rec)
            tape.push_back([this, x, y, d] {
                nn::conv2d_backward(x->val, pw(d.w), d.co, d.k, d.stride, d.pad, y->grad,
                                    &x->grad, gw(d.w), gw(d.b));
            });
        return y;
    }

    Ref<T> gnorm(Ref<T> x, const NormDef& d) {
        auto cache = rec ? std::make_shared<nn::GroupNormCache<T>>() : nullptr;
        auto y = node(nn::group_norm_forward(x->val, pw(d.scale), pw(d.offset), kNormGroups,
                                             cache.get()));
        if (rec)
            tape.push_back([this, x, y, d, cache] {
                nn::group_norm_backward(pw(d.scale), *cache, y->grad, kNormGroups, &x->grad,
                                        gw(d.scale), gw(d.offset));
            });
        return y;
    }

    Ref<T> silu(Ref<T> x) {
        auto y = node(nn::silu_forward(x->val));
        if (rec)
            tape.push_back([x, y] { nn::silu_backward(x->val, y->grad, &x->grad); });
        return y;
    }

    Ref<T> linear(Ref<T> x, const LinearDef& d) {
        auto y = node(nn::linear_forward(x->val, pw(d.w), pw(d.b), d.out));
        if (rec)
            tape.push_back([this, x, y, d] {
                nn::linear_backward(x->val, pw(d.w), d.out, y->grad, &x->grad, gw(d.w),
                                    gw(d.b));
            });
        return y;
    }

    Ref<T> add(Ref<T> a, Ref<T> b) {
        auto y = node(nn::add(a->val, b->val));
        if (rec)
            tape.push_back([a, b, y] {
                for (std::size_t i = 0; i < y->grad.size(); ++i) {
                    a->grad.v[i] += y->grad.v[i];
                    b->grad.v[i] += y->grad.v[i];
                }
            });
        return y;
    }

    Ref<T> add_channel(Ref<T> x, Ref<T> e) {
        auto y = node(nn::add_channel_bias(x->val, e->val));
        if (rec)
            tape.push_back([x, e, y] {
                nn::add_channel_bias_backward(y->grad, &x->grad, &e->grad);
            });
        return y;
    }

    Ref<T> concat(Ref<T> a, Ref<T> b) {
        auto y = node(nn::concat_channels(a->val, b->val));
        int ca = a->val.c;
        if (rec)
            tape.push_back([a, b, y, ca] {
                nn::concat_channels_backward(y->grad, ca, &a->grad, &b->grad);
            });
        return y;
    }

    Ref<T> upsample(Ref<T> x) {
        auto y = node(nn::upsample2x_forward(x->val));
        if (rec)
            tape.push_back([x, y] { nn::upsample2x_backward(y->grad, &x->grad); });
        return y;
    }

    void backward() {
        for (auto it = tape.rbegin(); it != tape.rend(); ++it) (*it)();
    }
};

template <typename T>
Ref<T> run_resblock(Runner<T>& r, const ResBlockDef& d, Ref<T> h, Ref<T> emb_act) {
    auto a = r.conv(r.silu(r.gnorm(h, d.norm1)), d.conv1);
    a = r.add_channel(a, r.linear(emb_act, d.embed));
    a = r.conv(r.silu(r.gnorm(a, d.norm2)), d.conv2);
    auto sk = d.has_skip ? r.conv(h, d.skip) : h;
    return r.add(a, sk);
}

template <typename T>
Ref<T> run_unet(Runner<T>& r, const UnetGraph& g, const ArchitectureConfig& cfg,
                const nn::Tensor4<T>& x, const nn::Tensor4<T>& cond,
                const std::vector<int>& t, const NoiseSchedule& schedule) {
    if (x.c != cfg.image_channels)
        fail(ErrorCategory::shape, "input channel count does not match the architecture");
    if (!x.same_shape(cond))
        fail(ErrorCategory::shape, "condition shape does not match the noised input");
    if (static_cast<int>(t.size()) != x.n)
        fail(ErrorCategory::shape, "timestep count does not match the batch size");
    int div = cfg.spatial_divisor();
    if (x.h % div != 0 || x.w % div != 0)
        fail(ErrorCategory::shape, "input extent not divisible by the downsampling factor");

    nn::Tensor4<T> te(x.n, cfg.time_embed_dim, 1, 1);
    for (int i = 0; i < x.n; ++i) {
        auto e = time_embedding(t[i], schedule, cfg.time_embed_dim);
        for (int j = 0; j < cfg.time_embed_dim; ++j)
            te.v[static_cast<std::size_t>(i) * cfg.time_embed_dim + j] = static_cast<T>(e[j]);
    }
    auto emb_act = r.silu(r.linear(r.silu(r.linear(r.node(std::move(te)), g.fc1)), g.fc2));

    auto h = r.conv(r.node(nn::concat_channels(x, cond)), g.stem);
    std::vector<Ref<T>> skips;
    int L = cfg.levels();
    for (int i = 0; i < L; ++i) {
        for (const auto& blk : g.down[i].blocks) h = run_resblock(r, blk, h, emb_act);
        skips.push_back(h);
        if (g.down[i].has_down) h = r.conv(h, g.down[i].down);
    }
    h = run_resblock(r, g.mid, h, emb_act);
    for (int i = L - 1; i >= 0; --i) {
        h = r.concat(h, skips[i]);
        for (const auto& blk : g.up[i].blocks) h = run_resblock(r, blk, h, emb_act);
        if (g.up[i].has_up) h = r.conv(r.upsample(h), g.up[i].up);
    }
    return r.conv(r.silu(r.gnorm(h, g.head_norm)), g.head_conv);
}

} // namespace

template <typename ScalarT>
UnetModel<ScalarT>::UnetModel(ArchitectureConfig cfg) : cfg_(std::move(cfg)) {
    graph_ = build_graph(cfg_);
    params_.tensors.reserve(graph_->specs.size());
    for (const auto& s : graph_->specs)
        params_.tensors.push_back({s.name, s.shape, std::vector<ScalarT>(s.count(), ScalarT(0))});
}

template <typename ScalarT>
void UnetModel<ScalarT>::init_parameters(Rng rng) {
    for (std::size_t i = 0; i < graph_->specs.size(); ++i) {
        const auto& s = graph_->specs[i];
        auto& v = params_.tensors[i].v;
        switch (s.kind) {
        case InitKind::fan_in_uniform: {
            double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in()));
            for (auto& x : v)
                x = static_cast<ScalarT>((2.0 * rng.next_unit() - 1.0) * bound);
            break;
        }
        case InitKind::zero:
            break;
        case InitKind::one:
            for (auto& x : v) x = ScalarT(1);
            break;
        }
    }
}

template <typename ScalarT>
nn::Tensor4<ScalarT> UnetModel<ScalarT>::forward(const nn::Tensor4<ScalarT>& x,
                                                 const nn::Tensor4<ScalarT>& cond,
                                                 const std::vector<int>& t,
                                                 const NoiseSchedule& schedule) const {
    Runner<ScalarT> r{params_, nullptr, false, {}};
    return run_unet(r, *graph_, cfg_, x, cond, t, schedule)->val;
}

template <typename ScalarT>
ScalarT UnetModel<ScalarT>::loss_and_grad(const nn::Tensor4<ScalarT>& x,
                                          const nn::Tensor4<ScalarT>& cond,
                                          const std::vector<int>& t,
                                          const NoiseSchedule& schedule,
                                          const nn::Tensor4<ScalarT>& target,
                                          ParamSet<ScalarT>* grads) const {
    Runner<ScalarT> r{params_, grads, true, {}};
    auto out = run_unet(r, *graph_, cfg_, x, cond, t, schedule);
    ScalarT loss = nn::l1_loss(out->val, target);
    nn::l1_loss_backward(out->val, target, &out->grad);
    r.backward();
    return loss;
}

// Parameter total by direct arithmetic over the config: a 3x3 conv ci->co
// holds co*ci*9 + co values, a linear in->out holds out*in + out, a norm
// holds 2c, and a residual block cin->cout holds norm(cin) + conv3(cin,cout)
// + linear(dim,cout) + norm(cout) + conv3(cout,cout), plus a 1x1 conv
// (co*ci + co) when cin != cout.
template <typename ScalarT>
std::size_t UnetModel<ScalarT>::expected_param_count(const ArchitectureConfig& cfg) {
    auto conv_p = [](int ci, int co, int k) {
        return static_cast<std::size_t>(co) * ci * k * k + co;
    };
    auto lin_p = [](int in, int out) { return static_cast<std::size_t>(out) * in + out; };
    auto norm_p = [](int c) { return static_cast<std::size_t>(2) * c; };
    int dim = cfg.time_embed_dim;
    auto res_p = [&](int cin, int cout) {
        std::size_t n = norm_p(cin) + conv_p(cin, cout, 3) + lin_p(dim, cout) +
                        norm_p(cout) + conv_p(cout, cout, 3);
        if (cin != cout) n += conv_p(cin, cout, 1);
        return n;
    };

    std::size_t total = 2 * lin_p(dim, dim);
    total += conv_p(2 * cfg.image_channels, cfg.base_channels, 3);
    int L = cfg.levels();
    for (int i = 0; i < L; ++i) {
        int ci = cfg.level_channels(i);
        for (int r = 0; r < cfg.num_res_blocks; ++r) {
            int cin = r == 0 ? (i == 0 ? cfg.base_channels : cfg.level_channels(i - 1)) : ci;
            total += res_p(cin, ci);
        }
        if (i < L - 1) total += conv_p(ci, ci, 3);
    }
    total += res_p(cfg.level_channels(L - 1), cfg.level_channels(L - 1));
    for (int i = L - 1; i >= 0; --i) {
        int ci = cfg.level_channels(i);
        for (int r = 0; r < cfg.num_res_blocks; ++r)
            total += res_p(r == 0 ? 2 * ci : ci, ci);
        if (i > 0) total += conv_p(ci, cfg.level_channels(i - 1), 3);
    }
    total += norm_p(cfg.level_channels(0));
    total += conv_p(cfg.level_channels(0), cfg.image_channels, 3);
    return total;
}

template class UnetModel<float>;
template class UnetModel<double>;

// ---------------------------------------------------------------------------

ImageTensor tensor_to_image(const nn::Tensor4<float>& t, int sample, ValueRange range) {
    ImageTensor img(t.c, t.h, t.w, range);
    const float* src = t.sample(sample);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(src[i]);
    return img;
}

void image_to_tensor(const ImageTensor& img, nn::Tensor4<float>* t, int sample) {
    if (t->c != img.channels || t->h != img.height || t->w != img.width)
        fail(ErrorCategory::shape, "image does not fit the batch tensor slot");
    float* dst = t->sample(sample);
    for (std::size_t i = 0; i < img.data.size(); ++i) dst[i] = static_cast<float>(img.data[i]);
}

UnetDenoiser::UnetDenoiser(std::shared_ptr<const UnetModel<float>> model,
                           NoiseSchedule schedule)
    : model_(std::move(model)), schedule_(std::move(schedule)) {}

ImageTensor UnetDenoiser::predict_x0(const ImageTensor& x_t, int t,
                                     const ImageTensor& condition) const {
    if (!x_t.same_shape(condition))
        fail(ErrorCategory::shape, "condition shape does not match the latent");
    nn::Tensor4<float> xb(1, x_t.channels, x_t.height, x_t.width);
    nn::Tensor4<float> cb(1, x_t.channels, x_t.height, x_t.width);
    image_to_tensor(x_t, &xb, 0);
    image_to_tensor(condition, &cb, 0);
    auto out = model_->forward(xb, cb, {t}, schedule_);
    return tensor_to_image(out, 0, ValueRange::Signed);
}

} // namespace diffsr
