#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "diffsr/diffusion.hpp"
#include "diffsr/image.hpp"
#include "diffsr/nn.hpp"
#include "diffsr/rng.hpp"
#include "diffsr/schedule.hpp"

namespace diffsr {

// Network shape knobs. The denoiser input is the noised image concatenated
// with the condition image along channels, so the stem sees
// 2 * image_channels. Every level's width must be divisible by the
// normalization group count (8), and inputs must be divisible by
// 2^(levels - 1) in both spatial extents.
struct ArchitectureConfig {
    int base_channels = 32;
    std::vector<int> channel_multipliers = {1, 2, 4};
    int num_res_blocks = 2;
    int time_embed_dim = 128;
    int image_channels = 3;

    int levels() const { return static_cast<int>(channel_multipliers.size()); }
    int spatial_divisor() const { return 1 << (levels() - 1); }
    int level_channels(int i) const { return base_channels * channel_multipliers[i]; }

    // Throws on invalid combinations (odd embed dim, widths not divisible
    // by the group count, ...).
    void validate() const;

    bool operator==(const ArchitectureConfig&) const = default;
};

constexpr int kNormGroups = 8;

// Sinusoidal features of the normalized timestep t/T: dim/2 pairs
// (sin(x * w_k), cos(x * w_k)) with w_k = pi * 10000^(2k / dim), interleaved
// sin-first.
std::vector<double> time_embedding(int t, const NoiseSchedule& schedule, int dim);

// One named weight tensor. `shape` is the logical shape (what checkpoints
// record); `v` holds the row-major values.
template <typename T>
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<T> v;

    std::size_t count() const { return v.size(); }
};

template <typename T>
struct ParamSet {
    std::vector<ParamTensor<T>> tensors;

    std::size_t total_count() const;
    int index_of(const std::string& name) const; // -1 when absent
};

template <typename T>
ParamSet<T> zeros_like(const ParamSet<T>& p);

struct UnetGraph;

// U-Net denoiser core: conv stem over the concatenated (noised, condition)
// input, residual blocks with additive timestep conditioning at each scale,
// stride-2 conv downsampling, one mid block, skip concatenation plus
// nearest-neighbor upsampling on the way back, and a zero-initialized
// output head. Templated so gradient checks can run in double while
// training runs in float.
template <typename ScalarT>
class UnetModel {
public:
    explicit UnetModel(ArchitectureConfig cfg);

    const ArchitectureConfig& config() const { return cfg_; }
    ParamSet<ScalarT>& params() { return params_; }
    const ParamSet<ScalarT>& params() const { return params_; }

    // Fills weights in registration order: uniform(-1/sqrt(fan_in),
    // +1/sqrt(fan_in)) for conv and linear weights, zeros for biases and the
    // head conv, ones/zeros for norm scale/offset. Only weight tensors
    // consume rng draws, so the stream is reproducible from the seed alone.
    void init_parameters(Rng rng);

    // Predicted clean batch for noised inputs x (n, C, H, W), conditions of
    // the same shape, and per-sample timesteps.
    nn::Tensor4<ScalarT> forward(const nn::Tensor4<ScalarT>& x,
                                 const nn::Tensor4<ScalarT>& cond,
                                 const std::vector<int>& t,
                                 const NoiseSchedule& schedule) const;

    // Mean absolute error against target plus the full parameter gradient
    // (accumulated into *grads, which must be zeros_like(params)).
    ScalarT loss_and_grad(const nn::Tensor4<ScalarT>& x, const nn::Tensor4<ScalarT>& cond,
                          const std::vector<int>& t, const NoiseSchedule& schedule,
                          const nn::Tensor4<ScalarT>& target,
                          ParamSet<ScalarT>* grads) const;

    // Parameter total computed from the config arithmetic alone, asserted
    // against the built tensors in tests.
    static std::size_t expected_param_count(const ArchitectureConfig& cfg);

private:
    ArchitectureConfig cfg_;
    std::shared_ptr<const UnetGraph> graph_;
    ParamSet<ScalarT> params_;
};

// Adapts a float UnetModel to the sampling interface: converts image
// tensors to batch-1 float tensors and back.
class UnetDenoiser : public Denoiser {
public:
    UnetDenoiser(std::shared_ptr<const UnetModel<float>> model, NoiseSchedule schedule);

    ImageTensor predict_x0(const ImageTensor& x_t, int t,
                           const ImageTensor& condition) const override;

private:
    std::shared_ptr<const UnetModel<float>> model_;
    NoiseSchedule schedule_;
};

ImageTensor tensor_to_image(const nn::Tensor4<float>& t, int sample, ValueRange range);
void image_to_tensor(const ImageTensor& img, nn::Tensor4<float>* t, int sample);

} // namespace diffsr
