#pragma once

#include <cstdint>

#include "diffsr/image.hpp"
#include "diffsr/rng.hpp"
#include "diffsr/schedule.hpp"

namespace diffsr {

// A latent x_t tagged with its timestep index.
struct LatentState {
    ImageTensor x; // signed range; values may exceed [-1,1] (never clamped)
    int t = 0;
};

// Conditional denoiser interface: predicts the clean image x0 from a noisy
// latent, its timestep, and the condition image. Implementations must be
// deterministic and safe for concurrent read-only use.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual ImageTensor predict_x0(const ImageTensor& x_t, int t,
                                   const ImageTensor& condition) const = 0;
};

// Test double that ignores its inputs and always returns a fixed image.
class OracleDenoiser : public Denoiser {
public:
    explicit OracleDenoiser(ImageTensor ground_truth) : truth_(std::move(ground_truth)) {}
    ImageTensor predict_x0(const ImageTensor&, int, const ImageTensor&) const override {
        return truth_;
    }

private:
    ImageTensor truth_;
};

// x_t = alpha_t * x0 + sigma_t * eps, elementwise. Result is not clamped.
LatentState forward_diffuse(const ImageTensor& x0, int t, const NoiseDraw& eps,
                            const NoiseSchedule& schedule);

// z_hat = (x_t - alpha_t * x0_hat) / sigma_t. Requires t >= 1 (sigma_0 = 0).
ImageTensor estimate_noise(const LatentState& state, const ImageTensor& x0_hat,
                           const NoiseSchedule& schedule);

// Deterministic denoise update from t to t_prev (0 <= t_prev < t):
//   x_prev = alpha_prev * x0_hat + sigma_prev * z_hat
// At t_prev = 0 this reduces to x0_hat exactly.
LatentState ddim_step(const LatentState& state, const ImageTensor& x0_hat, int t_prev,
                      const NoiseSchedule& schedule);

// Full deterministic sampling run: draws x_T ~ N(0,1) from the seed (the
// only noise draw of the whole process), walks the timestep subsequence
// down to 0, and returns the terminal x0 prediction clamped to [-1,1].
ImageTensor sample(const Denoiser& denoiser, const ImageTensor& condition,
                   const NoiseSchedule& schedule, const TimestepSubsequence& steps,
                   std::uint64_t seed);

} // namespace diffsr
