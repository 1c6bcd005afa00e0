#include "diffsr/diffusion.hpp"

#include <string>

#include "diffsr/error.hpp"

namespace diffsr {

LatentState forward_diffuse(const ImageTensor& x0, int t, const NoiseDraw& eps,
                            const NoiseSchedule& schedule) {
    if (x0.range != ValueRange::Signed)
        fail(ErrorCategory::shape, "forward_diffuse expects a signed-range x0");
    if (t < 1 || t > schedule.timesteps)
        fail(ErrorCategory::usage, "forward_diffuse timestep out of range: " + std::to_string(t));
    if (eps.eps.size() != x0.size())
        fail(ErrorCategory::shape, "noise draw size does not match image");

    const double a = schedule.alpha[t], s = schedule.sigma[t];
    LatentState st;
    st.t = t;
    st.x = x0;
    for (std::size_t i = 0; i < st.x.data.size(); ++i)
        st.x.data[i] = a * x0.data[i] + s * eps.eps[i];
    return st;
}

ImageTensor estimate_noise(const LatentState& state, const ImageTensor& x0_hat,
                           const NoiseSchedule& schedule) {
    if (state.t < 1 || state.t > schedule.timesteps)
        fail(ErrorCategory::usage, "estimate_noise requires 1 <= t <= T (sigma_0 = 0)");
    if (!state.x.same_shape(x0_hat))
        fail(ErrorCategory::shape, "latent and x0 prediction shapes differ");

    const double a = schedule.alpha[state.t], s = schedule.sigma[state.t];
    ImageTensor z = state.x;
    for (std::size_t i = 0; i < z.data.size(); ++i)
        z.data[i] = (state.x.data[i] - a * x0_hat.data[i]) / s;
    return z;
}

LatentState ddim_step(const LatentState& state, const ImageTensor& x0_hat, int t_prev,
                      const NoiseSchedule& schedule) {
    if (state.t < 1 || state.t > schedule.timesteps)
        fail(ErrorCategory::usage, "ddim_step requires 1 <= t <= T");
    if (t_prev < 0 || t_prev >= state.t)
        fail(ErrorCategory::usage, "ddim_step requires 0 <= t_prev < t");
    if (!state.x.same_shape(x0_hat))
        fail(ErrorCategory::shape, "latent and x0 prediction shapes differ");

    const double a_t = schedule.alpha[state.t], s_t = schedule.sigma[state.t];
    const double a_p = schedule.alpha[t_prev], s_p = schedule.sigma[t_prev];

    LatentState out;
    out.t = t_prev;
    out.x = x0_hat;
    out.x.range = ValueRange::Signed;
    for (std::size_t i = 0; i < out.x.data.size(); ++i) {
        const double z = (state.x.data[i] - a_t * x0_hat.data[i]) / s_t;
        out.x.data[i] = a_p * x0_hat.data[i] + s_p * z;
    }
    return out;
}

ImageTensor sample(const Denoiser& denoiser, const ImageTensor& condition,
                   const NoiseSchedule& schedule, const TimestepSubsequence& steps,
                   std::uint64_t seed) {
    if (condition.range != ValueRange::Signed)
        fail(ErrorCategory::shape, "sample expects a signed-range condition image");
    if (steps.steps.empty() || steps.steps.front() != schedule.timesteps)
        fail(ErrorCategory::usage, "timestep subsequence must start at T");

    LatentState state;
    state.t = schedule.timesteps;
    state.x = ImageTensor(condition.channels, condition.height, condition.width,
                          ValueRange::Signed);
    const NoiseDraw init = make_noise_draw(Rng(seed), 0, state.x.size());
    state.x.data = init.eps;

    ImageTensor x0_hat;
    for (std::size_t i = 0; i < steps.steps.size(); ++i) {
        const int t = steps.steps[i];
        const int t_prev = (i + 1 < steps.steps.size()) ? steps.steps[i + 1] : 0;
        x0_hat = denoiser.predict_x0(state.x, t, condition);
        if (!x0_hat.same_shape(condition))
            fail(ErrorCategory::shape, "denoiser output shape does not match condition");
        state = ddim_step(state, x0_hat, t_prev, schedule);
    }
    // state.x now equals the terminal x0_hat (alpha_0 = 1, sigma_0 = 0).
    return clamp_to_range(state.x);
}

} // namespace diffsr
