#include "diffsr/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "diffsr/checkpoint.hpp"
#include "diffsr/diffusion.hpp"
#include "diffsr/error.hpp"

namespace diffsr {

template <typename T>
AdamState<T> make_adam_state(const ParamSet<T>& params) {
    AdamState<T> s;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    return s;
}

template <typename T>
void adam_update(ParamSet<T>* params, const ParamSet<T>& grads, AdamState<T>* state,
                 const AdamConfig& cfg) {
    if (params->tensors.size() != grads.tensors.size())
        fail(ErrorCategory::shape, "gradient set does not match the parameter set");
    std::int64_t k = state->step + 1;
    T b1 = static_cast<T>(cfg.beta1);
    T b2 = static_cast<T>(cfg.beta2);
    T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(k)));
    T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(k)));
    T lr = static_cast<T>(cfg.lr);
    T eps = static_cast<T>(cfg.eps);
    for (std::size_t i = 0; i < params->tensors.size(); ++i) {
        auto& p = params->tensors[i].v;
        const auto& g = grads.tensors[i].v;
        auto& m = state->m.tensors[i].v;
        auto& v = state->v.tensors[i].v;
        if (p.size() != g.size())
            fail(ErrorCategory::shape,
                 "gradient tensor size mismatch at " + params->tensors[i].name);
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (T(1) - b1) * g[j];
            v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
            T mhat = m[j] / c1;
            T vhat = v[j] / c2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    state->step = k;
}

template AdamState<float> make_adam_state<float>(const ParamSet<float>&);
template AdamState<double> make_adam_state<double>(const ParamSet<double>&);
template void adam_update<float>(ParamSet<float>*, const ParamSet<float>&,
                                 AdamState<float>*, const AdamConfig&);
template void adam_update<double>(ParamSet<double>*, const ParamSet<double>&,
                                  AdamState<double>*, const AdamConfig&);

double train_step(UnetModel<float>* model, AdamState<float>* adam, const AdamConfig& cfg,
                  const NoiseSchedule& schedule, const std::vector<const TrainItem*>& batch,
                  Rng* rng) {
    if (batch.empty()) fail(ErrorCategory::usage, "empty training batch");
    const ImageTensor& first = batch[0]->x0;
    if (first.channels != model->config().image_channels)
        fail(ErrorCategory::shape, "training item channel count does not match the model");
    int n = static_cast<int>(batch.size());
    nn::Tensor4<float> x(n, first.channels, first.height, first.width);
    nn::Tensor4<float> cond(n, first.channels, first.height, first.width);
    nn::Tensor4<float> target(n, first.channels, first.height, first.width);
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) {
        const TrainItem& item = *batch[i];
        if (!item.x0.same_shape(first))
            fail(ErrorCategory::shape, "training batch items disagree on shape");
        if (!item.x0.same_shape(item.cond))
            fail(ErrorCategory::shape, "condition shape does not match the clean image");
        t[i] = rng->next_int_1_to(schedule.timesteps);
        NoiseDraw eps;
        eps.key = rng->key();
        eps.eps.resize(item.x0.size());
        for (auto& e : eps.eps) e = rng->next_normal();
        LatentState noised = forward_diffuse(item.x0, t[i], eps, schedule);
        image_to_tensor(noised.x, &x, i);
        image_to_tensor(item.cond, &cond, i);
        image_to_tensor(item.x0, &target, i);
    }
    ParamSet<float> grads = zeros_like(model->params());
    float loss = model->loss_and_grad(x, cond, t, schedule, target, &grads);
    adam_update(&model->params(), grads, adam, cfg);
    return static_cast<double>(loss);
}

TrainResult train_loop(UnetModel<float>* model, const std::vector<TrainItem>& items,
                       const TrainConfig& cfg, const std::string& out_dir,
                       const std::function<void(const TrainLogRow&)>& on_log) {
    if (items.empty()) fail(ErrorCategory::usage, "training dataset is empty");
    if (cfg.batch_size < 1) fail(ErrorCategory::usage, "batch_size must be positive");
    if (cfg.total_steps < 0) fail(ErrorCategory::usage, "total_steps must be non-negative");
    if (cfg.log_every < 1) fail(ErrorCategory::usage, "log_every must be positive");
    std::filesystem::create_directories(out_dir);

    NoiseSchedule schedule = make_cosine_schedule(cfg.timesteps);
    AdamState<float> adam = make_adam_state(model->params());
    Rng loop_rng = Rng(cfg.seed).fork(1);

    CheckpointMeta meta{model->config(), cfg.timesteps};
    auto ckpt_path = [&](int step) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "ckpt-%06d.ckpt", step);
        return (std::filesystem::path(out_dir) / buf).string();
    };

    std::ofstream log_file(std::filesystem::path(out_dir) / "loss_log.tsv", std::ios::trunc);
    if (!log_file) fail(ErrorCategory::io, "cannot write loss log in " + out_dir);
    log_file << "step\tloss\tseconds\n";

    TrainResult result;
    auto t0 = std::chrono::steady_clock::now();
    auto emit = [&](int step, double loss) {
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        TrainLogRow row{step, loss, secs};
        char line[96];
        std::snprintf(line, sizeof(line), "%d\t%.8f\t%.3f\n", step, loss, secs);
        log_file << line;
        log_file.flush();
        result.log.push_back(row);
        if (on_log) on_log(row);
    };

    int n = static_cast<int>(items.size());
    for (int step = 1; step <= cfg.total_steps; ++step) {
        // Per step: batch_size index draws, then train_step's per-item
        // timestep and noise draws, all from the same stream.
        std::vector<const TrainItem*> batch;
        batch.reserve(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i)
            batch.push_back(&items[loop_rng.next_int_1_to(n) - 1]);
        double loss = train_step(model, &adam, cfg.adam, schedule, batch, &loop_rng);
        if (step % cfg.log_every == 0 || step == cfg.total_steps) emit(step, loss);
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
            save_checkpoint(ckpt_path(step), meta, model->params());
    }

    result.final_checkpoint = (std::filesystem::path(out_dir) / "final.ckpt").string();
    save_checkpoint(result.final_checkpoint, meta, model->params());
    return result;
}

} // namespace diffsr
