#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diffsr/image.hpp"
#include "diffsr/rng.hpp"
#include "diffsr/schedule.hpp"
#include "diffsr/unet.hpp"

namespace diffsr {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment accumulators plus the number of completed updates.
template <typename T>
struct AdamState {
    ParamSet<T> m;
    ParamSet<T> v;
    std::int64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ParamSet<T>& params);

// One Adam update with bias correction:
//   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2;  k = step+1
//   theta -= lr * (m / (1 - b1^k)) / (sqrt(v / (1 - b2^k)) + eps)
template <typename T>
void adam_update(ParamSet<T>* params, const ParamSet<T>& grads, AdamState<T>* state,
                 const AdamConfig& cfg);

// One clean/condition pair, both in signed range and HR-sized.
struct TrainItem {
    ImageTensor x0;
    ImageTensor cond;
};

struct TrainConfig {
    int total_steps = 10000;
    int batch_size = 16;
    AdamConfig adam;
    int timesteps = 1000;       // schedule length T
    int log_every = 50;         // loss log granularity
    int checkpoint_every = 1000; // 0 disables periodic checkpoints
    std::uint64_t seed = 0;
};

// One optimization step over an explicit batch. Noise consumption order is
// pinned: for each batch element in order, one timestep draw
// (next_int_1_to(T)) followed by the per-element noise field (2 uniforms per
// value). Returns the batch loss.
double train_step(UnetModel<float>* model, AdamState<float>* adam, const AdamConfig& cfg,
                  const NoiseSchedule& schedule, const std::vector<const TrainItem*>& batch,
                  Rng* rng);

struct TrainLogRow {
    int step = 0;
    double loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    std::string final_checkpoint;
};

// Full loop over an in-memory dataset. Randomness derives from cfg.seed:
// fork(1) of the master stream drives the loop, consuming, per step,
// batch_size item-index draws (uniform with replacement) followed by
// train_step's per-item draws. (fork(0) is reserved for parameter init by
// the caller.) Writes loss_log.tsv, periodic ckpt-NNNNNN.ckpt files, and
// final.ckpt under out_dir; with total_steps = 0 only the initial state is
// checkpointed.
TrainResult train_loop(UnetModel<float>* model, const std::vector<TrainItem>& items,
                       const TrainConfig& cfg, const std::string& out_dir,
                       const std::function<void(const TrainLogRow&)>& on_log = nullptr);

} // namespace diffsr
