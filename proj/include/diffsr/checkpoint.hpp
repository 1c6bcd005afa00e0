#pragma once

#include <string>

#include "diffsr/unet.hpp"

namespace diffsr {

// Checkpoint container format (little-endian):
//   bytes 0..7   magic "DSRCKPT\0"
//   u32          format version (currently 1)
//   u32          metadata length, then that many bytes of "key=value\n" text
//                (architecture fields plus the schedule length `timesteps`)
//   u32          tensor count
//   per tensor:  u32 name length, name bytes, u32 ndim, u32 dims[ndim],
//                then prod(dims) float32 values
// Tensors appear in registration order, so same-config checkpoints are
// byte-comparable.
struct CheckpointMeta {
    ArchitectureConfig arch;
    int timesteps = 0;
};

struct Checkpoint {
    CheckpointMeta meta;
    ParamSet<float> params;
};

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamSet<float>& params);

Checkpoint load_checkpoint(const std::string& path);

// Builds a model from checkpoint metadata and fills its parameters,
// validating tensor names, order, and shapes against the architecture.
UnetModel<float> model_from_checkpoint(const Checkpoint& ckpt);

} // namespace diffsr
