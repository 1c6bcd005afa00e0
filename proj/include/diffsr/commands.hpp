#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffsr/training.hpp"
#include "diffsr/unet.hpp"

namespace diffsr {

// Condition source selection shared by the train/sample/cache commands.
struct ConditionOptions {
    bool external = false;
    std::string manifest; // id -> path mapping, required when external
};

struct MakeDatasetOptions {
    std::vector<std::string> inputs; // PNG files or directories
    std::string out_dir;
    int scale = 4;
    int patch = 0;  // HR patch edge; 0 keeps whole images
    int stride = 0; // HR stride; 0 means stride = patch
    int limit = 0;  // cap on emitted pairs; 0 = unlimited
};

struct CacheConditionsOptions {
    std::string dataset; // manifest path
    std::string cache_dir;
    ConditionOptions condition;
};

struct TrainOptions {
    std::string dataset;
    std::string out_dir;
    ArchitectureConfig arch; // image_channels 0 = infer from the data
    TrainConfig train;
    ConditionOptions condition;
    std::string condition_cache; // non-empty: load conditions from this dir
    std::string resume;          // non-empty: continue from this checkpoint
};

struct SampleOptions {
    std::string checkpoint;
    std::string dataset;
    std::string out_dir;
    int inference_steps = 100;
    std::uint64_t seed = 0;
    ConditionOptions condition;
    std::string condition_cache;
    std::vector<std::string> only_ids; // restrict output; ids keep their
                                       // full-manifest noise streams
};

struct EvalOptions {
    std::string dataset; // HR paths and ids come from here
    std::string sr_dir;  // holds <id>_sr.png files
    std::string report_path; // empty: stdout only
    bool use_y = false;
    int border = -1; // -1 = use the dataset scale
    std::string lpips_exe;
};

int cmd_make_dataset(const MakeDatasetOptions& opt);
int cmd_cache_conditions(const CacheConditionsOptions& opt);
int cmd_train(const TrainOptions& opt);
int cmd_sample(const SampleOptions& opt);
int cmd_eval(const EvalOptions& opt);

} // namespace diffsr
