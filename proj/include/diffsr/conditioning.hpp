#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "diffsr/image.hpp"

namespace diffsr {

// Where condition images come from:
//   bicubic  -> upscale the pair's LR image to HR size
//   external -> read a pre-super-resolved image per pair id from a manifest
//               of "id<TAB>path" rows
// Conditions are always passed through an 8-bit quantization so that a
// freshly computed condition and one loaded from the PNG cache are
// bit-identical.
class ConditionProvider {
public:
    static ConditionProvider bicubic();
    static ConditionProvider external(const std::string& manifest_path);

    // HR-sized condition in signed range.
    ImageTensor condition_for(const PatchPair& pair) const;

    bool is_external() const { return external_; }

private:
    ConditionProvider() = default;
    bool external_ = false;
    std::unordered_map<std::string, std::string> path_by_id_;
};

// Rounds unit-range samples to the 8-bit grid (v -> round(255 v)/255), the
// same mapping a PNG save/load round trip applies.
ImageTensor quantize_8bit(const ImageTensor& img);

// Materializes <cache_dir>/<id>.png for every pair. Existing files with the
// expected shape are left untouched, so reruns are cheap and byte-stable.
// Returns the number of files written.
int cache_conditions(const std::vector<PatchPair>& pairs, const ConditionProvider& provider,
                     const std::string& cache_dir);

// Loads a previously cached condition, validating its shape against the pair.
ImageTensor load_cached_condition(const std::string& cache_dir, const PatchPair& pair);

} // namespace diffsr
