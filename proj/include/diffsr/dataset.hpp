#pragma once

#include <string>
#include <vector>

#include "diffsr/image.hpp"

namespace diffsr {

// One dataset manifest row: tab-separated "hr_path<TAB>lr_path<TAB>scale".
// Relative paths are resolved against the manifest's directory.
struct DatasetEntry {
    std::string hr_path;
    std::string lr_path;
    int scale = 0;
};

std::vector<DatasetEntry> read_dataset_manifest(const std::string& path);
void write_dataset_manifest(const std::string& path, const std::vector<DatasetEntry>& entries);

// Pair id: the HR filename stem with a trailing "_hr" stripped
// ("birds/0042_hr.png" -> "0042").
std::string id_from_hr_path(const std::string& hr_path);

// Loads both images (unit range) and validates hr dims = scale * lr dims.
PatchPair load_pair(const DatasetEntry& entry);

} // namespace diffsr
